use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} when evaluating {what} at {abscissa}")]
    Evaluation {
        what: &'static str,
        abscissa: f64,
        value: f64,
    },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("admissibility error: {0}")]
    Admissibility(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("solver did not converge: {message} (residual history tail: {history:?})")]
    Solver { message: String, history: Vec<f64> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("at epsilon = {epsilon:e}: {source}")]
    Rung {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn at_rung(self, epsilon: f64) -> Self {
        Error::Rung {
            epsilon,
            source: Box::new(self),
        }
    }
}
