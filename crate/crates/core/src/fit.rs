//! Least-squares extraction of asymptotic constants from an ε-ladder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = A|log ε| + B`, coefficients `[A, B]`.
    AffineLog,
    /// `y = c + c₁/|log ε|`, coefficients `[c, c₁]`.
    AffineInvLog,
    /// `y = c ε²|log ε| + c' ε²`, coefficients `[c, c']`, fitted with
    /// relative weights `1/(ε²|log ε|)`.
    EpsSquaredLog,
}

impl FitModel {
    pub fn name(self) -> &'static str {
        match self {
            Self::AffineLog => "affine_log",
            Self::AffineInvLog => "affine_inv_log",
            Self::EpsSquaredLog => "eps_squared_log",
        }
    }

    fn regressors(self, eps: f64) -> Vec<f64> {
        let l = eps.ln().abs();
        match self {
            Self::AffineLog => vec![l, 1.0],
            Self::AffineInvLog => vec![1.0, 1.0 / l],
            Self::EpsSquaredLog => vec![eps * eps * l, eps * eps],
        }
    }

    fn weight(self, eps: f64) -> f64 {
        match self {
            Self::EpsSquaredLog => 1.0 / (eps * eps * eps.ln().abs()),
            _ => 1.0,
        }
    }

    /// The constant the model extrapolates to: the leading coefficient.
    pub fn limit(self, coefficients: &[f64]) -> f64 {
        coefficients[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRung {
    pub epsilon: f64,
    pub value: f64,
    pub fitted: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub rungs: Vec<FitRung>,
}

impl FitResult {
    pub fn limit(&self) -> f64 {
        self.model.limit(&self.coefficients)
    }

    pub fn predict(&self, eps: f64) -> f64 {
        self.model
            .regressors(eps)
            .iter()
            .zip(&self.coefficients)
            .map(|(x, c)| x * c)
            .sum()
    }
}

/// Fit `(ε, y)` pairs to `model`. Needs one more rung than parameters.
pub fn fit_asymptote(points: &[(f64, f64)], model: FitModel) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::Fit(format!(
            "{} needs at least 3 rungs, got {}",
            model.name(),
            points.len()
        )));
    }
    if let Some(&(e, _)) = points.iter().find(|(e, y)| !(*e > 0.0 && *e < 1.0) || !y.is_finite()) {
        return Err(Error::Fit(format!("rung ε = {e} unusable")));
    }
    let rows: Vec<Vec<f64>> = points.iter().map(|(e, _)| model.regressors(*e)).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
    let weights: Vec<f64> = points.iter().map(|(e, _)| model.weight(*e)).collect();
    let coefficients = least_squares(&rows, &ys, Some(&weights))
        .ok_or_else(|| Error::Fit(format!("{} design matrix is rank deficient", model.name())))?;
    let mut result = FitResult {
        model,
        coefficients,
        residual_norm: 0.0,
        rungs: Vec::with_capacity(points.len()),
    };
    let mut ss = 0.0;
    for &(epsilon, value) in points {
        let fitted = result.predict(epsilon);
        let residual = value - fitted;
        ss += residual * residual;
        result.rungs.push(FitRung {
            epsilon,
            value,
            fitted,
            residual,
        });
    }
    result.residual_norm = ss.sqrt();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladder() -> Vec<f64> {
        (4..=14).map(|k| 2f64.powi(-k)).collect()
    }

    #[test]
    fn recovers_inverse_log_model() {
        let pts: Vec<(f64, f64)> = ladder()
            .into_iter()
            .map(|e| (e, 2.0 / 3.0 - 0.5 / e.ln().abs()))
            .collect();
        let f = fit_asymptote(&pts, FitModel::AffineInvLog).unwrap();
        assert!((f.coefficients[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((f.coefficients[1] + 0.5).abs() < 1e-12);
        assert!(f.residual_norm < 1e-12);
    }

    #[test]
    fn recovers_two_term_model() {
        let pts: Vec<(f64, f64)> = ladder()
            .into_iter()
            .map(|e| (e, -0.52 * e * e * e.ln().abs() + 0.3 * e * e))
            .collect();
        let f = fit_asymptote(&pts, FitModel::EpsSquaredLog).unwrap();
        assert!((f.coefficients[0] + 0.52).abs() < 1e-10);
        assert!((f.coefficients[1] - 0.3).abs() < 1e-10);
    }

    #[test]
    fn recovers_log_slope() {
        let pts: Vec<(f64, f64)> = (4..=10)
            .map(|k| 10f64.powi(-k))
            .map(|e| (e, 0.25 * e.ln().abs() + 0.7))
            .collect();
        let f = fit_asymptote(&pts, FitModel::AffineLog).unwrap();
        assert!((f.coefficients[0] - 0.25).abs() < 1e-12);
        assert!((f.coefficients[1] - 0.7).abs() < 1e-11);
    }

    #[test]
    fn too_few_rungs() {
        let pts = [(0.1, 1.0), (0.01, 2.0)];
        assert!(matches!(fit_asymptote(&pts, FitModel::AffineLog), Err(Error::Fit(_))));
    }

    #[test]
    fn repeated_rung_is_rank_deficient() {
        let pts = [(0.1, 1.0), (0.1, 1.0), (0.1, 1.0)];
        assert!(matches!(fit_asymptote(&pts, FitModel::AffineInvLog), Err(Error::Fit(_))));
    }
}
