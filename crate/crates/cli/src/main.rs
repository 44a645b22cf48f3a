use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use phasefield_core::geodesic::GeodesicTable;
use phasefield_core::harness::{run_and_write, ExperimentConfig, ExperimentId};
use phasefield_core::minimizer1d::{minimize_g, DirichletData, MeshOptions, WeightFn};
use phasefield_core::potential::PotentialSpec;
use phasefield_core::profile::{recovery_profile, Regularizer};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "phasefield", version, about = "Boundary-layer energies of the Dirichlet Cahn-Hilliard functional")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config and write its report.
    Run {
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the worker thread count (0 = all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the experiments, or print the default config of one.
    ListExperiments {
        /// Print the full default TOML config for this experiment.
        #[arg(long, value_name = "ID")]
        config: Option<ExperimentId>,
    },
    /// Write a one-dimensional layer profile as `t,v` CSV.
    ExportProfile(ProfileArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileKind {
    /// Constructed recovery profile.
    Recovery,
    /// Discrete minimizer of the weighted 1D energy.
    Minimizer,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    /// Left value `a + ε^γ`, approaching the well.
    Touching,
    /// Left value fixed at `--alpha`.
    Interior,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegKind {
    /// `δ = ε`
    Eps,
    /// `δ = ε²`
    EpsSquared,
}

#[derive(clap::Args)]
struct ProfileArgs {
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "recovery")]
    kind: ProfileKind,
    #[arg(long, value_enum, default_value = "touching")]
    data: DataKind,
    /// Left value for interior data; defaults to the saddle.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    /// Slope of the linear weight `1 + slope·t`.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    slope: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Regularization inside the square root of the recovery ODE.
    #[arg(long, value_enum, default_value = "eps")]
    regularizer: RegKind,
    /// Wells of `(s - a)²(s - b)²`; defaults to `±1`.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    wells: Option<Vec<f64>>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, out_dir, threads } => run(config, out_dir, threads),
        Command::ListExperiments { config } => {
            list(config)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportProfile(args) => {
            export_profile(&args)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Exit code 2 marks a completed run whose checks did not all pass.
fn run(path: PathBuf, out_dir: Option<PathBuf>, threads: Option<usize>) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::load(&path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(dir) = out_dir {
        cfg.output.dir = dir;
    }
    if let Some(n) = threads {
        cfg.parallelism = n;
    }
    let (report, paths) = run_and_write(&cfg)?;
    let s = &report.summary;
    println!(
        "{} {}: fitted {:.6e}, expected {:.6e}, tolerance {:.3e}",
        if s.pass { "PASS" } else { "FAIL" },
        s.experiment,
        s.fitted,
        s.expected,
        s.tolerance
    );
    for c in &s.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!("  {status} {:<28} value {:.6e}, bound {:.6e}: {}", c.name, c.value, c.bound, c.detail);
    }
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(if s.pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn list(config: Option<ExperimentId>) -> Result<()> {
    if let Some(id) = config {
        print!("{}", ExperimentConfig::new(id).to_toml()?);
        return Ok(());
    }
    for id in ExperimentId::ALL {
        let ladder = id.default_ladder();
        println!(
            "{id}  {}  [{} rungs, {:.3e} .. {:.3e}]",
            id.description(),
            ladder.len(),
            ladder[0],
            ladder[ladder.len() - 1]
        );
    }
    Ok(())
}

fn export_profile(args: &ProfileArgs) -> Result<()> {
    if !(args.epsilon > 0.0 && args.epsilon < 1.0) {
        bail!("--epsilon must lie in (0, 1)");
    }
    let spec = match args.wells.as_deref() {
        Some([a, b]) => PotentialSpec::asym_quartic(*a, *b),
        _ => PotentialSpec::quartic(),
    };
    let eps = args.epsilon;
    let data = match args.data {
        DataKind::Touching => DirichletData::touching_well(&spec, eps, 1.0, 1.0, args.gamma),
        DataKind::Interior => DirichletData::interior(&spec, eps, args.alpha.unwrap_or(spec.c), 1.0, args.gamma),
    };
    let reg = match args.regularizer {
        RegKind::Eps => Regularizer::Eps,
        RegKind::EpsSquared => Regularizer::Power(2.0),
    };
    let profile = match args.kind {
        ProfileKind::Recovery => recovery_profile(&spec, eps, data.alpha_eps, data.beta_eps, args.horizon, reg)?,
        ProfileKind::Minimizer => {
            let table = GeodesicTable::new(spec.clone());
            let weight = WeightFn::linear(1.0, args.slope, args.horizon)?;
            minimize_g(&spec, &table, &weight, eps, &data, MeshOptions::default())?.profile
        }
    };
    match &args.output {
        Some(path) => {
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            profile.write_csv(std::io::BufWriter::new(file))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            profile.write_csv(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}
