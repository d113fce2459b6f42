use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ctkrylov::ProjModel;
use ctkrylov_cli::commands::{self, Analysis, AnalyzeArgs};
use ctkrylov_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "ctkrylov", version, about = "GMRES-type reconstruction experiments for unmatched CT projector pairs")]
struct Cli {
    /// Experiment config (flat key = value file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for matvecs and dense factorizations; 1 is bit-reproducible.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write system matrices in Matrix Market format with a summary.
    BuildMatrix {
        /// Comma-separated models; defaults to model_a and model_b.
        #[arg(long, value_delimiter = ',')]
        models: Vec<ProjModel>,
    },
    /// Run the configured solver.
    Solve,
    /// Error minima and unmatchedness over thresholded back projectors.
    SweepTau {
        #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.1,0.3,0.5")]
        taus: Vec<f64>,
    },
    /// Dense spectral and perturbation analyses.
    Analyze {
        #[arg(long)]
        what: Analysis,
        /// Iterations whose SVD coefficients are reported (coeffs).
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,20,50")]
        ks: Vec<usize>,
        /// Perturbation sizes (bound).
        #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-4,1e-5")]
        eps: Vec<f64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    ctkrylov::sparse::set_dense_threads(cli.threads);

    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    match cli.command {
        Command::BuildMatrix { models } => {
            let models = if models.is_empty() {
                commands::default_models(&cfg)
            } else {
                models
            };
            commands::build_matrices(&cfg, &models, &out)?;
        }
        Command::Solve => {
            commands::solve(&cfg, &out)?;
        }
        Command::SweepTau { taus } => {
            commands::sweep_tau(&cfg, &taus, &out)?;
        }
        Command::Analyze { what, ks, eps } => {
            let args = AnalyzeArgs {
                what,
                ks,
                epsilons: eps,
            };
            commands::analyze(&cfg, &args, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
