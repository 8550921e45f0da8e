use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fascopula_cli::config::{self, Experiment, Overrides};
use fascopula_cli::{run_experiment, CliError};

/// Reproduce FAS correlation, peak-envelope and outage data sets.
#[derive(Debug, Parser)]
#[command(name = "fascopula", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Root RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// JSON config (or a manifest from an earlier run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Samples per ensemble (Monte Carlo floor for op-sweep).
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Absolute tolerance of the multivariate normal CDF.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-port envelope samples: physical and three copula variants.
    Scatter,
    /// Peak-envelope PDF and CDF, simulated and from both copula models.
    PdfCdf,
    /// Marginal and correlation fidelity report for the physical generator.
    Validate,
    /// Outage probability curves.
    OpSweep {
        /// fig4, fig5a, fig5b, fig6, fig7a or fig7b.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Port-1 envelope correlations for the sparse configurations.
    CorrTable,
}

fn execute(cli: Cli) -> Result<Vec<String>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let (experiment, preset) = match cli.command {
        Command::Scatter => (Experiment::Scatter, None),
        Command::PdfCdf => (Experiment::PdfCdf, None),
        Command::Validate => (Experiment::Validate, None),
        Command::OpSweep { preset } => (Experiment::OpSweep, preset),
        Command::CorrTable => (Experiment::CorrTable, None),
    };
    let file = cli.config.as_deref().map(config::read_config_file).transpose()?;
    let flags = Overrides {
        seed: cli.seed,
        samples: cli.samples,
        tol: cli.tol,
        preset,
    };
    let cfg = config::resolve(experiment, file, &flags)?;
    run_experiment(&cfg, &cli.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    match execute(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", out.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
