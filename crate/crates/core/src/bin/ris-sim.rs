//! `ris-sim`: command-line front end for the Monte Carlo campaigns.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ris_core::harness::{run_experiment, write_outputs, ExperimentConfig, ExperimentKind, Manifest, RunOptions};
use ris_core::Error;

#[derive(Parser)]
#[command(name = "ris-sim", version, about = "Receiving-RIS channel estimation and reflection design simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-iteration NMSE of the estimator variants.
    Convergence(RunArgs),
    /// NMSE against SNR, training length or path count.
    Nmse(RunArgs),
    /// Achievable rate with perfect and estimated CSI.
    Rate(RunArgs),
    /// Parse and validate a config file without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; the built-in desk config is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for results.csv, summary.csv and manifest.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 = one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Comma-separated sweep values replacing the config's sweep.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    sweep: Option<Vec<f64>>,
    /// Record wall-clock time per row (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

enum Family {
    Convergence,
    Nmse,
    Rate,
}

impl Family {
    fn accepts(&self, kind: ExperimentKind) -> bool {
        match self {
            Family::Convergence => kind == ExperimentKind::ConvergenceTrace,
            Family::Rate => kind == ExperimentKind::RateVsSnr,
            Family::Nmse => matches!(
                kind,
                ExperimentKind::NmseVsSnr | ExperimentKind::NmseVsTrainingLength | ExperimentKind::NmseVsPaths
            ),
        }
    }

    fn desk_default(&self) -> ExperimentConfig {
        match self {
            Family::Convergence => ExperimentConfig::desk_convergence(),
            Family::Nmse => ExperimentConfig::desk_nmse(),
            Family::Rate => ExperimentConfig::desk_rate(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Family::Convergence => "convergence",
            Family::Nmse => "nmse",
            Family::Rate => "rate",
        }
    }
}

fn run(family: Family, args: RunArgs) -> Result<(), Error> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => family.desk_default(),
    };
    if !family.accepts(config.experiment) {
        return Err(Error::Config(format!(
            "experiment {} cannot run under the `{}` subcommand",
            config.experiment,
            family.name()
        )));
    }
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(s) = args.seed {
        config.master_seed = s;
    }
    if let Some(sweep) = args.sweep {
        config.sweep = sweep;
    }
    config.validate()?;

    let started_at = chrono::Utc::now().to_rfc3339();
    let options = RunOptions {
        threads: args.threads,
        timing: args.timing,
    };
    let rows = run_experiment(&config, &options)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment.id(),
        master_seed: config.master_seed,
        trials: config.trials,
        threads: args.threads,
        rows: rows.len(),
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        config: &config,
    };
    write_outputs(&args.out, &rows, &manifest)?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Convergence(a) => run(Family::Convergence, a),
        Command::Nmse(a) => run(Family::Nmse, a),
        Command::Rate(a) => run(Family::Rate, a),
        Command::ValidateConfig { config } => ExperimentConfig::load(&config).map(|cfg| {
            println!("config ok: {} with {} trials", cfg.experiment, cfg.trials);
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Io { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
