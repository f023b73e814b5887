use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use piazza::cli;
use piazza::config::ExperimentConfig;
use piazza::driver::DriverMode;

#[derive(Parser)]
#[command(name = "piazza", version, about = "Agent-based microblogging platform simulator")]
struct Cli {
    /// Experiment configuration file (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base rng seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (or file for compare).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for multi-run execution.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DriverChoice {
    Stub,
    Llm,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the configured number of simulation runs.
    Run {
        /// Text driver; overrides the config file.
        #[arg(long, value_enum)]
        driver: Option<DriverChoice>,
        /// Number of runs; overrides the config file.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Compute the opinion-dynamics baseline over recorded run snapshots.
    Fj {
        /// Directory holding run_* outputs from `run`.
        #[arg(long)]
        runs_dir: PathBuf,
        /// Uniform susceptibility override.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Compute validation CSVs from recorded event logs.
    Analyze {
        /// events.jsonl files, one per run (snapshots/ expected alongside).
        #[arg(long, num_args = 1.., required = true)]
        events: Vec<PathBuf>,
        /// Reference-data JSON to correlate against.
        #[arg(long)]
        reference: PathBuf,
        /// Precomputed toxicity sidecar (JSON-lines keyed by content id).
        #[arg(long)]
        toxicity_sidecar: Option<PathBuf>,
    },
    /// Join simulated and baseline coalition trajectories side by side.
    Compare {
        /// trajectories.csv produced by analyze.
        #[arg(long)]
        llm: PathBuf,
        /// fj_medians.csv produced by fj.
        #[arg(long)]
        fj: PathBuf,
        /// Report both series on the [-2, +2] display scale.
        #[arg(long, default_value_t = false)]
        display_scale: bool,
    },
}

fn load_config(args: &Cli) -> Result<ExperimentConfig, cli::CliError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.simulation.rng_seed = seed;
    }
    Ok(config)
}

fn require_out(args: &Cli) -> Result<PathBuf, cli::CliError> {
    args.out
        .clone()
        .ok_or_else(|| cli::CliError::Usage("--out is required".into()))
}

fn dispatch(args: Cli) -> Result<(), cli::CliError> {
    match &args.command {
        Command::Run { driver, runs } => {
            let mut config = load_config(&args)?;
            if let Some(choice) = driver {
                config.simulation.driver.mode = match choice {
                    DriverChoice::Stub => DriverMode::Stub,
                    DriverChoice::Llm => DriverMode::Remote,
                };
                if config.simulation.driver.mode == DriverMode::Remote {
                    config.simulation.driver = config.simulation.driver.clone().resolve_env();
                }
            }
            if let Some(runs) = runs {
                config.runs = *runs;
            }
            let out = require_out(&args)?;
            cli::cmd_run(&config, &out, args.jobs)
        }
        Command::Fj { runs_dir, lambda } => {
            let config = load_config(&args)?;
            let out = require_out(&args)?;
            cli::cmd_fj(&config, runs_dir, &out, *lambda)
        }
        Command::Analyze { events, reference, toxicity_sidecar } => {
            let config = load_config(&args)?;
            let out = require_out(&args)?;
            cli::cmd_analyze(&config, events, reference, toxicity_sidecar.as_deref(), &out)
        }
        Command::Compare { llm, fj, display_scale } => {
            let out = require_out(&args)?;
            cli::cmd_compare(llm, fj, &out, *display_scale)
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match dispatch(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::FAILURE
        }
    }
}
