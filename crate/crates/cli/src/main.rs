use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wattrace_cli::commands::{
    attribute, evaluate, experiment, ingest, predict, report, simulate, train,
};
use wattrace_cli::config::RunConfig;
use wattrace_cli::CliError;

/// Battery discharge-interval modeling and per-operator power attribution.
#[derive(Parser)]
#[command(name = "wattrace", version, about, max_term_width = 100)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Run configuration file (TOML). Unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed override for anything stochastic in the command.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Chatty progress and warnings on stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a workload into a trace file plus ground-truth sidecar.
    Simulate {
        /// Named scenario: fixed-single | fixed-concurrent |
        /// variable-alternating | two-state:<ratio>[,<prob>] |
        /// realworld-like.
        #[arg(long)]
        scenario: Option<String>,
        /// Complete discharge intervals to produce.
        #[arg(long)]
        intervals: Option<u32>,
    },
    /// Validate external traces, write canonical copies and the sample CSV.
    Ingest {
        /// Trace files.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Exit with a data error if invariant violations are found.
        #[arg(long)]
        strict: bool,
    },
    /// Train interval predictors on traces and select the final model.
    Train {
        /// Trace files (merged into one training set).
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// One feature per (operator, instance-count) pair instead of
        /// count-weighted seconds.
        #[arg(long)]
        expand_counts: bool,
    },
    /// Score a saved model on held-out traces.
    Evaluate {
        model: PathBuf,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Invert a linear model into per-operator power estimates.
    Attribute {
        model: PathBuf,
        /// Joules per 1% SoC drop (defaults to the model's training value).
        #[arg(long)]
        e1pct_j: Option<f64>,
        /// Trace whose intervals are priced under the estimate for the
        /// residual-energy summary.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Per-epoch live predictions over a trace tail.
    Predict {
        model: PathBuf,
        trace: PathBuf,
        /// Epoch mapper file written by `train`.
        #[arg(long, default_value = "out/epoch_mapper.json")]
        mapper: PathBuf,
        /// Power estimate file written by `attribute` (enables per-operator
        /// columns).
        #[arg(long)]
        estimate: Option<PathBuf>,
        /// Adaptation epoch length in seconds.
        #[arg(long)]
        epoch_s: Option<f64>,
    },
    /// Simulator study sweeps: SVR gain vs power ratio or training size.
    Experiment {
        /// power-ratio | train-size
        kind: String,
        /// Replications per cell.
        #[arg(long, default_value_t = 5)]
        replications: usize,
        /// Training intervals per cell (power-ratio sweep).
        #[arg(long, default_value_t = 400)]
        intervals: u32,
        /// Ratio axis for the power-ratio sweep.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        ratios: Vec<f64>,
        /// Size axis for the train-size sweep.
        #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
        sizes: Vec<u32>,
        /// Fixed power ratio for the train-size sweep.
        #[arg(long, default_value_t = 8.0)]
        ratio: f64,
    },
    /// Render charts and an index for a run directory's CSV outputs.
    Report { run_dir: PathBuf },
}

fn load_config(global: &GlobalArgs) -> Result<RunConfig, CliError> {
    match &global.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(&cli.global)?;
    let verbose = cli.global.verbose;
    match cli.command {
        Command::Simulate { scenario, intervals } => simulate::run(
            &config,
            &simulate::SimulateArgs {
                scenario,
                intervals,
                seed: cli.global.seed,
                out: cli.global.out,
            },
            verbose,
        ),
        Command::Ingest { traces, strict } => ingest::run(
            &config,
            &ingest::IngestArgs { traces, out: cli.global.out, strict },
            verbose,
        ),
        Command::Train { traces, expand_counts } => train::run(
            &config,
            &train::TrainArgs {
                traces,
                seed: cli.global.seed,
                expand_counts,
                out: cli.global.out,
            },
            verbose,
        ),
        Command::Evaluate { model, traces } => evaluate::run(
            &config,
            &evaluate::EvaluateArgs { model, traces, out: cli.global.out },
            verbose,
        ),
        Command::Attribute { model, e1pct_j, trace } => attribute::run(
            &config,
            &attribute::AttributeArgs { model, e1pct_j, trace, out: cli.global.out },
            verbose,
        ),
        Command::Predict { model, trace, mapper, estimate, epoch_s } => predict::run(
            &config,
            &predict::PredictArgs {
                model,
                trace,
                mapper,
                estimate,
                epoch_len_s: epoch_s,
                out: cli.global.out,
            },
            verbose,
        ),
        Command::Experiment { kind, replications, intervals, ratios, sizes, ratio } => {
            experiment::run(
                &config,
                &experiment::ExperimentArgs {
                    kind,
                    seed: cli.global.seed,
                    replications,
                    intervals,
                    ratios,
                    sizes,
                    ratio,
                    out: cli.global.out,
                },
                verbose,
            )
        }
        Command::Report { run_dir } => report::run(&report::ReportArgs { run_dir }, verbose),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are success; everything else is usage.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
