//! `experiment`: the simulator study sweeps (SVR gain vs power ratio and vs
//! training size), emitting CSV and a chart.

use std::path::PathBuf;

use crate::config::RunConfig;
use crate::experiment::{run_power_ratio, run_train_size, ExperimentKind, ExperimentResult};
use crate::manifest::Manifest;
use crate::CliError;

use super::{ensure_out_dir, write_file};

pub struct ExperimentArgs {
    pub kind: String,
    pub seed: Option<u64>,
    pub replications: usize,
    pub intervals: u32,
    pub ratios: Vec<f64>,
    pub sizes: Vec<u32>,
    pub ratio: f64,
    pub out: PathBuf,
}

pub fn run(config: &RunConfig, args: &ExperimentArgs, _verbose: bool) -> Result<(), CliError> {
    let kind = ExperimentKind::parse(&args.kind)
        .ok_or_else(|| CliError::usage(format!("unknown experiment kind {:?}", args.kind)))?;
    if args.replications == 0 {
        return Err(CliError::usage("need at least one replication"));
    }
    let base_seed = args.seed.unwrap_or(config.run.seed);

    let result: ExperimentResult = match kind {
        ExperimentKind::PowerRatio => run_power_ratio(
            config,
            &args.ratios,
            args.intervals,
            args.replications,
            base_seed,
        )?,
        ExperimentKind::TrainSize => run_train_size(
            config,
            &args.sizes,
            args.ratio,
            args.replications,
            base_seed,
        )?,
    };

    ensure_out_dir(&args.out)?;
    write_file(&args.out.join("experiment.csv"), &result.to_csv())?;
    write_file(&args.out.join("experiment.svg"), &result.to_svg())?;

    let mut manifest = Manifest::new("experiment", &config.canonical_toml(), result.seeds.clone());
    manifest.output("experiment.csv").output("experiment.svg");
    manifest.write(&args.out)?;

    println!("{}  mean gain +/- std over {} seeds", kind.axis_label(), result.replications);
    for (axis, mean, std) in result.gain_summary() {
        println!("  {axis:>8}: {:+.1}% +/- {:.1}%", mean * 100.0, std * 100.0);
    }
    Ok(())
}
