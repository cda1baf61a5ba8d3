//! `simulate`: run the device/battery/workload simulator and write the
//! trace plus its ground-truth sidecar.

use std::path::PathBuf;

use wattrace::sim::write_truth;
use wattrace::trace::write_trace;

use crate::config::RunConfig;
use crate::manifest::Manifest;
use crate::pipeline::simulate_dataset;
use crate::CliError;

use super::{ensure_out_dir, write_file};

pub struct SimulateArgs {
    pub scenario: Option<String>,
    pub intervals: Option<u32>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

pub fn run(config: &RunConfig, args: &SimulateArgs, verbose: bool) -> Result<(), CliError> {
    let mut config = config.clone();
    if let Some(scenario) = &args.scenario {
        if !config.operators.is_empty() {
            return Err(CliError::usage(
                "--scenario conflicts with [[operators]] in the config",
            ));
        }
        config.run.scenario = Some(scenario.clone());
    }
    if let Some(n) = args.intervals {
        config.run.intervals = n;
    }
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }

    let seed = config.run.seed;
    let scenario = config.resolve_workload(seed)?;
    let runs = simulate_dataset(&scenario, config.run.poll_ms, config.run.intervals, seed)?;

    ensure_out_dir(&args.out)?;
    let mut manifest = Manifest::new("simulate", &config.canonical_toml(), vec![seed]);
    let multi = runs.len() > 1;
    let mut total_intervals = 0usize;
    let mut total_duration = 0.0f64;
    for (i, (log, truth)) in runs.iter().enumerate() {
        let name = if multi {
            format!("trace-{i:02}.txt")
        } else {
            "trace.txt".to_string()
        };
        let trace_path = args.out.join(&name);
        write_file(&trace_path, &write_trace(log))?;
        write_file(&args.out.join(format!("{name}.truth")), &write_truth(truth))?;
        manifest.output(&name);
        total_intervals += truth.interval_ledger.len();
        total_duration += truth
            .interval_ledger
            .iter()
            .map(|l| l.end_s - l.start_s)
            .sum::<f64>();
        if verbose {
            eprintln!("wrote {} ({} intervals)", trace_path.display(), truth.interval_ledger.len());
        }
    }
    manifest.write(&args.out)?;

    let mean = if total_intervals > 0 {
        total_duration / total_intervals as f64
    } else {
        0.0
    };
    println!(
        "simulated {} complete intervals across {} trace(s); mean duration {:.1} s",
        total_intervals,
        runs.len(),
        mean
    );
    Ok(())
}
