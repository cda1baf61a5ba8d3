//! `train`: traces -> segmentation -> preprocessing -> nested CV -> model
//! selection -> model file, with every report written beside the model.

use std::path::PathBuf;

use wattrace::regress::save_model;
use wattrace::segment::samples_to_csv;

use crate::config::RunConfig;
use crate::manifest::Manifest;
use crate::pipeline::{read_traces, train_on_logs};
use crate::CliError;

use super::{ensure_out_dir, write_file};

pub struct TrainArgs {
    pub traces: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub expand_counts: bool,
    pub out: PathBuf,
}

pub fn run(config: &RunConfig, args: &TrainArgs, verbose: bool) -> Result<(), CliError> {
    let mut config = config.clone();
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }
    if args.expand_counts {
        config.featurize.expand_counts = true;
    }
    let seed = config.run.seed;

    let logs = read_traces(&args.traces)?;
    let artifacts = train_on_logs(&logs, &config, seed)?;

    ensure_out_dir(&args.out)?;
    write_file(&args.out.join("model.json"), &save_model(&artifacts.selection.model))?;
    let cv_json = serde_json::to_string_pretty(&artifacts.cv_report)
        .map_err(|e| CliError::internal(e.to_string()))?;
    write_file(&args.out.join("cv_report.json"), &(cv_json + "\n"))?;
    write_file(&args.out.join("filter_report.csv"), &artifacts.filter_report.to_csv())?;
    let mapper_json = serde_json::to_string_pretty(&artifacts.mapper)
        .map_err(|e| CliError::internal(e.to_string()))?;
    write_file(&args.out.join("epoch_mapper.json"), &(mapper_json + "\n"))?;
    write_file(
        &args.out.join("samples.csv"),
        &samples_to_csv(&artifacts.schema, &artifacts.clean_samples),
    )?;

    let mut manifest = Manifest::new("train", &config.canonical_toml(), vec![seed]);
    for path in &args.traces {
        manifest.input(path);
    }
    manifest
        .output("model.json")
        .output("cv_report.json")
        .output("filter_report.csv")
        .output("epoch_mapper.json")
        .output("samples.csv");
    manifest.write(&args.out)?;

    let report = &artifacts.cv_report;
    println!(
        "trained on {} samples ({} removed by preprocessing)",
        artifacts.clean_samples.len(),
        artifacts.filter_report.total_removed()
    );
    println!(
        "linear outer RMSE {:.3} +/- {:.3} s | svr outer RMSE {:.3} +/- {:.3} s",
        report.linear.mean_rmse, report.linear.std_rmse, report.svr.mean_rmse, report.svr.std_rmse
    );
    println!(
        "selected {} (gain {:.1}%)",
        artifacts.selection.family,
        artifacts.selection.gain * 100.0
    );
    if verbose {
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        for w in &artifacts.selection.model.metadata().warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(())
}
