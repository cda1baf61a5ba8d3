//! `evaluate`: score a saved model against held-out traces, emitting
//! per-interval predictions as CSV.

use std::path::PathBuf;

use wattrace::regress::load_model;

use crate::config::RunConfig;
use crate::manifest::Manifest;
use crate::pipeline::{evaluate_on_logs, read_traces};
use crate::CliError;

use super::{ensure_out_dir, write_file};

pub struct EvaluateArgs {
    pub model: PathBuf,
    pub traces: Vec<PathBuf>,
    pub out: PathBuf,
}

pub fn run(config: &RunConfig, args: &EvaluateArgs, _verbose: bool) -> Result<(), CliError> {
    let model_text = std::fs::read_to_string(&args.model)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", args.model.display())))?;
    let model = load_model(&model_text)?;
    let logs = read_traces(&args.traces)?;

    let (metrics, rows) = evaluate_on_logs(&model, &logs)?;

    ensure_out_dir(&args.out)?;
    let mut csv = String::from("interval,actual_s,predicted_s,error_s\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.interval,
            r.actual_s,
            r.predicted_s,
            r.predicted_s - r.actual_s
        ));
    }
    write_file(&args.out.join("evaluation.csv"), &csv)?;

    let mut manifest = Manifest::new("evaluate", &config.canonical_toml(), vec![]);
    manifest.input(&args.model);
    for t in &args.traces {
        manifest.input(t);
    }
    manifest.output("evaluation.csv");
    manifest.write(&args.out)?;

    println!(
        "evaluated {} intervals: accuracy {:.2}% | RMSE {:.3} s | R2 {:.4}",
        rows.len(),
        metrics.accuracy_pct,
        metrics.rmse_s,
        metrics.r2
    );
    Ok(())
}
