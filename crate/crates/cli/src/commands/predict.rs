//! `predict`: the live path. Slice a trace tail into adaptation epochs and
//! emit one interval/power prediction per epoch.

use std::path::PathBuf;

use wattrace::attribution::PowerEstimate;
use wattrace::inference::{predict_epoch, EpochMapper};
use wattrace::regress::{load_model, PowerModel};
use wattrace::segment::{build_segments, ExecutionSegment};

use crate::config::RunConfig;
use crate::manifest::Manifest;
use crate::pipeline::read_traces;
use crate::CliError;

use super::{ensure_out_dir, write_file};

pub struct PredictArgs {
    pub model: PathBuf,
    pub trace: PathBuf,
    pub mapper: PathBuf,
    pub estimate: Option<PathBuf>,
    pub epoch_len_s: Option<f64>,
    pub out: PathBuf,
}

/// Clips segments to `[start_ms, end_ms)`, dropping empty remainders.
fn clip_segments(segments: &[ExecutionSegment], start_ms: u64, end_ms: u64) -> Vec<ExecutionSegment> {
    segments
        .iter()
        .filter(|s| s.end_ms > start_ms && s.start_ms < end_ms)
        .map(|s| ExecutionSegment {
            start_ms: s.start_ms.max(start_ms),
            end_ms: s.end_ms.min(end_ms),
            active: s.active.clone(),
            imputed: s.imputed,
        })
        .collect()
}

pub fn run(config: &RunConfig, args: &PredictArgs, verbose: bool) -> Result<(), CliError> {
    let model_text = std::fs::read_to_string(&args.model)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", args.model.display())))?;
    let model = load_model(&model_text)?;

    let mapper_text = std::fs::read_to_string(&args.mapper)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", args.mapper.display())))?;
    let mapper: EpochMapper = serde_json::from_str(&mapper_text)
        .map_err(|e| CliError::data(format!("{}: {e}", args.mapper.display())))?;

    let estimate: Option<PowerEstimate> = match &args.estimate {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?,
            )
        }
        None => None,
    };
    if matches!(model, PowerModel::Linear(_)) && estimate.is_none() && verbose {
        eprintln!("note: no --estimate given; emitting average power only");
    }

    let logs = read_traces(std::slice::from_ref(&args.trace))?;
    let log = &logs[0];
    if log.device.label != model.metadata().device_label {
        eprintln!(
            "warning: trace label {:?} differs from the model's training label {:?}; \
             the model may be stale",
            log.device.label,
            model.metadata().device_label
        );
    }
    let e1pct = model
        .metadata()
        .e_per_percent_j
        .or_else(|| estimate.as_ref().map(|e| e.e_per_percent_j))
        .unwrap_or(log.device.e_per_percent_j);

    let epoch_len_s = args.epoch_len_s.unwrap_or(config.inference.epoch_len_s);
    if epoch_len_s.is_nan() || epoch_len_s <= 0.0 {
        return Err(CliError::usage("epoch length must be positive"));
    }
    let epoch_ms = (epoch_len_s * 1000.0).round() as u64;

    let segments = build_segments(log);
    let horizon = segments.last().map(|s| s.end_ms).unwrap_or(0);
    if horizon == 0 {
        return Err(CliError::data("trace contains no polled segments"));
    }

    let schema = model.schema().to_vec();
    let mut csv = String::from("epoch_start_s,predicted_interval_s,avg_power_w");
    if estimate.is_some() {
        for ty in &schema {
            csv.push_str(&format!(",{ty}_w"));
        }
    }
    csv.push('\n');

    let mut epochs = 0;
    let mut low_confidence_epochs = 0;
    let mut predict_time = std::time::Duration::ZERO;
    let mut start = 0u64;
    while start < horizon {
        let end = (start + epoch_ms).min(horizon);
        let window = clip_segments(&segments, start, end);
        if !window.is_empty() {
            let t0 = std::time::Instant::now();
            let pred = predict_epoch(
                &mapper,
                &model,
                estimate.as_ref(),
                &window,
                epoch_len_s,
                e1pct,
            )?;
            predict_time += t0.elapsed();
            csv.push_str(&format!(
                "{},{},{}",
                start as f64 / 1000.0,
                pred.predicted_interval_s,
                pred.predicted_avg_power_w
            ));
            if let Some(powers) = &pred.per_operator_power_w {
                for ty in &schema {
                    // 0 means the operator was not observed in this epoch.
                    let w = powers.get(ty).copied().unwrap_or(0.0);
                    csv.push_str(&format!(",{w}"));
                }
            }
            csv.push('\n');
            epochs += 1;
            if pred.low_confidence {
                low_confidence_epochs += 1;
            }
        }
        start = end;
    }

    ensure_out_dir(&args.out)?;
    write_file(&args.out.join("predictions.csv"), &csv)?;

    let mut manifest = Manifest::new("predict", &config.canonical_toml(), vec![]);
    manifest.input(&args.model).input(&args.trace).input(&args.mapper);
    if let Some(e) = &args.estimate {
        manifest.input(e);
    }
    manifest.output("predictions.csv");
    manifest.write(&args.out)?;

    let latency_us = if epochs > 0 {
        predict_time.as_micros() as f64 / epochs as f64
    } else {
        0.0
    };
    println!(
        "predicted {epochs} epoch(s) of {epoch_len_s} s; mean prediction latency {latency_us:.1} us"
    );
    if low_confidence_epochs > 0 {
        eprintln!(
            "warning: {low_confidence_epochs} epoch(s) rely on an unreliable mapper entry \
             (low confidence)"
        );
    }
    Ok(())
}
