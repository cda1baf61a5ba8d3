//! Shared workflow pieces behind the commands: chunked simulation (one
//! battery run yields at most `initial_soc - 1` complete intervals, so
//! larger datasets merge several runs), the train pipeline, and evaluation.

use wattrace::inference::{fit_epoch_mapper, EpochMapper};
use wattrace::preprocess::{preprocess_pipeline, PipelineReport};
use wattrace::regress::{
    compute_metrics, nested_cv, select_model, CvReport, Metrics, PowerModel, Selection,
};
use wattrace::segment::{dataset_from_traces, IntervalSample};
use wattrace::sim::{simulate, GroundTruth, Scenario, StopCondition};
use wattrace::trace::{OperatorType, TraceLog};

use crate::config::RunConfig;
use crate::CliError;

/// Max intervals per simulated battery run before starting a fresh trace.
const CHUNK_INTERVALS: u32 = 90;

/// Simulates `intervals` complete discharge intervals, splitting across as
/// many battery runs as needed. Chunk seeds derive deterministically from
/// `seed`.
pub fn simulate_dataset(
    scenario: &Scenario,
    poll_interval_ms: u64,
    intervals: u32,
    seed: u64,
) -> Result<Vec<(TraceLog, GroundTruth)>, CliError> {
    let cap = CHUNK_INTERVALS.min(scenario.battery.initial_soc.saturating_sub(1) as u32);
    if cap == 0 {
        return Err(CliError::usage("battery initial_soc leaves no room for intervals"));
    }
    let mut out = Vec::new();
    let mut remaining = intervals;
    let mut chunk_seed = seed;
    while remaining > 0 {
        let chunk = remaining.min(cap);
        let mut noise = scenario.noise;
        noise.seed = chunk_seed;
        let pair = simulate(
            &scenario.operators,
            &scenario.battery,
            &noise,
            poll_interval_ms,
            StopCondition::Intervals(chunk),
        )?;
        out.push(pair);
        remaining -= chunk;
        chunk_seed = chunk_seed.wrapping_add(0x9E37_79B9);
    }
    Ok(out)
}

pub struct TrainArtifacts {
    pub schema: Vec<OperatorType>,
    pub samples: Vec<IntervalSample>,
    pub clean_samples: Vec<IntervalSample>,
    pub filter_report: PipelineReport,
    pub cv_report: CvReport,
    pub selection: Selection,
    pub mapper: EpochMapper,
}

/// The full training pipeline on already-parsed traces: segmentation,
/// preprocessing, nested CV, model selection, epoch-mapper fit.
pub fn train_on_logs(
    logs: &[TraceLog],
    config: &RunConfig,
    seed: u64,
) -> Result<TrainArtifacts, CliError> {
    if logs.is_empty() {
        return Err(CliError::usage("no trace files given"));
    }
    let poll_ms = logs[0].device.poll_interval_ms;
    let e1pct = logs[0].device.e_per_percent_j;
    let mode = config.featurize.mode();

    let (schema, intervals, samples) = dataset_from_traces(logs, mode)?;
    let (clean_samples, filter_report) =
        preprocess_pipeline(&intervals, &samples, poll_ms, &config.preprocess.into())?;
    if clean_samples.is_empty() {
        return Err(CliError::data("preprocessing removed every interval"));
    }

    let cv_config = config.cv.to_cv_config(seed);
    let cv_report = nested_cv(&clean_samples, &schema, &cv_config)?;
    let mut selection = select_model(&cv_report);
    {
        let meta = selection.model.metadata_mut();
        meta.e_per_percent_j = Some(e1pct);
        meta.featurize_mode = mode;
        meta.device_label = logs[0].device.label.clone();
    }

    let mapper = fit_epoch_mapper(&intervals, poll_ms)?;

    Ok(TrainArtifacts {
        schema,
        samples,
        clean_samples,
        filter_report,
        cv_report,
        selection,
        mapper,
    })
}

pub struct EvaluationRow {
    pub interval: usize,
    pub actual_s: f64,
    pub predicted_s: f64,
}

/// Featurizes held-out traces against the model schema and scores the
/// model. Operators unknown to the model surface as a schema error.
pub fn evaluate_on_logs(
    model: &PowerModel,
    logs: &[TraceLog],
) -> Result<(Metrics, Vec<EvaluationRow>), CliError> {
    let mode = model.metadata().featurize_mode;
    let (trace_schema, _intervals, _) = dataset_from_traces(logs, mode)?;
    for ty in &trace_schema {
        if !model.schema().contains(ty) {
            return Err(CliError::data(format!(
                "trace contains operator {ty} unknown to the model schema"
            )));
        }
    }
    let (_, intervals, _) = dataset_from_traces(logs, mode)?;
    let mut rows = Vec::with_capacity(intervals.len());
    for interval in &intervals {
        let sample = wattrace::segment::featurize(interval, model.schema(), mode)?;
        rows.push(EvaluationRow {
            interval: interval.index,
            actual_s: sample.target_s,
            predicted_s: model.predict(&sample.features),
        });
    }
    if rows.is_empty() {
        return Err(CliError::data("no complete discharge intervals in the trace"));
    }
    let predictions: Vec<f64> = rows.iter().map(|r| r.predicted_s).collect();
    let actuals: Vec<f64> = rows.iter().map(|r| r.actual_s).collect();
    let metrics = compute_metrics(&predictions, &actuals)?;
    Ok((metrics, rows))
}

pub fn read_traces(paths: &[std::path::PathBuf]) -> Result<Vec<TraceLog>, CliError> {
    let mut logs = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        let log = wattrace::trace::parse_trace(&text)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        logs.push(log);
    }
    Ok(logs)
}
