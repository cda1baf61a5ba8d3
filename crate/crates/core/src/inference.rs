//! Live prediction path: bridge the gap between what training saw
//! (interval-scale operator durations) and what is observable at run time
//! (a short window of segments).
//!
//! A per-operator univariate regressor maps the mean active seconds per
//! polling span inside a window to the operator's total active seconds over
//! a whole discharge interval. The mapped feature vector then feeds the
//! trained interval model, yielding a predicted interval duration and an
//! average power for the next adaptation epoch.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attribution::PowerEstimate;
use crate::regress::PowerModel;
use crate::segment::{DischargeInterval, ExecutionSegment};
use crate::trace::OperatorType;

/// Below this Pearson correlation a mapper entry is flagged unreliable and
/// predictions through it carry a low-confidence flag.
pub const RELIABLE_R: f64 = 0.5;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("epoch mapper needs at least 10 complete intervals, got {0}")]
    TooFewIntervals(usize),
    #[error("prediction window contains no segments")]
    EmptyWindow,
    #[error("operator {0} observed in the window is unknown to the {1}")]
    UnknownOperator(String, &'static str),
    #[error("model produced a non-positive interval duration ({0} s)")]
    InvalidPrediction(f64),
}

/// Per-operator line from segment-scale to interval-scale active seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorMap {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation of the fit inputs.
    pub r: f64,
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMapper {
    pub per_operator: BTreeMap<OperatorType, OperatorMap>,
    pub poll_interval_ms: u64,
    pub n_intervals: usize,
    /// Operators excluded (never active) and similar observations.
    pub notes: Vec<String>,
}

/// One live prediction for the upcoming adaptation epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochPrediction {
    pub predicted_interval_s: f64,
    /// e_per_percent / predicted interval duration.
    pub predicted_avg_power_w: f64,
    /// Absolute watts per observed operator, from the attribution estimate;
    /// absent when predicting through an SVR model (not invertible).
    pub per_operator_power_w: Option<BTreeMap<OperatorType, f64>>,
    pub epoch_len_s: f64,
    /// Interval-scale feature vector fed to the model (echo of inputs).
    pub mapped_features: BTreeMap<OperatorType, f64>,
    pub low_confidence: bool,
}

/// Count-weighted active seconds per operator within a set of segments.
fn window_totals(segments: &[ExecutionSegment]) -> (f64, BTreeMap<OperatorType, f64>) {
    let mut span_s = 0.0;
    let mut totals: BTreeMap<OperatorType, f64> = BTreeMap::new();
    for seg in segments {
        let dur = seg.duration_s();
        span_s += dur;
        for (ty, count) in seg.active.iter() {
            *totals.entry(ty.clone()).or_insert(0.0) += count as f64 * dur;
        }
    }
    (span_s, totals)
}

/// Fits the per-operator segment-to-interval mapper on complete intervals.
///
/// For each operator the fit inputs are, per interval, the mean active
/// seconds per polling span (x) and the total active seconds (y). Operators
/// that are never active are excluded with a note.
pub fn fit_epoch_mapper(
    intervals: &[DischargeInterval],
    poll_interval_ms: u64,
) -> Result<EpochMapper, InferenceError> {
    if intervals.len() < 10 {
        return Err(InferenceError::TooFewIntervals(intervals.len()));
    }
    let poll_s = poll_interval_ms as f64 / 1000.0;

    let mut all_ops: BTreeMap<OperatorType, ()> = BTreeMap::new();
    let per_interval: Vec<(f64, BTreeMap<OperatorType, f64>)> = intervals
        .iter()
        .map(|iv| {
            let (span, totals) = window_totals(&iv.segments);
            for ty in totals.keys() {
                all_ops.insert(ty.clone(), ());
            }
            (span, totals)
        })
        .collect();

    let mut per_operator = BTreeMap::new();
    let notes = Vec::new();
    for ty in all_ops.into_keys() {
        let points: Vec<(f64, f64)> = per_interval
            .iter()
            .map(|(span, totals)| {
                let y = totals.get(&ty).copied().unwrap_or(0.0);
                let x = if *span > 0.0 { y * poll_s / span } else { 0.0 };
                (x, y)
            })
            .collect();
        per_operator.insert(ty, fit_line(&points));
    }

    Ok(EpochMapper {
        per_operator,
        poll_interval_ms,
        n_intervals: intervals.len(),
        notes,
    })
}

fn fit_line(points: &[(f64, f64)]) -> OperatorMap {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        syy += (y - mean_y) * (y - mean_y);
        sxy += (x - mean_x) * (y - mean_y);
    }

    // Essentially constant segment share (e.g. an always-on operator whose
    // only x-variation is dropped-poll noise): the map degenerates to a
    // ratio through the origin. It predicts well exactly when the interval
    // totals are themselves stable, so report r = 1 when their spread stays
    // within 5% of the mean and 0 (an unreliable constant) otherwise.
    let sd_x = (sxx / n).sqrt();
    if sd_x <= 0.01 * mean_x.abs().max(1e-9) {
        let slope = if mean_x.abs() > 1e-12 { mean_y / mean_x } else { 0.0 };
        let sd_y = (syy / n).sqrt();
        let r = if sd_y <= 0.05 * mean_y.abs().max(1e-9) { 1.0 } else { 0.0 };
        return OperatorMap {
            slope,
            intercept: 0.0,
            r,
            reliable: r >= RELIABLE_R,
        };
    }

    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r = if syy < 1e-12 {
        1.0
    } else {
        sxy / (sxx.sqrt() * syy.sqrt())
    };
    OperatorMap {
        slope,
        intercept,
        r,
        reliable: r >= RELIABLE_R,
    }
}

/// Predicts the next epoch from a trailing window of segments.
///
/// Operators with zero observed activity contribute zero interval-scale
/// activity directly (the mapper line applies to observed activity only),
/// so a fully idle window reproduces the model's intercept exactly.
pub fn predict_epoch(
    mapper: &EpochMapper,
    model: &PowerModel,
    estimate: Option<&PowerEstimate>,
    window: &[ExecutionSegment],
    epoch_len_s: f64,
    e_per_percent_j: f64,
) -> Result<EpochPrediction, InferenceError> {
    if window.is_empty() {
        return Err(InferenceError::EmptyWindow);
    }
    let poll_s = mapper.poll_interval_ms as f64 / 1000.0;
    let (span_s, totals) = window_totals(window);

    let schema = model.schema();
    let mut mapped: BTreeMap<OperatorType, f64> = BTreeMap::new();
    let mut low_confidence = false;
    for (ty, &w) in &totals {
        if w == 0.0 {
            continue;
        }
        let op_map = mapper
            .per_operator
            .get(ty)
            .ok_or_else(|| InferenceError::UnknownOperator(ty.to_string(), "mapper"))?;
        if !schema.contains(ty) {
            return Err(InferenceError::UnknownOperator(ty.to_string(), "model schema"));
        }
        if !op_map.reliable {
            low_confidence = true;
        }
        let x = w * poll_s / span_s;
        let interval_scale = (op_map.slope * x + op_map.intercept).max(0.0);
        mapped.insert(ty.clone(), interval_scale);
    }

    let features: Vec<f64> = schema
        .iter()
        .map(|ty| mapped.get(ty).copied().unwrap_or(0.0))
        .collect();
    let predicted_interval_s = model.predict(&features);
    if predicted_interval_s.is_nan() || predicted_interval_s <= 0.0 {
        return Err(InferenceError::InvalidPrediction(predicted_interval_s));
    }

    let per_operator_power_w = estimate.map(|est| {
        totals
            .keys()
            .filter_map(|ty| {
                est.per_operator
                    .get(ty)
                    .map(|p| (ty.clone(), p.absolute_power_w))
            })
            .collect()
    });

    Ok(EpochPrediction {
        predicted_interval_s,
        predicted_avg_power_w: e_per_percent_j / predicted_interval_s,
        per_operator_power_w,
        epoch_len_s,
        mapped_features: mapped,
        low_confidence,
    })
}
