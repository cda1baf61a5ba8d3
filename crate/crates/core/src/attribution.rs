//! Inverting a fitted linear interval model into per-operator power
//! estimates.
//!
//! The fitted relation is `T = intercept + sum_k beta_k x_k` with
//! `intercept = E_1% / p_idle` and `beta_k = (p_idle - p_k) / p_idle`, so
//! `p_idle = E_1% / intercept` and `p_k = p_idle (1 - beta_k)`. An operator
//! hotter than idle has a negative coefficient; the magnitude |beta_k| is
//! its relative power. SVR models are interval predictors only and are not
//! invertible this way.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regress::LinearModel;
use crate::segment::DischargeInterval;
use crate::trace::OperatorType;

#[derive(Debug, Error)]
pub enum AttributionError {
    #[error("model intercept {0} s is unphysical (must be positive)")]
    UnphysicalIntercept(f64),
    #[error("e_per_percent must be positive, got {0}")]
    BadEnergy(f64),
    #[error("operator {0} in the interval is not covered by the estimate")]
    UncoveredOperator(String),
}

/// Sign diagnostics for one operator's coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerFlag {
    /// Negative coefficient: the operator draws more than idle (the
    /// expected case).
    HotterThanIdle,
    /// Positive coefficient: fitted as drawing less than idle. Physically
    /// suspicious; reported, never clamped.
    CoolerThanIdle,
    /// Zero coefficient: indistinguishable from idle.
    Indistinguishable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorPower {
    /// |beta_k|, dimensionless.
    pub relative_power: f64,
    pub absolute_power_w: f64,
    /// Watts above idle (absolute - idle).
    pub dyn_power_w: f64,
    pub flag: PowerFlag,
}

/// Absolute power picture recovered from a linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub p_idle_w: f64,
    pub per_operator: BTreeMap<OperatorType, OperatorPower>,
    /// Input echo: joules per 1% SoC drop used for the inversion.
    pub e_per_percent_j: f64,
    /// Set when any absolute power came out negative; values are still
    /// reported untouched.
    pub low_confidence: bool,
}

/// Per-segment energy attribution of one interval under an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentEnergy {
    pub start_ms: u64,
    pub end_ms: u64,
    pub energy_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalAttribution {
    pub segments: Vec<SegmentEnergy>,
    pub total_j: f64,
    /// total_j - e_per_percent_j: leftover the estimate fails to explain.
    pub residual_j: f64,
}

/// Extracts `|beta_k|` per operator with a sign flag.
pub fn relative_power(
    model: &LinearModel,
) -> Result<BTreeMap<OperatorType, (f64, PowerFlag)>, AttributionError> {
    if model.intercept.is_nan() || model.intercept <= 0.0 {
        return Err(AttributionError::UnphysicalIntercept(model.intercept));
    }
    Ok(model
        .coefficients
        .iter()
        .map(|(ty, &beta)| {
            let flag = if beta < 0.0 {
                PowerFlag::HotterThanIdle
            } else if beta > 0.0 {
                PowerFlag::CoolerThanIdle
            } else {
                PowerFlag::Indistinguishable
            };
            (ty.clone(), (beta.abs(), flag))
        })
        .collect())
}

/// Full inversion: idle power from the intercept, absolute per-operator
/// powers from the coefficients.
pub fn absolute_power(
    model: &LinearModel,
    e_per_percent_j: f64,
) -> Result<PowerEstimate, AttributionError> {
    if !(e_per_percent_j > 0.0 && e_per_percent_j.is_finite()) {
        return Err(AttributionError::BadEnergy(e_per_percent_j));
    }
    let relative = relative_power(model)?;
    let p_idle_w = e_per_percent_j / model.intercept;

    let mut low_confidence = false;
    let per_operator: BTreeMap<OperatorType, OperatorPower> = model
        .coefficients
        .iter()
        .map(|(ty, &beta)| {
            let absolute_power_w = p_idle_w * (1.0 - beta);
            if absolute_power_w < 0.0 {
                low_confidence = true;
            }
            let (relative_power, flag) = relative[ty];
            (
                ty.clone(),
                OperatorPower {
                    relative_power,
                    absolute_power_w,
                    dyn_power_w: absolute_power_w - p_idle_w,
                    flag,
                },
            )
        })
        .collect();

    Ok(PowerEstimate {
        p_idle_w,
        per_operator,
        e_per_percent_j,
        low_confidence,
    })
}

/// Prices each segment of an interval under the estimate:
/// `(p_idle + sum count_k * dyn_k) * duration`. The residual against
/// `e_per_percent` shows how much the estimate leaves unexplained.
pub fn attribute_interval(
    estimate: &PowerEstimate,
    interval: &DischargeInterval,
) -> Result<IntervalAttribution, AttributionError> {
    let mut segments = Vec::with_capacity(interval.segments.len());
    let mut total_j = 0.0;
    for seg in &interval.segments {
        let mut power = estimate.p_idle_w;
        for (ty, count) in seg.active.iter() {
            let op = estimate
                .per_operator
                .get(ty)
                .ok_or_else(|| AttributionError::UncoveredOperator(ty.to_string()))?;
            power += count as f64 * op.dyn_power_w;
        }
        let energy_j = power * seg.duration_s();
        total_j += energy_j;
        segments.push(SegmentEnergy {
            start_ms: seg.start_ms,
            end_ms: seg.end_ms,
            energy_j,
        });
    }
    Ok(IntervalAttribution {
        segments,
        total_j,
        residual_j: total_j - estimate.e_per_percent_j,
    })
}
