//! Interval-duration prediction models: ordinary least squares and
//! epsilon-SVR, nested cross-validation with grid search, metrics, model
//! selection, and the model file format.

mod cv;
mod families;
mod linear;
mod model;
pub(crate) mod ols;
mod svr;

pub use cv::{
    nested_cv, select_model, selection_gain, CvConfig, CvReport, FamilyCv, Selection, SvrGrid,
    SvrParams,
};
pub use families::{family_support, FamilyRequest};
pub use linear::{fit_linear, LinearModel};
pub use model::{load_model, save_model, PowerModel};
pub use svr::{fit_svr, KernelSpec, Standardization, SvrModel, SvrSettings, DEFAULT_MAX_PASSES};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segment::FeaturizeMode;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("insufficient samples: n={n} with p={p} features (need n > p + 1)")]
    InsufficientSamples { n: usize, p: usize },
    #[error("degenerate kernel: gamma={0} must be positive")]
    DegenerateKernel(f64),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("prediction inputs disagree: {0}")]
    BadInput(String),
    #[error("model file: {0}")]
    Load(String),
    #[error("model family {family}: {reason}")]
    UnsupportedFamily { family: String, reason: String },
}

/// Which model family a fitted predictor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Linear,
    Svr,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Linear => f.write_str("linear"),
            Family::Svr => f.write_str("svr"),
        }
    }
}

/// Provenance attached to every fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelMeta {
    /// Training sample count.
    pub n: usize,
    pub seed: u64,
    /// Unix seconds; taken from `SOURCE_DATE_EPOCH` when set, else 0, so
    /// identical runs produce identical files.
    pub created_unix: u64,
    pub featurize_mode: FeaturizeMode,
    /// Energy per 1% SoC drop of the training device, echoed from the trace
    /// header; attribution reads it back.
    pub e_per_percent_j: Option<f64>,
    /// Label of the training trace's device header, used to warn about
    /// stale models at prediction time.
    pub device_label: Option<String>,
    /// (RMSE_linear - RMSE_svr) / RMSE_linear from model selection.
    pub selection_gain: Option<f64>,
    pub cv: Option<cv::CvSummary>,
    pub warnings: Vec<String>,
}

impl ModelMeta {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            created_unix: std::env::var("SOURCE_DATE_EPOCH")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(0),
            ..Self::default()
        }
    }
}

/// Prediction quality summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse_s: f64,
    /// 100 x (1 - mean |pred - actual| / actual), over pairs with a
    /// positive actual.
    pub accuracy_pct: f64,
    pub r2: f64,
    /// Pairs excluded from the accuracy mean because the actual was zero
    /// (they still count toward RMSE).
    pub accuracy_excluded: usize,
}

pub fn compute_metrics(predictions: &[f64], actuals: &[f64]) -> Result<Metrics, RegressError> {
    if predictions.len() != actuals.len() || predictions.is_empty() {
        return Err(RegressError::BadInput(format!(
            "got {} predictions for {} actuals",
            predictions.len(),
            actuals.len()
        )));
    }
    let n = actuals.len() as f64;
    let sse: f64 = predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    let rmse_s = (sse / n).sqrt();

    let mut ape_sum = 0.0;
    let mut ape_n = 0usize;
    for (p, a) in predictions.iter().zip(actuals) {
        if *a > 0.0 {
            ape_sum += (p - a).abs() / a;
            ape_n += 1;
        }
    }
    let accuracy_pct = if ape_n > 0 {
        100.0 * (1.0 - ape_sum / ape_n as f64)
    } else {
        f64::NAN
    };

    let mean_y: f64 = actuals.iter().sum::<f64>() / n;
    let ss_tot: f64 = actuals.iter().map(|a| (a - mean_y) * (a - mean_y)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - sse / ss_tot
    } else if sse == 0.0 {
        1.0
    } else {
        0.0
    };

    Ok(Metrics {
        rmse_s,
        accuracy_pct,
        r2,
        accuracy_excluded: actuals.len() - ape_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let m = compute_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.rmse_s, 0.0);
        assert_eq!(m.accuracy_pct, 100.0);
        assert_eq!(m.r2, 1.0);
    }

    #[test]
    fn accuracy_and_rmse_arithmetic() {
        let m = compute_metrics(&[97.0, 103.0], &[100.0, 100.0]).unwrap();
        assert!((m.accuracy_pct - 97.0).abs() < 1e-12);
        assert!((m.rmse_s - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_actual_excluded_from_accuracy_but_not_rmse() {
        let m = compute_metrics(&[4.0, 100.0], &[0.0, 100.0]).unwrap();
        assert_eq!(m.accuracy_excluded, 1);
        assert_eq!(m.accuracy_pct, 100.0);
        assert!((m.rmse_s - (16.0f64 / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(compute_metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(compute_metrics(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_and_rmse_rank_proportional_errors_alike() {
        // Two prediction sets with proportional errors: whichever wins on
        // RMSE also wins on accuracy.
        let actuals = [100.0, 120.0, 140.0];
        let close: Vec<f64> = actuals.iter().map(|a| a * 1.02).collect();
        let far: Vec<f64> = actuals.iter().map(|a| a * 1.08).collect();
        let m_close = compute_metrics(&close, &actuals).unwrap();
        let m_far = compute_metrics(&far, &actuals).unwrap();
        assert!(m_close.rmse_s < m_far.rmse_s);
        assert!(m_close.accuracy_pct > m_far.accuracy_pct);
    }
}
