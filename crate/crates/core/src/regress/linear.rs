//! Ordinary least squares on interval samples.
//!
//! The model is `duration = intercept + sum_k beta_k * active_seconds_k`.
//! Against a trace with constant per-operator powers the intercept is
//! `E_1% / p_idle` and each coefficient is `-dyn_k / p_idle`, which is what
//! the attribution module inverts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::segment::IntervalSample;
use crate::trace::OperatorType;

use super::{ols, ModelMeta, RegressError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Seconds: predicted interval duration at zero activity.
    pub intercept: f64,
    /// Seconds of duration per count-weighted active second, per feature.
    pub coefficients: BTreeMap<OperatorType, f64>,
    pub schema: Vec<OperatorType>,
    /// True when the design was rank-deficient and a tiny ridge was applied.
    pub ridge_applied: bool,
    pub metadata: ModelMeta,
}

impl LinearModel {
    pub fn predict(&self, features: &[f64]) -> f64 {
        debug_assert_eq!(features.len(), self.schema.len());
        let mut y = self.intercept;
        for (ty, x) in self.schema.iter().zip(features) {
            y += self.coefficients[ty] * x;
        }
        y
    }

    pub fn coefficient(&self, ty: &OperatorType) -> Option<f64> {
        self.coefficients.get(ty).copied()
    }
}

/// Fits OLS by Householder QR.
///
/// All-zero feature columns carry no information; they are dropped from the
/// solve (their coefficient is zero) and noted in the model warnings. A
/// rank-deficient remainder falls back to a ridge-stabilized solve, flagged
/// via `ridge_applied`.
pub fn fit_linear(
    samples: &[IntervalSample],
    schema: &[OperatorType],
    mut metadata: ModelMeta,
) -> Result<LinearModel, RegressError> {
    let n = samples.len();
    let p = schema.len();
    if n <= p + 1 {
        return Err(RegressError::InsufficientSamples { n, p });
    }
    for s in samples {
        if s.features.len() != p {
            return Err(RegressError::BadInput(format!(
                "sample {} has {} features, schema has {p}",
                s.interval_ref,
                s.features.len()
            )));
        }
    }

    let kept: Vec<usize> = (0..p)
        .filter(|&j| samples.iter().any(|s| s.features[j] != 0.0))
        .collect();
    for (j, ty) in schema.iter().enumerate() {
        if !kept.contains(&j) {
            metadata
                .warnings
                .push(format!("feature {ty} is identically zero; dropped"));
        }
    }

    let design: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let mut row = Vec::with_capacity(kept.len() + 1);
            row.push(1.0);
            row.extend(kept.iter().map(|&j| s.features[j]));
            row
        })
        .collect();
    let targets: Vec<f64> = samples.iter().map(|s| s.target_s).collect();

    let fit = ols::solve(&design, &targets);
    if fit.ridge_applied {
        metadata
            .warnings
            .push("design rank-deficient; ridge-stabilized fit".to_string());
    }

    let mut coefficients: BTreeMap<OperatorType, f64> =
        schema.iter().map(|t| (t.clone(), 0.0)).collect();
    for (slot, &j) in kept.iter().enumerate() {
        coefficients.insert(schema[j].clone(), fit.beta[slot + 1]);
    }

    metadata.n = n;
    Ok(LinearModel {
        intercept: fit.beta[0],
        coefficients,
        schema: schema.to_vec(),
        ridge_applied: fit.ridge_applied,
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty(s: &str) -> OperatorType {
        OperatorType::new(s).unwrap()
    }

    fn sample(features: Vec<f64>, target_s: f64, interval_ref: usize) -> IntervalSample {
        IntervalSample {
            features,
            target_s,
            interval_ref,
        }
    }

    #[test]
    fn recovers_planted_coefficients_exactly() {
        // Planted: intercept 139.5, beta_NQ = -3.463, beta_B = -1.2.
        let schema = vec![ty("NQ"), ty("B")];
        let mut samples = Vec::new();
        for i in 0..40 {
            let a = (i % 7) as f64 * 3.0;
            let b = (i % 5) as f64 * 4.5;
            samples.push(sample(vec![a, b], 139.5 - 3.463 * a - 1.2 * b, i));
        }
        let m = fit_linear(&samples, &schema, ModelMeta::new(0, 0)).unwrap();
        assert!((m.intercept - 139.5).abs() / 139.5 < 1e-9);
        assert!((m.coefficient(&ty("NQ")).unwrap() + 3.463).abs() / 3.463 < 1e-9);
        assert!((m.coefficient(&ty("B")).unwrap() + 1.2).abs() / 1.2 < 1e-9);
        assert!(!m.ridge_applied);
        assert!(m.metadata.warnings.is_empty());
    }

    #[test]
    fn all_zero_feature_column_dropped_with_warning() {
        let schema = vec![ty("NQ")];
        let samples: Vec<IntervalSample> = (0..6)
            .map(|i| sample(vec![0.0], 139.5 + (i % 2) as f64, i))
            .collect();
        let m = fit_linear(&samples, &schema, ModelMeta::new(0, 0)).unwrap();
        assert_eq!(m.coefficient(&ty("NQ")), Some(0.0));
        // Intercept-only fit: the mean of the targets.
        let mean = (139.5 * 6.0 + 3.0) / 6.0;
        assert!((m.intercept - mean).abs() < 1e-9);
        assert_eq!(m.metadata.warnings.len(), 1);
    }

    #[test]
    fn insufficient_samples_rejected() {
        let schema = vec![ty("A"), ty("B")];
        let samples = vec![
            sample(vec![1.0, 2.0], 10.0, 0),
            sample(vec![2.0, 1.0], 11.0, 1),
            sample(vec![3.0, 1.0], 12.0, 2),
        ];
        assert!(matches!(
            fit_linear(&samples, &schema, ModelMeta::default()),
            Err(RegressError::InsufficientSamples { n: 3, p: 2 })
        ));
    }

    #[test]
    fn duplicated_samples_leave_fit_unchanged() {
        let schema = vec![ty("A")];
        let samples: Vec<IntervalSample> = (0..8)
            .map(|i| sample(vec![i as f64], 100.0 - 2.0 * i as f64 + ((i % 3) as f64) * 0.1, i))
            .collect();
        let doubled: Vec<IntervalSample> =
            samples.iter().chain(samples.iter()).cloned().collect();
        let m1 = fit_linear(&samples, &schema, ModelMeta::default()).unwrap();
        let m2 = fit_linear(&doubled, &schema, ModelMeta::default()).unwrap();
        assert!((m1.intercept - m2.intercept).abs() < 1e-10);
        assert!(
            (m1.coefficient(&ty("A")).unwrap() - m2.coefficient(&ty("A")).unwrap()).abs() < 1e-10
        );
    }

    #[test]
    fn collinear_features_flag_ridge() {
        let schema = vec![ty("A"), ty("B")];
        let samples: Vec<IntervalSample> = (0..10)
            .map(|i| sample(vec![i as f64, 2.0 * i as f64], 50.0 - i as f64, i))
            .collect();
        let m = fit_linear(&samples, &schema, ModelMeta::default()).unwrap();
        assert!(m.ridge_applied);
        assert!(m.metadata.warnings.iter().any(|w| w.contains("rank-deficient")));
    }
}
