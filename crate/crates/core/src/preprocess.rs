//! Training-data noise filters, applied in order: poll-count check,
//! duration bucketization, Cook's distance. Filters only ever drop samples,
//! never modify them, and every drop is recorded for audit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regress::ols;
use crate::segment::{DischargeInterval, IntervalSample};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("insufficient samples for Cook's distance: n={n}, p={p} (need n > p + 1)")]
    InsufficientSamples { n: usize, p: usize },
    #[error("intervals and samples disagree: {0}")]
    MismatchedInputs(String),
}

/// One dropped sample and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    /// Interval index of the removed sample.
    pub interval: usize,
    pub rule: String,
    pub detail: String,
}

/// Audit trail of one filter stage. `kept_count + removals.len()` always
/// equals `input_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub stage: String,
    pub input_count: usize,
    pub kept_count: usize,
    pub removals: Vec<Removal>,
    /// Non-removal observations (e.g. a ridge-stabilized Cook's fit).
    pub notes: Vec<String>,
}

impl FilterReport {
    fn new(stage: &str, input_count: usize, removals: Vec<Removal>) -> Self {
        Self {
            stage: stage.to_string(),
            input_count,
            kept_count: input_count - removals.len(),
            removals,
            notes: Vec::new(),
        }
    }
}

/// Combined report across the pipeline stages.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineReport {
    pub stages: Vec<FilterReport>,
}

impl PipelineReport {
    pub fn total_removed(&self) -> usize {
        self.stages.iter().map(|s| s.removals.len()).sum()
    }

    /// CSV form: `stage,interval,rule,detail`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,interval,rule,detail\n");
        for stage in &self.stages {
            for r in &stage.removals {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    stage.stage, r.interval, r.rule, r.detail
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Allowed relative deviation between observed and expected poll counts.
    pub poll_count_threshold: f64,
    pub bucket_width_s: f64,
    pub k_sigma: f64,
    pub min_bucket: usize,
    /// Cook's distance cutoff as a multiple of 1/n (the usual rule is 4/n).
    pub cooks_multiplier: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            poll_count_threshold: 0.10,
            bucket_width_s: 10.0,
            k_sigma: 2.0,
            min_bucket: 3,
            cooks_multiplier: 4.0,
        }
    }
}

/// Drops intervals whose observed poll count deviates from the expected
/// `floor(duration / poll_interval)` by more than `threshold` (relative).
/// Intervals shorter than one poll are dropped as `too-short`.
pub fn filter_poll_count(
    intervals: &[DischargeInterval],
    poll_interval_ms: u64,
    threshold: f64,
) -> (Vec<DischargeInterval>, FilterReport) {
    let mut kept = Vec::with_capacity(intervals.len());
    let mut removals = Vec::new();
    for interval in intervals {
        let expected = ((interval.end_ms - interval.start_ms) / poll_interval_ms) as usize;
        if expected == 0 {
            removals.push(Removal {
                interval: interval.index,
                rule: "too-short".into(),
                detail: format!("duration {} ms < one poll interval", interval.end_ms - interval.start_ms),
            });
            continue;
        }
        let deviation =
            (interval.poll_count as f64 - expected as f64).abs() / expected as f64;
        if deviation > threshold {
            removals.push(Removal {
                interval: interval.index,
                rule: "poll-count".into(),
                detail: format!(
                    "observed {} polls; expected {expected}; deviation {:.1}%",
                    interval.poll_count,
                    deviation * 100.0
                ),
            });
        } else {
            kept.push(interval.clone());
        }
    }
    (kept, FilterReport::new("poll-count", intervals.len(), removals))
}

/// Bucketizes samples by their feature vector (each component floored to a
/// multiple of `bucket_width_s`) and removes samples whose target lies more
/// than `k_sigma` bucket standard deviations from the bucket mean,
/// re-trimming until every bucket is stable (removals shrink a bucket's
/// spread, so a single sweep would not be idempotent).
///
/// Buckets smaller than `min_bucket` pass through untouched, and
/// zero-variance buckets keep all members (2 sigma of zero would delete
/// everything but exact duplicates).
pub fn bucket_filter(
    samples: &[IntervalSample],
    bucket_width_s: f64,
    k_sigma: f64,
    min_bucket: usize,
) -> (Vec<IntervalSample>, FilterReport) {
    use std::collections::BTreeMap;

    let mut buckets: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let key: Vec<i64> = s
            .features
            .iter()
            .map(|f| (f / bucket_width_s).floor() as i64)
            .collect();
        buckets.entry(key).or_default().push(i);
    }

    // Resolution floors: trace timestamps are integer milliseconds, so
    // spreads at that scale are quantization, not measurement.
    const SIGMA_FLOOR: f64 = 1e-3;
    const DEVIATION_FLOOR: f64 = 1e-2;

    let mut drop = vec![false; samples.len()];
    let mut removals = Vec::new();
    for members in buckets.values() {
        if members.len() < min_bucket {
            continue;
        }
        let mut alive: Vec<usize> = members.clone();
        loop {
            let n = alive.len() as f64;
            let mean = alive.iter().map(|&i| samples[i].target_s).sum::<f64>() / n;
            let sigma = (alive
                .iter()
                .map(|&i| {
                    let d = samples[i].target_s - mean;
                    d * d
                })
                .sum::<f64>()
                / n)
                .sqrt();
            if sigma <= SIGMA_FLOOR {
                break;
            }
            let before = alive.len();
            alive.retain(|&i| {
                let dev = (samples[i].target_s - mean).abs();
                let out = dev > k_sigma * sigma && dev > DEVIATION_FLOOR;
                if out {
                    drop[i] = true;
                    removals.push(Removal {
                        interval: samples[i].interval_ref,
                        rule: "bucket".into(),
                        detail: format!(
                            "target {} vs bucket mean {:.3} ({:.2} sigma; sigma {:.3})",
                            samples[i].target_s,
                            mean,
                            dev / sigma,
                            sigma
                        ),
                    });
                }
                !out
            });
            if alive.len() == before || alive.len() < min_bucket {
                break;
            }
        }
    }

    let kept: Vec<IntervalSample> = samples
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop[*i])
        .map(|(_, s)| s.clone())
        .collect();
    removals.sort_by_key(|r| r.interval);
    (kept, FilterReport::new("bucket", samples.len(), removals))
}

/// Fits OLS once and removes samples whose Cook's distance exceeds
/// `multiplier / n` (single pass, no refit-and-repeat). A perfect fit has no
/// outliers by definition; a rank-deficient design falls back to a
/// ridge-stabilized fit, noted in the report.
pub fn cooks_filter(
    samples: &[IntervalSample],
    multiplier: f64,
) -> Result<(Vec<IntervalSample>, FilterReport), PreprocessError> {
    let n = samples.len();
    let p = samples.first().map_or(0, |s| s.features.len());
    if n <= p + 1 {
        return Err(PreprocessError::InsufficientSamples { n, p });
    }

    let design: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let mut row = Vec::with_capacity(p + 1);
            row.push(1.0);
            row.extend_from_slice(&s.features);
            row
        })
        .collect();
    let targets: Vec<f64> = samples.iter().map(|s| s.target_s).collect();
    let fit = ols::solve(&design, &targets);

    let p_params = p + 1;
    let dof = (n - p_params) as f64;
    let rss: f64 = fit.residuals.iter().map(|e| e * e).sum();
    let mse = rss / dof;

    let mut removals = Vec::new();
    // Cook's distance is scale-free, so it flags points even when the fit
    // is essentially exact. Residual RMSE at the trace format's millisecond
    // resolution carries no outlier signal; skip removal below 10 ms.
    if mse.sqrt() > 1e-2 {
        let cutoff = multiplier / n as f64;
        for (i, s) in samples.iter().enumerate() {
            let e = fit.residuals[i];
            let h = fit.hat_diag[i].min(1.0 - 1e-12);
            let d = (e * e / (p_params as f64 * mse)) * (h / ((1.0 - h) * (1.0 - h)));
            if d > cutoff {
                removals.push(Removal {
                    interval: s.interval_ref,
                    rule: "cooks".into(),
                    detail: format!("D={d:.4} > {cutoff:.4}"),
                });
            }
        }
    }

    let removed: std::collections::BTreeSet<usize> =
        removals.iter().map(|r| r.interval).collect();
    let kept: Vec<IntervalSample> = samples
        .iter()
        .filter(|s| !removed.contains(&s.interval_ref))
        .cloned()
        .collect();
    let mut report = FilterReport::new("cooks", n, removals);
    if fit.ridge_applied {
        report
            .notes
            .push("design rank-deficient; Cook's distances from ridge-stabilized fit".into());
    }
    Ok((kept, report))
}

/// The full pipeline in order: poll-count filter on intervals, then
/// bucketization, then Cook's distance on the surviving samples.
///
/// Removing a sample shifts the statistics the other filters computed, so
/// the bucket/Cook's cycle repeats until the kept set is stable; each
/// Cook's call remains a single fit-and-cut. A second application of the
/// pipeline is then a no-op by construction.
///
/// `samples[i]` must be the featurization of `intervals[i]`.
pub fn preprocess_pipeline(
    intervals: &[DischargeInterval],
    samples: &[IntervalSample],
    poll_interval_ms: u64,
    config: &PreprocessConfig,
) -> Result<(Vec<IntervalSample>, PipelineReport), PreprocessError> {
    if intervals.len() != samples.len() {
        return Err(PreprocessError::MismatchedInputs(format!(
            "{} intervals vs {} samples",
            intervals.len(),
            samples.len()
        )));
    }
    for (iv, s) in intervals.iter().zip(samples) {
        if iv.index != s.interval_ref {
            return Err(PreprocessError::MismatchedInputs(format!(
                "interval {} paired with sample {}",
                iv.index, s.interval_ref
            )));
        }
    }

    let mut report = PipelineReport::default();

    let (kept_intervals, stage) =
        filter_poll_count(intervals, poll_interval_ms, config.poll_count_threshold);
    let surviving: std::collections::BTreeSet<usize> =
        kept_intervals.iter().map(|iv| iv.index).collect();
    report.stages.push(stage);
    let mut samples: Vec<IntervalSample> = samples
        .iter()
        .filter(|s| surviving.contains(&s.interval_ref))
        .cloned()
        .collect();

    loop {
        let before = samples.len();

        let (kept, stage) = bucket_filter(
            &samples,
            config.bucket_width_s,
            config.k_sigma,
            config.min_bucket,
        );
        report.stages.push(stage);
        samples = kept;

        let (kept, stage) = cooks_filter(&samples, config.cooks_multiplier)?;
        report.stages.push(stage);
        samples = kept;

        if samples.len() == before {
            break;
        }
    }

    Ok((samples, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::ActiveSet;

    fn interval(index: usize, start_ms: u64, end_ms: u64, poll_count: usize) -> DischargeInterval {
        DischargeInterval {
            index,
            start_ms,
            end_ms,
            segments: vec![crate::segment::ExecutionSegment {
                start_ms,
                end_ms,
                active: ActiveSet::idle(),
                imputed: false,
            }],
            poll_count,
        }
    }

    fn sample(interval_ref: usize, features: Vec<f64>, target_s: f64) -> IntervalSample {
        IntervalSample {
            features,
            target_s,
            interval_ref,
        }
    }

    #[test]
    fn poll_count_keeps_full_intervals() {
        let ivs = vec![interval(0, 0, 150_000, 150)];
        let (kept, report) = filter_poll_count(&ivs, 1000, 0.10);
        assert_eq!(kept.len(), 1);
        assert!(report.removals.is_empty());
        assert_eq!(report.kept_count + report.removals.len(), report.input_count);
    }

    #[test]
    fn poll_count_drops_twenty_percent_deviation() {
        let ivs = vec![interval(3, 0, 150_000, 120)];
        let (kept, report) = filter_poll_count(&ivs, 1000, 0.10);
        assert!(kept.is_empty());
        assert_eq!(report.removals[0].interval, 3);
        assert_eq!(report.removals[0].rule, "poll-count");
    }

    #[test]
    fn poll_count_drops_too_short_interval() {
        let ivs = vec![interval(0, 0, 500, 0)];
        let (kept, report) = filter_poll_count(&ivs, 1000, 0.10);
        assert!(kept.is_empty());
        assert_eq!(report.removals[0].rule, "too-short");
    }

    #[test]
    fn bucket_filter_hand_computed_statistics() {
        // One bucket (all features in [40, 50)); targets 120 x3, 119 x2,
        // 121, 180. Mean = 128.57143, population sigma = 20.99914; the
        // outlier sits 2.449 sigma out, everything else within 0.46 sigma.
        let targets = [120.0, 120.0, 120.0, 119.0, 119.0, 121.0, 180.0];
        let samples: Vec<IntervalSample> = targets
            .iter()
            .enumerate()
            .map(|(i, &t)| sample(i, vec![41.0 + i as f64], t))
            .collect();
        let (kept, report) = bucket_filter(&samples, 10.0, 2.0, 3);
        assert_eq!(kept.len(), 6);
        assert_eq!(report.removals.len(), 1);
        assert_eq!(report.removals[0].interval, 6);
        assert!(report.removals[0].detail.contains("180"));
    }

    #[test]
    fn bucket_smaller_than_min_passes_through() {
        let samples = vec![
            sample(0, vec![40.0], 100.0),
            sample(1, vec![41.0], 900.0),
        ];
        let (kept, report) = bucket_filter(&samples, 10.0, 2.0, 3);
        assert_eq!(kept.len(), 2);
        assert!(report.removals.is_empty());
    }

    #[test]
    fn zero_variance_bucket_keeps_everything() {
        let samples: Vec<IntervalSample> =
            (0..5).map(|i| sample(i, vec![40.0], 120.0)).collect();
        let (kept, report) = bucket_filter(&samples, 10.0, 2.0, 3);
        assert_eq!(kept.len(), 5);
        assert!(report.removals.is_empty());
    }

    #[test]
    fn cooks_perfect_fit_removes_nothing() {
        let samples: Vec<IntervalSample> = (0..20)
            .map(|i| {
                let x = (i % 7) as f64 * 3.0;
                sample(i, vec![x], 139.5 - 3.463 * x)
            })
            .collect();
        let (kept, report) = cooks_filter(&samples, 4.0).unwrap();
        assert_eq!(kept.len(), 20);
        assert!(report.removals.is_empty());
    }

    #[test]
    fn cooks_catches_injected_outlier() {
        let mut samples: Vec<IntervalSample> = (0..24)
            .map(|i| {
                let x = (i % 8) as f64 * 4.0;
                // Small deterministic wiggle stands in for noise.
                let wiggle = ((i * 31 % 7) as f64 - 3.0) * 0.05;
                sample(i, vec![x], 139.5 - 3.463 * x + wiggle)
            })
            .collect();
        samples[11].target_s += 30.0; // about 10 sigma of the wiggle scale
        let (kept, report) = cooks_filter(&samples, 4.0).unwrap();
        assert!(report.removals.iter().any(|r| r.interval == 11));
        assert_eq!(kept.len() + report.removals.len(), 24);
    }

    #[test]
    fn cooks_requires_enough_samples() {
        let samples = vec![
            sample(0, vec![1.0], 10.0),
            sample(1, vec![2.0], 11.0),
        ];
        assert!(matches!(
            cooks_filter(&samples, 4.0),
            Err(PreprocessError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn pipeline_counts_reconcile_and_csv_renders() {
        let n = 30usize;
        let intervals: Vec<DischargeInterval> = (0..n)
            .map(|i| {
                let polls = if i == 4 { 100 } else { 140 };
                interval(i, (i as u64) * 140_000, (i as u64 + 1) * 140_000, polls)
            })
            .collect();
        let samples: Vec<IntervalSample> = (0..n)
            .map(|i| {
                let x = (i % 6) as f64 * 5.0;
                sample(i, vec![x], 140.0 - 2.0 * x + ((i % 3) as f64) * 0.02)
            })
            .collect();
        let (kept, report) =
            preprocess_pipeline(&intervals, &samples, 1000, &PreprocessConfig::default()).unwrap();
        assert_eq!(kept.len() + report.total_removed(), n);
        for stage in &report.stages {
            assert_eq!(stage.kept_count + stage.removals.len(), stage.input_count);
        }
        let csv = report.to_csv();
        assert!(csv.starts_with("stage,interval,rule,detail\n"));
        assert!(csv.contains("poll-count,4,"));
    }

    #[test]
    fn pipeline_is_idempotent_on_clean_data() {
        let n = 24usize;
        let intervals: Vec<DischargeInterval> = (0..n)
            .map(|i| interval(i, (i as u64) * 120_000, (i as u64 + 1) * 120_000, 120))
            .collect();
        let samples: Vec<IntervalSample> = (0..n)
            .map(|i| {
                let x = (i % 5) as f64 * 6.0;
                sample(i, vec![x], 120.0 - 1.5 * x)
            })
            .collect();
        let config = PreprocessConfig::default();
        let (once, _) = preprocess_pipeline(&intervals, &samples, 1000, &config).unwrap();
        let surviving: Vec<DischargeInterval> = intervals
            .iter()
            .filter(|iv| once.iter().any(|s| s.interval_ref == iv.index))
            .cloned()
            .collect();
        let (twice, report) =
            preprocess_pipeline(&surviving, &once, 1000, &config).unwrap();
        assert_eq!(once, twice);
        assert_eq!(report.total_removed(), 0);
    }
}
