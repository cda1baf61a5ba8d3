//! Nested cross-validation with grid search, and the >15% model-selection
//! heuristic between the linear and SVR families.
//!
//! Outer folds estimate generalization RMSE; inner folds pick SVR
//! hyperparameters on each outer-train split, so selection never sees the
//! outer test data. Everything is deterministic under a fixed seed, and
//! invariant to input order (samples are canonically sorted before the
//! seeded shuffle).

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::segment::IntervalSample;
use crate::trace::OperatorType;

use super::svr::DEFAULT_MAX_PASSES;
use super::{
    fit_linear, fit_svr, Family, KernelSpec, LinearModel, ModelMeta, PowerModel, RegressError,
    SvrModel, SvrSettings,
};

/// Hyperparameter grid for the SVR family. RBF gamma is expressed as a
/// multiple of the `1/p` heuristic (features are standardized to unit
/// variance before the kernel sees them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrGrid {
    pub c: Vec<f64>,
    pub epsilon_s: Vec<f64>,
    pub linear_kernel: bool,
    pub rbf_kernel: bool,
    pub rbf_gamma_scale: Vec<f64>,
}

impl Default for SvrGrid {
    fn default() -> Self {
        Self {
            c: vec![0.1, 1.0, 10.0, 100.0],
            epsilon_s: vec![0.5, 1.0, 2.0],
            linear_kernel: true,
            rbf_kernel: true,
            rbf_gamma_scale: vec![0.1, 1.0, 10.0],
        }
    }
}

impl SvrGrid {
    /// Resolves the grid into concrete settings for `p` features.
    fn points(&self, p: usize) -> Vec<SvrParams> {
        let base_gamma = 1.0 / p.max(1) as f64;
        let mut kernels = Vec::new();
        if self.linear_kernel {
            kernels.push(KernelSpec::Linear);
        }
        if self.rbf_kernel {
            for &scale in &self.rbf_gamma_scale {
                kernels.push(KernelSpec::Rbf {
                    gamma: scale * base_gamma,
                });
            }
        }
        let mut out = Vec::new();
        for &c in &self.c {
            for &epsilon in &self.epsilon_s {
                for &kernel in &kernels {
                    out.push(SvrParams { c, epsilon, kernel });
                }
            }
        }
        out
    }
}

/// One resolved SVR grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: KernelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
    pub grid: SvrGrid,
    pub max_passes: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            outer_folds: 8,
            inner_folds: 4,
            seed: 0,
            grid: SvrGrid::default(),
            max_passes: DEFAULT_MAX_PASSES,
        }
    }
}

/// Per-family outer-fold results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCv {
    pub fold_rmse: Vec<f64>,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    /// Winning grid point per outer fold (`None` entries for the linear
    /// family, which has no hyperparameters).
    pub best_params: Vec<Option<SvrParams>>,
}

impl FamilyCv {
    fn from_folds(fold_rmse: Vec<f64>, best_params: Vec<Option<SvrParams>>) -> Self {
        let k = fold_rmse.len() as f64;
        let mean_rmse = fold_rmse.iter().sum::<f64>() / k;
        let std_rmse = if fold_rmse.len() > 1 {
            (fold_rmse
                .iter()
                .map(|r| (r - mean_rmse) * (r - mean_rmse))
                .sum::<f64>()
                / (k - 1.0))
                .sqrt()
        } else {
            0.0
        };
        Self {
            fold_rmse,
            mean_rmse,
            std_rmse,
            best_params,
        }
    }
}

/// Full nested-CV outcome: per-family statistics plus final candidate models
/// refit on all data (hyperparameters re-searched on the full set for SVR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub n: usize,
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
    pub linear: FamilyCv,
    pub svr: FamilyCv,
    pub final_linear: LinearModel,
    pub final_svr: SvrModel,
    pub final_svr_params: SvrParams,
    pub warnings: Vec<String>,
}

/// Compact CV digest stored inside model metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvSummary {
    pub outer_folds: usize,
    pub linear_rmse_mean: f64,
    pub linear_rmse_std: f64,
    pub svr_rmse_mean: f64,
    pub svr_rmse_std: f64,
}

impl CvReport {
    pub fn summary(&self) -> CvSummary {
        CvSummary {
            outer_folds: self.outer_folds,
            linear_rmse_mean: self.linear.mean_rmse,
            linear_rmse_std: self.linear.std_rmse,
            svr_rmse_mean: self.svr.mean_rmse,
            svr_rmse_std: self.svr.std_rmse,
        }
    }
}

/// The chosen family with its final model and selection gain.
#[derive(Debug, Clone)]
pub struct Selection {
    pub family: Family,
    /// (RMSE_linear - RMSE_svr) / RMSE_linear.
    pub gain: f64,
    pub model: PowerModel,
}

fn rmse_of<F: Fn(&[f64]) -> f64>(predict: F, samples: &[&IntervalSample]) -> f64 {
    let sse: f64 = samples
        .iter()
        .map(|s| {
            let e = predict(&s.features) - s.target_s;
            e * e
        })
        .sum();
    (sse / samples.len() as f64).sqrt()
}

/// Splits `order` into `k` contiguous, size-balanced folds.
fn folds_of(order: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = order.len();
    let base = n / k;
    let extra = n % k;
    let mut out = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        out.push(order[at..at + size].to_vec());
        at += size;
    }
    out
}

fn grid_search_svr(
    samples: &[IntervalSample],
    schema: &[OperatorType],
    train: &[usize],
    inner_folds: usize,
    points: &[SvrParams],
    max_passes: usize,
) -> Result<SvrParams, RegressError> {
    if points.is_empty() {
        return Err(RegressError::EmptyGrid);
    }
    let k = inner_folds.min(train.len() / 2).max(2);
    let folds = folds_of(train, k);
    let mut best: Option<(f64, SvrParams)> = None;
    for &params in points {
        let mut total = 0.0;
        for fold in &folds {
            let fit_idx: Vec<usize> = train.iter().copied().filter(|i| !fold.contains(i)).collect();
            let fit_samples: Vec<IntervalSample> =
                fit_idx.iter().map(|&i| samples[i].clone()).collect();
            let model = fit_svr(
                &fit_samples,
                schema,
                SvrSettings {
                    c: params.c,
                    epsilon: params.epsilon,
                    kernel: params.kernel,
                    max_passes,
                },
                ModelMeta::default(),
            )?;
            let test: Vec<&IntervalSample> = fold.iter().map(|&i| &samples[i]).collect();
            total += rmse_of(|x| model.predict(x), &test);
        }
        let score = total / folds.len() as f64;
        if best.is_none_or(|(b, _)| score < b) {
            best = Some((score, params));
        }
    }
    Ok(best.expect("non-empty grid").1)
}

/// Runs nested cross-validation for the linear and SVR families.
///
/// Outer folds are seed-shuffled after a canonical sort, so the report is
/// independent of the caller's sample order. When `n < 16` the outer fold
/// count drops to `max(2, n/2)` with a warning.
pub fn nested_cv(
    samples: &[IntervalSample],
    schema: &[OperatorType],
    config: &CvConfig,
) -> Result<CvReport, RegressError> {
    let n = samples.len();
    let mut warnings = Vec::new();
    let mut outer = config.outer_folds.max(2);
    if n < 16 {
        let reduced = (n / 2).max(2);
        if reduced != outer {
            warnings.push(format!("n={n} too small for {outer} outer folds; using {reduced}"));
            outer = reduced;
        }
    }
    if n < outer {
        return Err(RegressError::InsufficientSamples { n, p: schema.len() });
    }

    // Canonical order, then a seeded Fisher-Yates shuffle.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let sa = &samples[a];
        let sb = &samples[b];
        sa.interval_ref
            .cmp(&sb.interval_ref)
            .then(sa.target_s.total_cmp(&sb.target_s))
            .then_with(|| {
                for (x, y) in sa.features.iter().zip(&sb.features) {
                    let c = x.total_cmp(y);
                    if c != std::cmp::Ordering::Equal {
                        return c;
                    }
                }
                std::cmp::Ordering::Equal
            })
    });
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }

    let folds = folds_of(&order, outer);
    let points = config.grid.points(schema.len());
    if points.is_empty() {
        return Err(RegressError::EmptyGrid);
    }

    let mut linear_rmse = Vec::with_capacity(outer);
    let mut svr_rmse = Vec::with_capacity(outer);
    let mut svr_best = Vec::with_capacity(outer);

    for fold in &folds {
        let train: Vec<usize> = order.iter().copied().filter(|i| !fold.contains(i)).collect();
        let train_samples: Vec<IntervalSample> =
            train.iter().map(|&i| samples[i].clone()).collect();
        let test: Vec<&IntervalSample> = fold.iter().map(|&i| &samples[i]).collect();

        let lin = fit_linear(&train_samples, schema, ModelMeta::default())?;
        linear_rmse.push(rmse_of(|x| lin.predict(x), &test));

        let params = grid_search_svr(
            samples,
            schema,
            &train,
            config.inner_folds,
            &points,
            config.max_passes,
        )?;
        let svr = fit_svr(
            &train_samples,
            schema,
            SvrSettings {
                c: params.c,
                epsilon: params.epsilon,
                kernel: params.kernel,
                max_passes: config.max_passes,
            },
            ModelMeta::default(),
        )?;
        svr_rmse.push(rmse_of(|x| svr.predict(x), &test));
        svr_best.push(Some(params));
    }

    // Final candidates on all data; SVR hyperparameters re-searched on the
    // full set with the same inner-fold scheme.
    let all: Vec<usize> = order.clone();
    let final_linear = fit_linear(samples, schema, ModelMeta::new(n, config.seed))?;
    let final_svr_params = grid_search_svr(
        samples,
        schema,
        &all,
        config.inner_folds,
        &points,
        config.max_passes,
    )?;
    let final_svr = fit_svr(
        samples,
        schema,
        SvrSettings {
            c: final_svr_params.c,
            epsilon: final_svr_params.epsilon,
            kernel: final_svr_params.kernel,
            max_passes: config.max_passes,
        },
        ModelMeta::new(n, config.seed),
    )?;

    Ok(CvReport {
        n,
        outer_folds: outer,
        inner_folds: config.inner_folds,
        seed: config.seed,
        linear: FamilyCv::from_folds(linear_rmse, vec![None; outer]),
        svr: FamilyCv::from_folds(svr_rmse, svr_best),
        final_linear,
        final_svr,
        final_svr_params,
        warnings,
    })
}

/// Applies the selection heuristic: choose SVR only when it beats the linear
/// model's outer RMSE by more than 15%; ties and small gains go to the
/// cheaper linear model. The decision and gain are stamped into the chosen
/// model's metadata.
pub fn select_model(report: &CvReport) -> Selection {
    let gain = selection_gain(report.linear.mean_rmse, report.svr.mean_rmse);
    let family = if gain > 0.15 { Family::Svr } else { Family::Linear };
    let model = match family {
        Family::Linear => {
            let mut m = report.final_linear.clone();
            m.metadata.selection_gain = Some(gain);
            m.metadata.cv = Some(report.summary());
            PowerModel::Linear(m)
        }
        Family::Svr => {
            let mut m = report.final_svr.clone();
            m.metadata.selection_gain = Some(gain);
            m.metadata.cv = Some(report.summary());
            PowerModel::Svr(m)
        }
    };
    Selection { family, gain, model }
}

/// (RMSE_linear - RMSE_svr) / RMSE_linear. A linear RMSE below the trace
/// format's millisecond resolution counts as zero: differences down there
/// are quantization residue, not accuracy, so the gain is 0 and the tie
/// goes to the linear model.
pub fn selection_gain(linear_rmse: f64, svr_rmse: f64) -> f64 {
    if linear_rmse > 1e-3 {
        (linear_rmse - svr_rmse) / linear_rmse
    } else {
        0.0
    }
}
