//! Epsilon-insensitive support vector regression solved by sequential
//! minimal optimization on the dual.
//!
//! The dual variable for sample i is `beta_i = alpha_i - alpha*_i` in
//! `[-C, C]` with `sum beta_i = 0`; the fitted function is
//! `f(x) = sum_i beta_i K(x_i, x) + b`. Each iteration picks the maximal
//! KKT-violating pair and minimizes the (piecewise-quadratic, convex)
//! restricted objective exactly. Convergence is declared when the largest
//! KKT violation drops below 1e-3; otherwise the pass budget runs out and
//! the model is returned flagged non-converged.
//!
//! Features are z-scored internally; constant features are dropped (with a
//! warning) since they carry no kernel information. Targets stay in raw
//! seconds, so `epsilon` is a tube width in seconds.

use serde::{Deserialize, Serialize};

use crate::segment::IntervalSample;
use crate::trace::OperatorType;

use super::{ModelMeta, RegressError};

pub const DEFAULT_MAX_PASSES: usize = 10_000;
const KKT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// Per-feature z-score parameters, plus which schema features survived
/// (constant features are dropped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub kept: Vec<bool>,
}

impl Standardization {
    /// Maps a raw feature vector into the standardized space the kernel and
    /// support vectors live in.
    pub fn apply_to(&self, raw: &[f64]) -> Vec<f64> {
        self.apply(raw)
    }

    fn apply(&self, raw: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.std.len());
        let mut slot = 0;
        for (j, &keep) in self.kept.iter().enumerate() {
            if keep {
                out.push((raw[j] - self.mean[slot]) / self.std[slot]);
                slot += 1;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrSettings {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: KernelSpec,
    pub max_passes: usize,
}

impl SvrSettings {
    pub fn new(c: f64, epsilon: f64, kernel: KernelSpec) -> Self {
        Self {
            c,
            epsilon,
            kernel,
            max_passes: DEFAULT_MAX_PASSES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub epsilon: f64,
    /// Standardized feature rows with nonzero dual coefficient.
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub standardization: Standardization,
    pub schema: Vec<OperatorType>,
    pub converged: bool,
    /// SMO pair updates consumed.
    pub passes: usize,
    pub metadata: ModelMeta,
}

impl SvrModel {
    pub fn predict(&self, features: &[f64]) -> f64 {
        debug_assert_eq!(features.len(), self.schema.len());
        let z = self.standardization.apply(features);
        let mut f = self.bias;
        for (sv, &coef) in self.support_vectors.iter().zip(&self.dual_coefs) {
            f += coef * self.kernel.eval(sv, &z);
        }
        f
    }
}

pub fn fit_svr(
    samples: &[IntervalSample],
    schema: &[OperatorType],
    settings: SvrSettings,
    mut metadata: ModelMeta,
) -> Result<SvrModel, RegressError> {
    let n = samples.len();
    let p = schema.len();
    if n < 4 {
        return Err(RegressError::InsufficientSamples { n, p });
    }
    if let KernelSpec::Rbf { gamma } = settings.kernel {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(RegressError::DegenerateKernel(gamma));
        }
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

    // z-score; drop constant features.
    let mut kept = vec![false; p];
    let mut mean = Vec::new();
    let mut std = Vec::new();
    for j in 0..p {
        let m: f64 = samples.iter().map(|s| s.features[j]).sum::<f64>() / n as f64;
        let var: f64 = samples
            .iter()
            .map(|s| (s.features[j] - m) * (s.features[j] - m))
            .sum::<f64>()
            / n as f64;
        let sd = var.sqrt();
        if sd > 1e-12 {
            kept[j] = true;
            mean.push(m);
            std.push(sd);
        } else {
            metadata
                .warnings
                .push(format!("feature {} is constant; dropped for SVR", schema[j]));
        }
    }
    let standardization = Standardization { mean, std, kept };
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| standardization.apply(&s.features))
        .collect();
    let y: Vec<f64> = samples.iter().map(|s| s.target_s).collect();

    let gram: Vec<f64> = {
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = settings.kernel.eval(&rows[i], &rows[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    };

    let solved = smo(&gram, &y, settings.c, settings.epsilon, settings.max_passes);
    if !solved.converged {
        metadata.warnings.push(format!(
            "SMO pass budget ({}) exhausted; model returned non-converged",
            settings.max_passes
        ));
    }

    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for (i, &b) in solved.beta.iter().enumerate() {
        if b != 0.0 {
            support_vectors.push(rows[i].clone());
            dual_coefs.push(b);
        }
    }

    metadata.n = n;
    Ok(SvrModel {
        kernel: settings.kernel,
        c: settings.c,
        epsilon: settings.epsilon,
        support_vectors,
        dual_coefs,
        bias: solved.bias,
        standardization,
        schema: schema.to_vec(),
        converged: solved.converged,
        passes: solved.passes,
        metadata,
    })
}

struct SmoResult {
    beta: Vec<f64>,
    bias: f64,
    converged: bool,
    passes: usize,
}

/// KKT bounds on the bias for one sample: feasible b lies in [lo, up].
/// g = y_i - (K beta)_i.
fn bias_bounds(beta: f64, g: f64, c: f64, eps: f64) -> (f64, f64) {
    if beta == 0.0 {
        (g - eps, g + eps)
    } else if beta >= c {
        (f64::NEG_INFINITY, g - eps)
    } else if beta > 0.0 {
        (g - eps, g - eps)
    } else if beta <= -c {
        (g + eps, f64::INFINITY)
    } else {
        (g + eps, g + eps)
    }
}

fn smo(gram: &[f64], y: &[f64], c: f64, eps: f64, max_passes: usize) -> SmoResult {
    let n = y.len();
    let mut beta = vec![0.0f64; n];
    let mut f_tilde = vec![0.0f64; n]; // (K beta)_i
    let mut passes = 0;
    let mut converged = false;
    let mut stalls = 0u32;

    let finish_bias = |max_lo: f64, min_up: f64| match (max_lo.is_finite(), min_up.is_finite()) {
        (true, true) => 0.5 * (max_lo + min_up),
        (true, false) => max_lo,
        (false, true) => min_up,
        (false, false) => 0.0,
    };

    loop {
        // Maximal violating pair: the largest lower bound on b against the
        // smallest upper bound.
        let mut max_lo = f64::NEG_INFINITY;
        let mut min_up = f64::INFINITY;
        let mut i_lo = 0usize;
        let mut j_up = 0usize;
        for k in 0..n {
            let g = y[k] - f_tilde[k];
            let (lo, up) = bias_bounds(beta[k], g, c, eps);
            if lo > max_lo {
                max_lo = lo;
                i_lo = k;
            }
            if up < min_up {
                min_up = up;
                j_up = k;
            }
        }

        if max_lo - min_up < KKT_TOL {
            converged = true;
            return SmoResult {
                beta,
                bias: finish_bias(max_lo, min_up),
                converged,
                passes,
            };
        }
        if passes >= max_passes || i_lo == j_up || stalls >= 2 {
            return SmoResult {
                beta,
                bias: finish_bias(max_lo, min_up),
                converged,
                passes,
            };
        }
        passes += 1;

        let (i, j) = (i_lo, j_up);
        let s = beta[i] + beta[j];
        let kii = gram[i * n + i];
        let kjj = gram[j * n + j];
        let kij = gram[i * n + j];
        let eta = kii + kjj - 2.0 * kij;
        // Gradient contributions from all other samples.
        let ci = f_tilde[i] - kii * beta[i] - kij * beta[j] - y[i];
        let cj = f_tilde[j] - kjj * beta[j] - kij * beta[i] - y[j];

        let lo_box = (-c).max(s - c);
        let hi_box = c.min(s + c);

        // Restricted objective in t = beta_i (beta_j = s - t):
        //   g(t) = 0.5 kii t^2 + 0.5 kjj (s-t)^2 + kij t (s-t)
        //        + ci t + cj (s-t) + eps (|t| + |s-t|)
        let objective = |t: f64| {
            let u = s - t;
            0.5 * kii * t * t + 0.5 * kjj * u * u + kij * t * u + ci * t + cj * u
                + eps * (t.abs() + u.abs())
        };

        let mut candidates = [lo_box, hi_box, 0.0, s, 0.0, 0.0, 0.0, 0.0];
        let mut m = 4;
        if eta > 0.0 {
            // Unconstrained vertex per sign region of (|t|, |s-t|).
            for (sig_t, sig_u) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let t = ((kjj - kij) * s - ci + cj - eps * (sig_t - sig_u)) / eta;
                candidates[m] = t;
                m += 1;
            }
        }

        let mut best_t = beta[i];
        let mut best_val = f64::INFINITY;
        for &cand in &candidates[..m] {
            let t = cand.clamp(lo_box, hi_box);
            let v = objective(t);
            if v < best_val - 1e-15 {
                best_val = v;
                best_t = t;
            }
        }

        let delta = best_t - beta[i];
        if delta.abs() < 1e-14 {
            stalls += 1;
            continue;
        }
        stalls = 0;
        beta[i] = best_t;
        beta[j] = s - best_t;
        for k in 0..n {
            f_tilde[k] += delta * (gram[i * n + k] - gram[j * n + k]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::{fit_linear, ModelMeta};

    fn ty(s: &str) -> OperatorType {
        OperatorType::new(s).unwrap()
    }

    fn linear_data(n: usize) -> (Vec<OperatorType>, Vec<IntervalSample>) {
        let schema = vec![ty("A"), ty("B")];
        let samples = (0..n)
            .map(|i| {
                let a = (i % 9) as f64 * 5.0;
                let b = ((i * 3) % 7) as f64 * 4.0;
                IntervalSample {
                    features: vec![a, b],
                    target_s: 140.0 - 2.0 * a - 0.7 * b,
                    interval_ref: i,
                }
            })
            .collect();
        (schema, samples)
    }

    /// KKT certificates for a fitted model against its training data.
    fn assert_kkt(model: &SvrModel, samples: &[IntervalSample], tube_margin: f64) {
        let sum: f64 = model.dual_coefs.iter().sum();
        assert!(sum.abs() < 1e-6, "sum of duals = {sum}");
        for &d in &model.dual_coefs {
            assert!(d.abs() <= model.c + 1e-9, "dual {d} outside [-C, C]");
        }
        // Points strictly inside the tube must carry zero dual coefficient.
        // Match support vectors by standardized row equality.
        for s in samples {
            let pred = model.predict(&s.features);
            if (pred - s.target_s).abs() < model.epsilon - tube_margin {
                let z = model.standardization.apply(&s.features);
                for (sv, &d) in model.support_vectors.iter().zip(&model.dual_coefs) {
                    if sv == &z {
                        assert!(
                            d.abs() < 1e-9,
                            "in-tube point has dual {d} (|err|={})",
                            (pred - s.target_s).abs()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn linear_kernel_matches_ols_within_tube() {
        let (schema, samples) = linear_data(60);
        let svr = fit_svr(
            &samples,
            &schema,
            SvrSettings::new(100.0, 1.0, KernelSpec::Linear),
            ModelMeta::default(),
        )
        .unwrap();
        assert!(svr.converged);
        let ols = fit_linear(&samples, &schema, ModelMeta::default()).unwrap();
        for s in &samples {
            let d = (svr.predict(&s.features) - ols.predict(&s.features)).abs();
            assert!(d <= svr.epsilon + 1e-3, "diff {d} exceeds tube");
        }
        assert_kkt(&svr, &samples, 2.0 * KKT_TOL);
    }

    #[test]
    fn rbf_fits_nonlinear_curve() {
        let schema = vec![ty("A")];
        let samples: Vec<IntervalSample> = (0..80)
            .map(|i| {
                let x = i as f64 / 4.0;
                IntervalSample {
                    features: vec![x],
                    target_s: 120.0 - 3.0 * x + 0.12 * x * x,
                    interval_ref: i,
                }
            })
            .collect();
        let svr = fit_svr(
            &samples,
            &schema,
            SvrSettings::new(100.0, 0.5, KernelSpec::Rbf { gamma: 1.0 }),
            ModelMeta::default(),
        )
        .unwrap();
        assert!(svr.converged, "passes={}", svr.passes);
        let errs: f64 = samples
            .iter()
            .map(|s| (svr.predict(&s.features) - s.target_s).abs())
            .fold(0.0, f64::max);
        assert!(errs <= svr.epsilon + 0.05, "max train err {errs}");
        assert_kkt(&svr, &samples, 2.0 * KKT_TOL);
    }

    #[test]
    fn constant_feature_dropped_with_warning() {
        let schema = vec![ty("A"), ty("Const")];
        let samples: Vec<IntervalSample> = (0..20)
            .map(|i| IntervalSample {
                features: vec![i as f64, 7.0],
                target_s: 50.0 + i as f64,
                interval_ref: i,
            })
            .collect();
        let svr = fit_svr(
            &samples,
            &schema,
            SvrSettings::new(10.0, 0.5, KernelSpec::Linear),
            ModelMeta::default(),
        )
        .unwrap();
        assert_eq!(svr.standardization.kept, vec![true, false]);
        assert!(svr.metadata.warnings.iter().any(|w| w.contains("Const")));
    }

    #[test]
    fn degenerate_gamma_rejected() {
        let (schema, samples) = linear_data(10);
        let err = fit_svr(
            &samples,
            &schema,
            SvrSettings::new(1.0, 0.5, KernelSpec::Rbf { gamma: 0.0 }),
            ModelMeta::default(),
        )
        .unwrap_err();
        assert!(matches!(err, RegressError::DegenerateKernel(_)));
    }

    #[test]
    fn tiny_pass_budget_flags_non_converged() {
        let (schema, samples) = linear_data(40);
        let mut settings = SvrSettings::new(100.0, 0.1, KernelSpec::Linear);
        settings.max_passes = 2;
        let svr = fit_svr(&samples, &schema, settings, ModelMeta::default()).unwrap();
        assert!(!svr.converged);
        assert!(svr.metadata.warnings.iter().any(|w| w.contains("non-converged")));
    }

    #[test]
    fn too_few_samples_rejected() {
        let (schema, samples) = linear_data(3);
        assert!(matches!(
            fit_svr(
                &samples,
                &schema,
                SvrSettings::new(1.0, 0.5, KernelSpec::Linear),
                ModelMeta::default()
            ),
            Err(RegressError::InsufficientSamples { .. })
        ));
    }
}
