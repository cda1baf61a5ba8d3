//! Least-squares core: Householder QR with a ridge-stabilized fallback for
//! rank-deficient designs, plus the hat-matrix diagonal needed for Cook's
//! distance. Designs here are tall and narrow (hundreds of rows, a handful
//! of columns), so dense QR is the right tool.

/// Result of a least-squares solve on an n x p design.
#[derive(Debug, Clone)]
pub struct Lstsq {
    pub beta: Vec<f64>,
    /// Diagonal of the hat matrix H = X (X'X [+ lambda I])^-1 X'.
    pub hat_diag: Vec<f64>,
    pub residuals: Vec<f64>,
    /// True when the design was rank-deficient and the ridge fallback
    /// (lambda = 1e-8 x mean Gram diagonal) was applied.
    pub ridge_applied: bool,
}

/// Solves min ||X beta - y||^2 by Householder QR. On a rank-deficient design
/// the solve is repeated on the ridge-augmented system [X; sqrt(lambda) I].
pub fn solve(x: &[Vec<f64>], y: &[f64]) -> Lstsq {
    let n = x.len();
    let p = if n == 0 { 0 } else { x[0].len() };
    assert!(n >= p && p > 0, "design must be tall: n={n}, p={p}");
    assert_eq!(y.len(), n);

    match qr_solve(x, y, None) {
        Some(result) => result,
        None => {
            let mean_gram_diag = (0..p)
                .map(|j| x.iter().map(|row| row[j] * row[j]).sum::<f64>())
                .sum::<f64>()
                / p as f64;
            let lambda = (1e-8 * mean_gram_diag).max(f64::MIN_POSITIVE);
            qr_solve(x, y, Some(lambda)).expect("ridge-augmented design has full rank")
        }
    }
}

/// One QR pass. `ridge` appends sqrt(lambda) identity rows. Returns `None`
/// when the (unridged) R has a numerically zero diagonal entry.
fn qr_solve(x: &[Vec<f64>], y: &[f64], ridge: Option<f64>) -> Option<Lstsq> {
    let n = x.len();
    let p = x[0].len();
    let extra = if ridge.is_some() { p } else { 0 };
    let rows = n + extra;

    // Column-major working copy of the (possibly augmented) design.
    let mut a = vec![0.0; rows * p];
    for (i, row) in x.iter().enumerate() {
        for j in 0..p {
            a[j * rows + i] = row[j];
        }
    }
    if let Some(lambda) = ridge {
        let s = lambda.sqrt();
        for j in 0..p {
            a[j * rows + n + j] = s;
        }
    }
    let mut qty = vec![0.0; rows];
    qty[..n].copy_from_slice(y);

    for k in 0..p {
        let col = k * rows;
        let norm: f64 = a[col + k..col + rows].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            ridge?;
            continue;
        }
        let alpha = if a[col + k] >= 0.0 { -norm } else { norm };
        // Householder vector overwrites the column below the diagonal.
        a[col + k] -= alpha;
        let vnorm2: f64 = a[col + k..col + rows].iter().map(|v| v * v).sum();
        if vnorm2 > 0.0 {
            for j in k..p {
                let cj = j * rows;
                let dot: f64 = (k..rows).map(|i| a[col + i] * a[cj + i]).sum();
                let scale = 2.0 * dot / vnorm2;
                for i in k..rows {
                    a[cj + i] -= scale * a[col + i];
                }
            }
            let dot: f64 = (k..rows).map(|i| a[col + i] * qty[i]).sum();
            let scale = 2.0 * dot / vnorm2;
            for i in k..rows {
                qty[i] -= scale * a[col + i];
            }
        }
        a[col + k] = alpha;
    }

    // Rank check on the R diagonal.
    let max_diag = (0..p).map(|k| a[k * rows + k].abs()).fold(0.0, f64::max);
    let tol = 1e-10 * max_diag.max(1.0);
    if ridge.is_none() && (0..p).any(|k| a[k * rows + k].abs() < tol) {
        return None;
    }

    // Back substitution: R beta = (Q'y)[..p].
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let mut v = qty[k];
        for j in k + 1..p {
            v -= a[j * rows + k] * beta[j];
        }
        beta[k] = v / a[k * rows + k];
    }

    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| yi - dot(row, &beta))
        .collect();

    // h_ii = || R^-T x_i ||^2, via forward substitution per row.
    let mut hat_diag = Vec::with_capacity(n);
    let mut z = vec![0.0; p];
    for row in x {
        for k in 0..p {
            let mut v = row[k];
            for j in 0..k {
                v -= a[k * rows + j] * z[j];
            }
            z[k] = v / a[k * rows + k];
        }
        hat_diag.push(z.iter().map(|v| v * v).sum());
    }

    Some(Lstsq {
        beta,
        hat_diag,
        residuals,
        ridge_applied: ridge.is_some(),
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
