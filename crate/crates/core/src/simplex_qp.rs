//! Minimum-MSE blending weights over the probability simplex.
//!
//! With `G = YhatᵀYhat / n`, `b = Yhatᵀy / n` and `c = yᵀy / n` the blend
//! error is the convex quadratic `wᵀGw - 2bᵀw + c`. The solver is a primal
//! active-set method on that quadratic, which terminates at an exact KKT
//! point; a projected-gradient solver is kept as an independent route and
//! fallback. Reported objectives are always recomputed from the columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oob::OobMatrix;

/// Projected-gradient iteration cap.
pub const PGD_MAX_ITER: usize = 100_000;
/// Projected-gradient stopping threshold on the sup-norm step.
pub const PGD_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexWeights {
    pub weights: Vec<f64>,
    /// MSE of the blended prediction.
    pub objective: f64,
}

/// MSE of `Σ w_j column_j` against the target.
pub fn ensemble_mse(w: &[f64], m: &OobMatrix) -> Result<f64> {
    if w.len() != m.k() {
        return Err(Error::DimensionMismatch { expected: m.k(), got: w.len() });
    }
    Ok(blend_mse(w, &m.column_slices(), m.y()))
}

pub(crate) fn blend_mse(w: &[f64], cols: &[&[f64]], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, t) in y.iter().enumerate() {
        let p: f64 = w.iter().zip(cols).map(|(wj, c)| wj * c[i]).sum();
        total += (t - p) * (t - p);
    }
    total / y.len() as f64
}

/// Euclidean projection onto `{w : w >= 0, Σ w = 1}` by sorting.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Second-moment summary of a set of prediction columns.
#[derive(Clone, Debug)]
pub struct Gram {
    k: usize,
    g: Vec<f64>,
    b: Vec<f64>,
}

impl Gram {
    pub fn from_columns(cols: &[&[f64]], y: &[f64]) -> Self {
        let k = cols.len();
        let n = y.len() as f64;
        let mut g = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let v = cols[i].iter().zip(cols[j]).map(|(a, b)| a * b).sum::<f64>() / n;
                g[i * k + j] = v;
                g[j * k + i] = v;
            }
        }
        let b = cols.iter().map(|c| c.iter().zip(y).map(|(a, t)| a * t).sum::<f64>() / n).collect();
        Self { k, g, b }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.k + j]
    }

    /// The Gram form restricted to `indices`.
    pub fn select(&self, indices: &[usize]) -> Gram {
        let k = indices.len();
        let mut g = Vec::with_capacity(k * k);
        for &i in indices {
            for &j in indices {
                g.push(self.at(i, j));
            }
        }
        Gram { k, g, b: indices.iter().map(|&i| self.b[i]).collect() }
    }

    /// Half gradient `Gw - b`.
    fn half_gradient(&self, w: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|i| (0..self.k).map(|j| self.at(i, j) * w[j]).sum::<f64>() - self.b[i])
            .collect()
    }

    fn scale(&self) -> f64 {
        let d = (0..self.k).fold(0.0f64, |m, i| m.max(self.at(i, i).abs()));
        let b = self.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        d.max(b).max(f64::MIN_POSITIVE)
    }
}

/// Solve a small dense system with partial pivoting.
fn lu_solve(mut a: Vec<f64>, mut rhs: Vec<f64>, n: usize, tiny: f64) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() <= tiny {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            rhs.swap(col, piv);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r * n + c] * x[c]).sum();
        x[r] = (rhs[r] - s) / a[r * n + r];
    }
    Some(x)
}

/// Minimizer of the quadratic on the affine hull of `support` (weights
/// summing to one, sign unconstrained).
fn equality_qp(gram: &Gram, support: &[usize]) -> Option<Vec<f64>> {
    let s = support.len();
    let dim = s + 1;
    let mut a = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r * dim + c] = gram.at(i, j);
        }
        a[r * dim + s] = 1.0;
        a[s * dim + r] = 1.0;
        rhs[r] = gram.b[i];
    }
    rhs[s] = 1.0;
    let sol = lu_solve(a, rhs, dim, 1e-15 * gram.scale())?;
    Some(sol[..s].to_vec())
}

/// Active-set solve; `None` if a working-set system turns out singular.
fn active_set(gram: &Gram) -> Option<Vec<f64>> {
    let k = gram.k;
    let tol = 1e-13 * gram.scale();
    let start = (0..k).min_by(|&i, &j| {
        (gram.at(i, i) - 2.0 * gram.b[i]).total_cmp(&(gram.at(j, j) - 2.0 * gram.b[j]))
    })?;
    let mut w = vec![0.0; k];
    w[start] = 1.0;
    let mut support = vec![start];

    for _ in 0..(50 * k + 100) {
        let u = equality_qp(gram, &support)?;
        if u.iter().all(|&v| v > 0.0) {
            for (&i, &v) in support.iter().zip(&u) {
                w[i] = v;
            }
            let d = gram.half_gradient(&w);
            let common = support.iter().map(|&i| d[i]).sum::<f64>() / support.len() as f64;
            let entering = (0..k)
                .filter(|i| !support.contains(i))
                .min_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
            match entering {
                Some(j) if d[j] < common - tol => {
                    support.push(j);
                    support.sort_unstable();
                }
                _ => return Some(w),
            }
        } else {
            // step toward u until the first weight hits zero
            let mut step = 1.0f64;
            for (&i, &v) in support.iter().zip(&u) {
                if v <= 0.0 {
                    step = step.min(w[i] / (w[i] - v));
                }
            }
            for (&i, &v) in support.iter().zip(&u) {
                w[i] += step * (v - w[i]);
            }
            let before = support.len();
            support.retain(|&i| w[i] > 1e-15);
            if support.len() == before {
                // numerical stall: drop the smallest weight
                let (pos, _) = support.iter().enumerate().min_by(|a, b| w[*a.1].total_cmp(&w[*b.1]))?;
                support.remove(pos);
            }
            for (i, wi) in w.iter_mut().enumerate() {
                if !support.contains(&i) {
                    *wi = 0.0;
                }
            }
            if support.is_empty() {
                return None;
            }
        }
    }
    None
}

/// Projected gradient descent with step `1 / L`, `L = 2 trace(G)`.
pub fn solve_projected_gradient(gram: &Gram, max_iter: usize) -> Vec<f64> {
    let k = gram.k;
    let trace: f64 = (0..k).map(|i| gram.at(i, i)).sum();
    let lipschitz = 2.0 * trace.max(f64::MIN_POSITIVE);
    let mut w = vec![1.0 / k as f64; k];
    for _ in 0..max_iter {
        let d = gram.half_gradient(&w);
        let step: Vec<f64> = w.iter().zip(&d).map(|(wi, di)| wi - 2.0 * di / lipschitz).collect();
        let next = project_to_simplex(&step);
        let delta = next.iter().zip(&w).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        w = next;
        if delta < PGD_TOL {
            break;
        }
    }
    w
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    w.iter_mut().for_each(|v| *v = v.max(0.0));
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Optimal simplex weights for a Gram form (no objective evaluation).
pub fn solve_gram(gram: &Gram) -> Vec<f64> {
    if gram.k == 1 {
        return vec![1.0];
    }
    match active_set(gram) {
        Some(w) if w.iter().all(|v| v.is_finite()) => normalize(w),
        _ => {
            log::debug!("active-set solve hit a singular working set; using projected gradient");
            normalize(solve_projected_gradient(gram, PGD_MAX_ITER))
        }
    }
}

/// Solve the blending problem for raw columns.
pub fn solve_columns(cols: &[&[f64]], y: &[f64]) -> Result<SimplexWeights> {
    if cols.is_empty() || y.is_empty() {
        return Err(Error::InvalidArgument("need at least one column and one row".into()));
    }
    if cols.iter().flat_map(|c| c.iter()).chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("prediction matrix contains NaN or infinite values".into()));
    }
    let gram = Gram::from_columns(cols, y);
    let weights = solve_gram(&gram);
    let objective = blend_mse(&weights, cols, y);
    Ok(SimplexWeights { weights, objective })
}

/// Minimum-MSE simplex weights for the columns of `m`.
pub fn solve_gem_weights(m: &OobMatrix) -> Result<SimplexWeights> {
    solve_columns(&m.column_slices(), m.y())
}

/// First-order optimality residuals of `w` for the blending objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktReport {
    /// Largest gradient difference among coordinates with positive weight.
    pub active_spread: f64,
    /// How far the smallest inactive gradient sits below the active level
    /// (zero when none does).
    pub inactive_violation: f64,
}

impl KktReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.active_spread <= tol && self.inactive_violation <= tol
    }
}

/// Gradient `∂/∂w_j MSE = -(2/n) Σ_i (y_i - ŷ_i(w)) ŷ_ij`, evaluated from columns.
pub fn mse_gradient(w: &[f64], cols: &[&[f64]], y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let resid: Vec<f64> = (0..y.len())
        .map(|i| y[i] - w.iter().zip(cols).map(|(wj, c)| wj * c[i]).sum::<f64>())
        .collect();
    cols.iter().map(|c| -2.0 * c.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / n).collect()
}

pub fn kkt_report(w: &[f64], m: &OobMatrix) -> KktReport {
    let grad = mse_gradient(w, &m.column_slices(), m.y());
    let active: Vec<f64> = grad.iter().zip(w).filter(|(_, &wj)| wj > 0.0).map(|(g, _)| *g).collect();
    let hi = active.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = active.iter().cloned().fold(f64::INFINITY, f64::min);
    let active_spread = if active.is_empty() { f64::INFINITY } else { hi - lo };
    let level = if active.is_empty() { 0.0 } else { active.iter().sum::<f64>() / active.len() as f64 };
    let inactive_violation = grad
        .iter()
        .zip(w)
        .filter(|(_, &wj)| wj <= 0.0)
        .map(|(g, _)| (level - g).max(0.0))
        .fold(0.0, f64::max);
    KktReport { active_spread, inactive_violation }
}
