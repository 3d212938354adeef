//! Ridge (closed form) and elastic net (cyclic coordinate descent).
//! Both center the data so the intercept is never penalized.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

const EN_TOL: f64 = 1e-8;
const EN_MAX_SWEEPS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| self.intercept + row.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }
}

fn center(x: ArrayView2<f64>, y: &[f64]) -> (Array2<f64>, Array1<f64>, Vec<f64>, f64) {
    let x_mean = x.mean_axis(Axis(0)).expect("non-empty");
    let y_mean = super::mean(y);
    let xc = &x - &x_mean;
    let yc = y.iter().map(|v| v - y_mean).collect();
    (xc, x_mean, yc, y_mean)
}

/// Solve `a x = b` for symmetric positive definite `a`. Returns `None` when a
/// pivot is not positive relative to the largest diagonal entry.
pub fn cholesky_solve(a: &Array2<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let p = a.nrows();
    let scale = a.diag().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut l = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 1e-13 * scale {
                    return None;
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    let mut z = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| l[[i, k]] * z[k]).sum();
        z[i] = (b[i] - s) / l[[i, i]];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| l[[k, i]] * x[k]).sum();
        x[i] = (z[i] - s) / l[[i, i]];
    }
    Some(x)
}

/// Minimize `||y - b0 - X b||^2 + alpha ||b||^2` (sum of squares, not mean).
pub fn fit_ridge(x: ArrayView2<f64>, y: &[f64], alpha: f64) -> Result<LinearModel> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidConfig(format!("ridge alpha {alpha} must be >= 0")));
    }
    let (xc, x_mean, yc, y_mean) = center(x, y);
    let mut gram = xc.t().dot(&xc);
    for i in 0..gram.nrows() {
        gram[[i, i]] += alpha;
    }
    let rhs = xc.t().dot(&Array1::from(yc)).to_vec();
    let coef = cholesky_solve(&gram, &rhs)
        .ok_or_else(|| Error::Singular(format!("ridge with alpha={alpha} (rank-deficient design)")))?;
    let intercept = y_mean - coef.iter().zip(x_mean.iter()).map(|(c, m)| c * m).sum::<f64>();
    Ok(LinearModel { coef, intercept })
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Minimize `(1/2n)||y - b0 - X b||^2 + alpha (l1 ||b||_1 + (1 - l1)/2 ||b||^2)`.
pub fn fit_elastic_net(x: ArrayView2<f64>, y: &[f64], alpha: f64, l1_ratio: f64) -> Result<LinearModel> {
    if alpha.is_nan() || alpha < 0.0 || !(0.0..=1.0).contains(&l1_ratio) {
        return Err(Error::InvalidConfig(format!("elastic net alpha={alpha}, l1_ratio={l1_ratio}")));
    }
    let (xc, x_mean, mut resid, y_mean) = center(x, y);
    let (n, p) = xc.dim();
    let nf = n as f64;
    let cols: Vec<Vec<f64>> = xc.columns().into_iter().map(|c| c.to_vec()).collect();
    let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();
    let l1 = alpha * l1_ratio;
    let l2 = alpha * (1.0 - l1_ratio);
    let mut coef = vec![0.0; p];

    for _ in 0..EN_MAX_SWEEPS {
        let mut max_delta = 0.0f64;
        for j in 0..p {
            if sq[j] == 0.0 {
                continue;
            }
            let col = &cols[j];
            let old = coef[j];
            let rho = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / nf + sq[j] * old;
            let new = soft_threshold(rho, l1) / (sq[j] + l2);
            let delta = new - old;
            if delta != 0.0 {
                for (r, a) in resid.iter_mut().zip(col) {
                    *r -= a * delta;
                }
                coef[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < EN_TOL {
            break;
        }
    }
    let intercept = y_mean - coef.iter().zip(x_mean.iter()).map(|(c, m)| c * m).sum::<f64>();
    Ok(LinearModel { coef, intercept })
}
