//! Regression datasets, train/test splitting, fold plans and feature scaling.

mod csv;
mod synthetic;

pub use self::csv::{load_csv, write_csv, TargetColumn};
pub use self::synthetic::{synthetic_friedman1, Friedman1, Generator, LinearGenerator};

use ndarray::{Array2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{self, Rng};

/// A feature matrix with an aligned target vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    target: Vec<f64>,
    feature_names: Vec<String>,
    target_name: String,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        target: Vec<f64>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let (n, p) = features.dim();
        if n == 0 {
            return Err(Error::EmptyDataset("no rows".into()));
        }
        if p == 0 {
            return Err(Error::EmptyDataset("no feature columns".into()));
        }
        if target.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: target.len() });
        }
        if feature_names.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: feature_names.len() });
        }
        let mut sorted: Vec<&String> = feature_names.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidDataset("duplicate feature names".into()));
        }
        if features.iter().chain(target.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset contains NaN or infinite values".into()));
        }
        Ok(Self { features, target, feature_names, target_name: target_name.into() })
    }

    /// Build a dataset with generated feature names `x0, x1, ...`.
    pub fn from_arrays(features: Array2<f64>, target: Vec<f64>) -> Result<Self> {
        let names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(features, target, names, "y")
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    /// Rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            target: indices.iter().map(|&i| self.target[i]).collect(),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        }
    }

    pub fn with_target(&self, target: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.features.clone(), target, self.feature_names.clone(), self.target_name.clone())
    }
}

/// Fisher–Yates shuffle of `0..n` driven by the crate PRNG.
pub fn permutation(n: usize, rng: &mut Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

/// Split rows into a training part and a test part of `round(test_fraction * n)` rows.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = ds.n_rows();
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test < 1 || n - n_test.min(n) < 2 {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} on {n} rows leaves {n_test} test rows and {} training rows",
            n.saturating_sub(n_test)
        )));
    }
    let mut rng = seeds::rng_from_seed(seed);
    let perm = permutation(n, &mut rng);
    let mut test_idx = perm[..n_test].to_vec();
    let mut train_idx = perm[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok((ds.select_rows(&train_idx), ds.select_rows(&test_idx)))
}

/// Assignment of rows to cross-validation folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    n: usize,
    m: usize,
    assignment: Vec<usize>,
    seed: u64,
}

impl FoldPlan {
    /// Build a plan from an explicit assignment (every fold must be used).
    pub fn from_assignment(m: usize, assignment: Vec<usize>, seed: u64) -> Result<Self> {
        let n = assignment.len();
        if m < 2 || m > n {
            return Err(Error::InvalidArgument(format!("need 2 <= m <= n, got m={m}, n={n}")));
        }
        let mut seen = vec![false; m];
        for &a in &assignment {
            if a >= m {
                return Err(Error::InvalidArgument(format!("fold index {a} out of range")));
            }
            seen[a] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("every fold must contain at least one row".into()));
        }
        Ok(Self { n, m, assignment, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn folds(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.m];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }

    /// (training rows, held-out rows) for fold `i`.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::with_capacity(self.n);
        let mut held = Vec::new();
        for (r, &a) in self.assignment.iter().enumerate() {
            if a == fold {
                held.push(r);
            } else {
                train.push(r);
            }
        }
        (train, held)
    }

    /// Stable 64-bit fingerprint of the assignment.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::with_capacity(8 * (self.n + 1));
        bytes.extend_from_slice(&(self.m as u64).to_le_bytes());
        for &a in &self.assignment {
            bytes.extend_from_slice(&(a as u64).to_le_bytes());
        }
        seeds::hash64(&bytes)
    }
}

/// Balanced random fold plan: shuffle rows and deal them round-robin.
pub fn make_fold_plan(n: usize, m: usize, seed: u64) -> Result<FoldPlan> {
    if m < 2 || m > n {
        return Err(Error::InvalidArgument(format!("need 2 <= m <= n, got m={m}, n={n}")));
    }
    let mut rng = seeds::rng_from_seed(seed);
    let perm = permutation(n, &mut rng);
    let mut assignment = vec![0; n];
    for (pos, &row) in perm.iter().enumerate() {
        assignment[row] = pos % m;
    }
    FoldPlan::from_assignment(m, assignment, seed)
}

/// Per-feature z-score parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn standardize_fit(ds: &Dataset) -> Scaler {
    let x = ds.features();
    let n = x.nrows() as f64;
    let mut mean = Vec::with_capacity(x.ncols());
    let mut std = Vec::with_capacity(x.ncols());
    for col in x.columns() {
        let mu = col.sum() / n;
        let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
        let sd = var.sqrt();
        mean.push(mu);
        // constant columns map to zero instead of NaN
        std.push(if sd > 0.0 { sd } else { 1.0 });
    }
    Scaler { mean, std }
}

impl Scaler {
    fn check(&self, p: usize) -> Result<()> {
        if self.mean.len() != p {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), got: p });
        }
        Ok(())
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(x.ncols())?;
        let mut out = x.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - self.mean[j]) / self.std[j]);
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(x.ncols())?;
        let mut out = x.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| v * self.std[j] + self.mean[j]);
        }
        Ok(out)
    }
}

pub fn standardize_apply(scaler: &Scaler, ds: &Dataset) -> Result<Dataset> {
    let features = scaler.transform(ds.features())?;
    Dataset::new(features, ds.target.clone(), ds.feature_names.clone(), ds.target_name.clone())
}
