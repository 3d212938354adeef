//! Monte Carlo bias-variance decomposition on synthetic data.
//!
//! Fresh training sets are drawn from a generator, a fitting procedure is run
//! on each, and its predictions on one fixed test grid are compared with the
//! generator's noiseless response.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Generator};
use crate::error::{Error, Result};
use crate::learners::{fit_config, HyperConfig};
use crate::seeds;

/// Anything that can be trained on a dataset and predict new rows.
pub trait FitProcedure: Sync {
    fn fit_predict(&self, train: &Dataset, x_test: ArrayView2<f64>, seed: u64) -> Result<Vec<f64>>;
}

impl<F> FitProcedure for F
where
    F: Fn(&Dataset, ArrayView2<f64>, u64) -> Result<Vec<f64>> + Sync,
{
    fn fit_predict(&self, train: &Dataset, x_test: ArrayView2<f64>, seed: u64) -> Result<Vec<f64>> {
        self(train, x_test, seed)
    }
}

/// A single learner with a fixed configuration.
#[derive(Clone, Debug)]
pub struct LearnerProcedure(pub HyperConfig);

impl FitProcedure for LearnerProcedure {
    fn fit_predict(&self, train: &Dataset, x_test: ArrayView2<f64>, seed: u64) -> Result<Vec<f64>> {
        fit_config(&self.0, train.features().view(), train.target(), seed)?.predict(x_test)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BVReport {
    pub bias_sq: f64,
    pub variance: f64,
    pub noise_var: f64,
    pub total_mse: f64,
    /// `|total_mse - (bias_sq + variance + noise_var)|`.
    pub decomposition_gap: f64,
    pub reps: usize,
    pub n_train: usize,
    pub n_test: usize,
}

impl BVReport {
    /// Gap as a fraction of the total error.
    pub fn relative_gap(&self) -> f64 {
        self.decomposition_gap / self.total_mse.max(1e-12)
    }
}

/// Neumaier summation.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn mean(values: impl IntoIterator<Item = f64>, n: usize) -> f64 {
    compensated_sum(values) / n as f64
}

pub fn bias_variance_estimate<P, G>(proc: &P, gen: &G, n_train: usize, n_test: usize, reps: usize, seed: u64) -> Result<BVReport>
where
    P: FitProcedure + ?Sized,
    G: Generator + ?Sized,
{
    if reps < 2 {
        return Err(Error::InvalidArgument(format!("reps must be at least 2, got {reps}")));
    }
    if n_train == 0 || n_test == 0 {
        return Err(Error::InvalidArgument("n_train and n_test must be positive".into()));
    }
    let grid = gen.generate(n_test, seeds::derive(seed, "grid"))?;
    let x_test: &Array2<f64> = grid.features();
    let truth: Vec<f64> = x_test.rows().into_iter().map(|r| gen.truth(&r.to_vec())).collect();

    // Per repetition: predictions on the grid and squared error against a
    // fresh draw of noisy grid targets.
    let runs: Vec<(Vec<f64>, f64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let train = gen.generate(n_train, seeds::derive_indexed(seed, "train", r as u64))?;
            let pred = proc.fit_predict(&train, x_test.view(), seeds::derive_indexed(seed, "fit", r as u64))?;
            if pred.len() != n_test {
                return Err(Error::DimensionMismatch { expected: n_test, got: pred.len() });
            }
            let noisy = gen.targets(x_test, seeds::derive_indexed(seed, "test-noise", r as u64))?;
            let err = mean(pred.iter().zip(&noisy).map(|(p, y)| (p - y) * (p - y)), n_test);
            Ok((pred, err))
        })
        .collect::<Result<_>>()?;

    let mut bias_terms = Vec::with_capacity(n_test);
    let mut var_terms = Vec::with_capacity(n_test);
    for (i, f) in truth.iter().enumerate() {
        let avg = mean(runs.iter().map(|(p, _)| p[i]), reps);
        bias_terms.push((avg - f) * (avg - f));
        var_terms.push(mean(runs.iter().map(|(p, _)| (p[i] - avg) * (p[i] - avg)), reps));
    }
    let bias_sq = mean(bias_terms, n_test);
    let variance = mean(var_terms, n_test);
    let noise_var = gen.noise_sd() * gen.noise_sd();
    let total_mse = mean(runs.iter().map(|(_, e)| *e), reps);
    Ok(BVReport {
        bias_sq,
        variance,
        noise_var,
        total_mse,
        decomposition_gap: (total_mse - (bias_sq + variance + noise_var)).abs(),
        reps,
        n_train,
        n_test,
    })
}
