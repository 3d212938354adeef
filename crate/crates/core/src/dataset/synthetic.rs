//! Synthetic regression problems with a known noiseless response.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::seeds;

/// A data generating process `y = f(x) + N(0, noise_sd^2)` with `x ~ U(0,1)^p`.
pub trait Generator: Sync {
    fn n_features(&self) -> usize;

    /// The noiseless response.
    fn truth(&self, x: &[f64]) -> f64;

    fn noise_sd(&self) -> f64;

    /// Draw `n` rows. Features and noise come from separate streams so that
    /// changing the noise level leaves the features untouched.
    fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let p = self.n_features();
        let mut feature_rng = seeds::rng_from_seed(seeds::derive(seed, "features"));
        let x = Array2::from_shape_simple_fn((n, p), || feature_rng.random::<f64>());
        let y = self.targets(&x, seeds::derive(seed, "noise"))?;
        Dataset::from_arrays(x, y)
    }

    /// Noisy targets for fixed features.
    fn targets(&self, x: &Array2<f64>, noise_seed: u64) -> Result<Vec<f64>> {
        let sd = self.noise_sd();
        if !(sd >= 0.0 && sd.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise sd {sd} must be finite and >= 0")));
        }
        let mut noise_rng = seeds::rng_from_seed(noise_seed);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        Ok(x.rows()
            .into_iter()
            .map(|row| {
                let row = row.to_vec();
                let eps = normal.sample(&mut noise_rng);
                self.truth(&row) + sd * eps
            })
            .collect())
    }
}

/// Friedman's first benchmark: ten uniform features, the last five unused.
#[derive(Clone, Copy, Debug)]
pub struct Friedman1 {
    pub noise_sd: f64,
}

impl Generator for Friedman1 {
    fn n_features(&self) -> usize {
        10
    }

    fn truth(&self, x: &[f64]) -> f64 {
        10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
    }

    fn noise_sd(&self) -> f64 {
        self.noise_sd
    }
}

/// `y = intercept + coef . x + noise`.
#[derive(Clone, Debug)]
pub struct LinearGenerator {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub noise_sd: f64,
}

impl Generator for LinearGenerator {
    fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    fn truth(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    fn noise_sd(&self) -> f64 {
        self.noise_sd
    }
}

pub fn synthetic_friedman1(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    Friedman1 { noise_sd }.generate(n, seed)
}
