use ndarray::ArrayView2;
use rand::Rng as _;
use rayon::prelude::*;

use super::tree::{RegressionTree, TreeParams};
use crate::error::{Error, Result};
use crate::seeds;

/// Bagged CART trees with `ceil(p / 3)` candidate features per split.
#[derive(Clone, Debug)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

/// One tree on a bootstrap sample, as grown inside a forest with the same seed.
pub fn fit_bagged_tree(x: ArrayView2<f64>, y: &[f64], max_depth: usize, seed: u64) -> RegressionTree {
    let n = y.len();
    let p = x.ncols();
    let mut rng = seeds::rng_from_seed(seed);
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let params = TreeParams { max_depth, max_features: Some(p.div_ceil(3)) };
    RegressionTree::fit_rows(x, y, rows, params, Some(&mut rng))
}

impl RandomForest {
    pub fn fit(x: ArrayView2<f64>, y: &[f64], n_estimators: usize, max_depth: usize, seed: u64) -> Result<Self> {
        if n_estimators == 0 {
            return Err(Error::InvalidConfig("random forest needs at least one tree".into()));
        }
        let trees = (0..n_estimators)
            .into_par_iter()
            .map(|t| fit_bagged_tree(x, y, max_depth, seeds::derive_indexed(seed, "tree", t as u64)))
            .collect();
        Ok(Self { trees })
    }

    /// Seed of the `t`-th tree for a forest fitted with `seed`.
    pub fn tree_seed(seed: u64, t: usize) -> u64 {
        seeds::derive_indexed(seed, "tree", t as u64)
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let mut out = vec![0.0; x.nrows()];
        for tree in &self.trees {
            for (o, p) in out.iter_mut().zip(tree.predict(x)) {
                *o += p;
            }
        }
        let k = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= k);
        out
    }
}
