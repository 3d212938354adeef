use ndarray::ArrayView2;

use super::tree::{RegressionTree, TreeParams};
use crate::error::{Error, Result};

const STAGE_DEPTH: usize = 3;

/// Least-squares gradient boosting: start from the mean target, then fit
/// depth-3 trees to the current residuals and add them with a fixed step.
#[derive(Clone, Debug)]
pub struct GradientBoosting {
    init: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
}

impl GradientBoosting {
    pub fn fit(x: ArrayView2<f64>, y: &[f64], n_estimators: usize, learning_rate: f64) -> Result<Self> {
        if learning_rate.is_nan() || learning_rate < 0.0 {
            return Err(Error::InvalidConfig(format!("learning rate {learning_rate} must be >= 0")));
        }
        let init = super::mean(y);
        let mut current = vec![init; y.len()];
        let mut trees = Vec::with_capacity(n_estimators);
        if learning_rate > 0.0 {
            let params = TreeParams { max_depth: STAGE_DEPTH, max_features: None };
            let mut resid = vec![0.0; y.len()];
            for _ in 0..n_estimators {
                for ((r, t), c) in resid.iter_mut().zip(y).zip(&current) {
                    *r = t - c;
                }
                let tree = RegressionTree::fit(x, &resid, params, None);
                for (c, row) in current.iter_mut().zip(x.rows()) {
                    *c += learning_rate * tree.predict_row(|j| row[j]);
                }
                trees.push(tree);
            }
        }
        Ok(Self { init, learning_rate, trees })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                self.trees
                    .iter()
                    .fold(self.init, |acc, t| acc + self.learning_rate * t.predict_row(|j| row[j]))
            })
            .collect()
    }
}
