//! Choosing four diverse, reasonably accurate base learners from a pool.
//!
//! 1. tune every pool learner and record its out-of-fold MSE;
//! 2. drop learners whose MSE exceeds the pool mean, restoring the best
//!    dropped ones if fewer than four remain;
//! 3. correlate the survivors' out-of-fold vectors;
//! 4. start from the least correlated pair and greedily add the learner
//!    whose largest correlation with the chosen set is smallest.

use serde::{Deserialize, Serialize};

use super::tune_learners;
use crate::dataset::{Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::learners::{HyperConfig, LearnerSpec};
use crate::oob::{oob_matrix, OobCache};
use crate::search::SearchParams;

const SELECT: usize = 4;

/// Pearson correlation; zero when either vector is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Selection {
    pub selected: Vec<LearnerSpec>,
    /// Pool indices of the selected learners, in selection order.
    pub selected_indices: Vec<usize>,
    pub tuned_configs: Vec<HyperConfig>,
    pub oob_mse: Vec<f64>,
    pub pruned: Vec<usize>,
    pub survivors: Vec<usize>,
    /// Correlations among survivors, indexed like `survivors`.
    pub correlation: Vec<Vec<f64>>,
}

pub fn select_base_learners(
    ds_train: &Dataset,
    pool: &[LearnerSpec],
    plan: &FoldPlan,
    search: &SearchParams,
    seed: u64,
    cache: &OobCache,
) -> Result<Selection> {
    if pool.len() < SELECT {
        return Err(Error::InvalidArgument(format!("pool has {} learners, need at least {SELECT}", pool.len())));
    }
    let searches = tune_learners(ds_train, pool, plan, search, seed, cache)?;
    let tuned_configs: Vec<HyperConfig> = searches.iter().map(|s| s.best().config.clone()).collect();
    let items: Vec<(&LearnerSpec, &HyperConfig)> = pool.iter().zip(&tuned_configs).collect();
    let oob = oob_matrix(ds_train, &items, plan, seed, cache)?;
    let oob_mse: Vec<f64> = (0..pool.len()).map(|j| oob.column_mse(j)).collect();

    let mean = oob_mse.iter().sum::<f64>() / oob_mse.len() as f64;
    let mut survivors: Vec<usize> = (0..pool.len()).filter(|&j| oob_mse[j] <= mean).collect();
    let mut pruned: Vec<usize> = (0..pool.len()).filter(|&j| oob_mse[j] > mean).collect();
    if survivors.len() < SELECT {
        pruned.sort_by(|&a, &b| oob_mse[a].total_cmp(&oob_mse[b]).then(a.cmp(&b)));
        let restore = SELECT - survivors.len();
        survivors.extend(pruned.drain(..restore));
        survivors.sort_unstable();
        pruned.sort_unstable();
    }

    let s = survivors.len();
    let correlation: Vec<Vec<f64>> = survivors
        .iter()
        .map(|&a| survivors.iter().map(|&b| pearson(oob.column(a), oob.column(b))).collect())
        .collect();

    let mut chosen: Vec<usize> = Vec::with_capacity(SELECT);
    let mut best_pair = (0, 1);
    for i in 0..s {
        for j in i + 1..s {
            if correlation[i][j] < correlation[best_pair.0][best_pair.1] {
                best_pair = (i, j);
            }
        }
    }
    chosen.push(best_pair.0);
    chosen.push(best_pair.1);
    while chosen.len() < SELECT {
        let next = (0..s)
            .filter(|i| !chosen.contains(i))
            .map(|i| (i, chosen.iter().map(|&c| correlation[i][c]).fold(f64::NEG_INFINITY, f64::max)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .expect("at least four survivors");
        chosen.push(next);
    }

    let selected_indices: Vec<usize> = chosen.iter().map(|&c| survivors[c]).collect();
    Ok(Selection {
        selected: selected_indices.iter().map(|&i| pool[i].clone()).collect(),
        selected_indices,
        tuned_configs,
        oob_mse,
        pruned,
        survivors,
        correlation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), 0.0);
    }
}
