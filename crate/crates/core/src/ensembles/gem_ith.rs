//! Joint choice of hyperparameters and blending weights.
//!
//! Every learner contributes `b_j` candidate configurations. Their
//! out-of-fold vectors are computed once; each combination (one candidate
//! per learner) is then only a small quadratic program over a sub-block of
//! one shared Gram matrix.

use std::collections::HashSet;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_distinct, refit, tune_learners, Combiner, EnsembleModel, Method};
use crate::dataset::{Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::learners::{HyperConfig, LearnerSpec};
use crate::oob::{oob_matrix, OobCache, OobMatrix};
use crate::search::SearchParams;
use crate::seeds;
use crate::simplex_qp::{blend_mse, solve_gram, Gram, SimplexWeights};

/// Covers `12^4 = 20,736` combinations with room to spare.
pub const DEFAULT_COMBO_CAP: usize = 25_000;

/// Objective and weights of one evaluated combination.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComboOutcome {
    pub index: u128,
    /// Candidate rank chosen for each learner.
    pub choice: Vec<usize>,
    pub weights: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct GemIthResult {
    pub model: EnsembleModel,
    /// Winning combination.
    pub best: ComboOutcome,
    pub configs: Vec<HyperConfig>,
    /// Number of combinations in the full cross product.
    pub total_combinations: u128,
    pub evaluated: usize,
    pub subsampled: bool,
    /// Single-fold fits spent building the candidate columns (zero when the
    /// searches already left them in the cache).
    pub oob_fits: usize,
    /// Every evaluated combination, when requested.
    pub trace: Option<Vec<ComboOutcome>>,
    /// All candidate columns, learner-major.
    pub candidate_oob: OobMatrix,
    /// Column offset of each learner's first candidate in `candidate_oob`.
    pub offsets: Vec<usize>,
}

impl GemIthResult {
    pub fn objective(&self) -> f64 {
        self.best.objective
    }

    pub fn weights(&self) -> &[f64] {
        &self.best.weights
    }

    /// Column indices of `choice` in `candidate_oob`.
    pub fn columns_of(&self, choice: &[usize]) -> Vec<usize> {
        choice.iter().zip(&self.offsets).map(|(c, o)| o + c).collect()
    }
}

/// Decode a combination index; learner 0 varies slowest and index 0 picks
/// every learner's rank-1 candidate.
pub fn combination_indices(mut index: u128, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for j in (0..sizes.len()).rev() {
        let b = sizes[j] as u128;
        out[j] = (index % b) as usize;
        index /= b;
    }
    out
}

/// Combinations to evaluate: all of them, or index 0 plus a seeded sample
/// without replacement. A larger cap with the same seed extends the smaller
/// sample.
fn plan_combinations(total: u128, cap: Option<usize>, seed: u64) -> (Vec<u128>, bool) {
    match cap {
        Some(cap) if total > cap as u128 => {
            let mut rng = seeds::rng_from_seed(seeds::derive(seed, "combinations"));
            let mut chosen = vec![0u128];
            let mut seen: HashSet<u128> = HashSet::from([0]);
            while chosen.len() < cap.max(1) {
                let idx = rng.random_range(0..total);
                if seen.insert(idx) {
                    chosen.push(idx);
                }
            }
            (chosen, true)
        }
        _ => ((0..total).collect(), false),
    }
}

/// GEM-ITH over given candidate lists (best first within each list).
#[allow(clippy::too_many_arguments)]
pub fn gem_ith_from_candidates(
    ds: &Dataset,
    specs: &[LearnerSpec],
    candidates: &[Vec<HyperConfig>],
    plan: &FoldPlan,
    seed: u64,
    combo_cap: Option<usize>,
    cache: &OobCache,
    record_trace: bool,
) -> Result<GemIthResult> {
    check_distinct(specs)?;
    if candidates.len() != specs.len() || candidates.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("every learner needs at least one candidate".into()));
    }
    let sizes: Vec<usize> = candidates.iter().map(Vec::len).collect();
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut items = Vec::new();
    for (spec, cands) in specs.iter().zip(candidates) {
        offsets.push(items.len());
        items.extend(cands.iter().map(|c| (spec, c)));
    }

    let fits_before = cache.fits();
    let all = oob_matrix(ds, &items, plan, seed, cache)?;
    let oob_fits = cache.fits() - fits_before;
    let cols = all.column_slices();
    let gram = Gram::from_columns(&cols, all.y());

    let total = sizes.iter().try_fold(1u128, |acc, &b| acc.checked_mul(b as u128)).unwrap_or(u128::MAX);
    let (indices, subsampled) = plan_combinations(total, combo_cap, seed);
    if subsampled {
        log::warn!("evaluating {} of {total} combinations", indices.len());
    }

    let outcomes: Vec<ComboOutcome> = indices
        .par_iter()
        .map(|&index| {
            let choice = combination_indices(index, &sizes);
            let columns: Vec<usize> = choice.iter().zip(&offsets).map(|(c, o)| o + c).collect();
            let weights = solve_gram(&gram.select(&columns));
            let sub: Vec<&[f64]> = columns.iter().map(|&c| cols[c]).collect();
            let objective = blend_mse(&weights, &sub, all.y());
            ComboOutcome { index, choice, weights, objective }
        })
        .collect();

    let best = outcomes
        .iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective).then(a.index.cmp(&b.index)))
        .cloned()
        .expect("at least one combination");
    let configs: Vec<HyperConfig> = best.choice.iter().zip(candidates).map(|(&c, list)| list[c].clone()).collect();
    let named: Vec<(String, HyperConfig)> = specs.iter().map(|s| s.name.clone()).zip(configs.iter().cloned()).collect();
    let base = refit(ds, &named, seed)?;
    let model = EnsembleModel {
        method: Method::GemIth,
        base,
        combiner: Combiner::Weights(SimplexWeights { weights: best.weights.clone(), objective: best.objective }),
    };
    Ok(GemIthResult {
        model,
        best,
        configs,
        total_combinations: total,
        evaluated: outcomes.len(),
        subsampled,
        oob_fits,
        trace: record_trace.then_some(outcomes),
        candidate_oob: all,
        offsets,
    })
}

/// Search each learner, keep `b` candidates apiece, and pick the
/// combination whose optimal blend has the lowest out-of-fold MSE.
pub fn gem_ith(
    ds_train: &Dataset,
    specs: &[LearnerSpec],
    plan: &FoldPlan,
    search: &SearchParams,
    seed: u64,
    combo_cap: Option<usize>,
    cache: &OobCache,
) -> Result<GemIthResult> {
    check_distinct(specs)?;
    let searches = tune_learners(ds_train, specs, plan, search, seed, cache)?;
    let candidates: Vec<Vec<HyperConfig>> =
        searches.iter().map(|s| s.candidates.iter().map(|t| t.config.clone()).collect()).collect();
    gem_ith_from_candidates(ds_train, specs, &candidates, plan, seed, combo_cap, cache, false)
}
