//! Per-learner hyperparameter search with a Tree-structured Parzen Estimator.
//!
//! Each parameter gets its own density (the usual TPE factorization):
//! truncated Gaussian kernels for real and integer domains, Laplace-smoothed
//! frequencies for categorical ones. Reals on a log scale are modelled in log
//! space. After `n_startup` prior draws, the history is split at the
//! `gamma`-quantile of loss into a good set `l` and a bad set `g`, candidates
//! are drawn from `l`, and the one maximizing `l(x) / g(x)` is returned.

use std::collections::HashSet;
use std::f64::consts::{PI, SQRT_2};

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::learners::{Domain, HyperConfig, HyperSpace, LearnerKind, LearnerSpec, ParamValue};
use crate::oob::{mse, OobCache};
use crate::seeds::{self, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub config: HyperConfig,
    /// Out-of-fold MSE of the learner on its own.
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub n_trials: usize,
    pub n_startup: usize,
    pub gamma: f64,
    pub n_ei_candidates: usize,
    /// Candidates kept per learner.
    pub b: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self { n_trials: 30, n_startup: 5, gamma: 0.25, n_ei_candidates: 24, b: 12 }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("search params: {m}")));
        if self.n_trials == 0 || self.b == 0 || self.n_ei_candidates == 0 {
            return bad("n_trials, b and n_ei_candidates must be positive");
        }
        if self.n_startup > self.n_trials {
            return bad("n_startup must not exceed n_trials");
        }
        if self.b > self.n_trials {
            return bad("b must not exceed n_trials");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Good/bad split: the `ceil(gamma * N)` lowest-loss trials are good. Ties
/// keep history order.
pub fn split_history(history: &[Trial], gamma: f64) -> (Vec<&Trial>, Vec<&Trial>) {
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_by(|&a, &b| history[a].loss.total_cmp(&history[b].loss).then(a.cmp(&b)));
    let n_good = ((gamma * history.len() as f64).ceil() as usize).min(history.len());
    let good = order[..n_good].iter().map(|&i| &history[i]).collect();
    let bad = order[n_good..].iter().map(|&i| &history[i]).collect();
    (good, bad)
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / SQRT_2))
}

/// Internal coordinate of a value: identity, log, integer-as-real, or category index.
fn to_internal(domain: &Domain, v: &ParamValue) -> f64 {
    match domain {
        Domain::LogUniform { .. } => v.as_f64().unwrap_or(f64::NAN).ln(),
        Domain::Categorical { values } => values.iter().position(|c| c == v).unwrap_or(0) as f64,
        _ => v.as_f64().unwrap_or(f64::NAN),
    }
}

fn bounds(domain: &Domain) -> (f64, f64) {
    match domain {
        Domain::Uniform { lo, hi } => (*lo, *hi),
        Domain::LogUniform { lo, hi } => (lo.ln(), hi.ln()),
        Domain::Integer { lo, hi } => (*lo as f64, *hi as f64),
        Domain::Categorical { values } => (0.0, values.len() as f64),
    }
}

fn from_internal(domain: &Domain, x: f64) -> ParamValue {
    match domain {
        Domain::Uniform { lo, hi } => ParamValue::Float(x.clamp(*lo, *hi)),
        Domain::LogUniform { lo, hi } => ParamValue::Float(x.exp().clamp(*lo, *hi)),
        Domain::Integer { lo, hi } => ParamValue::Int((x.round() as i64).clamp(*lo, *hi)),
        Domain::Categorical { values } => values[(x as usize).min(values.len() - 1)].clone(),
    }
}

/// One-dimensional density over a parameter's internal coordinate.
#[derive(Clone, Debug)]
pub enum ParamDensity {
    Kernel { points: Vec<f64>, bandwidth: f64, lo: f64, hi: f64 },
    Frequencies(Vec<f64>),
}

impl ParamDensity {
    pub fn fit(domain: &Domain, observed: &[f64]) -> Self {
        match domain {
            Domain::Categorical { values } => {
                let c = values.len();
                let mut counts = vec![1.0; c];
                for &o in observed {
                    counts[o as usize] += 1.0;
                }
                let total = (observed.len() + c) as f64;
                ParamDensity::Frequencies(counts.into_iter().map(|v| v / total).collect())
            }
            _ => {
                let (lo, hi) = bounds(domain);
                let span = hi - lo;
                let bandwidth = if observed.is_empty() { span } else { (span / observed.len() as f64).max(1e-3 * span) };
                ParamDensity::Kernel { points: observed.to_vec(), bandwidth, lo, hi }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            ParamDensity::Frequencies(p) => p[x as usize],
            ParamDensity::Kernel { points, bandwidth, lo, hi } => {
                if x < *lo || x > *hi {
                    return 0.0;
                }
                if points.is_empty() {
                    return 1.0 / (hi - lo);
                }
                let h = *bandwidth;
                let total: f64 = points
                    .iter()
                    .map(|&p| {
                        let mass = std_normal_cdf((hi - p) / h) - std_normal_cdf((lo - p) / h);
                        let z = (x - p) / h;
                        (-0.5 * z * z).exp() / (h * (2.0 * PI).sqrt()) / mass.max(1e-300)
                    })
                    .sum();
                total / points.len() as f64
            }
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            ParamDensity::Frequencies(p) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, pi) in p.iter().enumerate() {
                    acc += pi;
                    if u < acc {
                        return i as f64;
                    }
                }
                (p.len() - 1) as f64
            }
            ParamDensity::Kernel { points, bandwidth, lo, hi } => {
                if points.is_empty() {
                    return rng.random_range(*lo..=*hi);
                }
                let center = points[rng.random_range(0..points.len())];
                for _ in 0..64 {
                    let z: f64 = StandardNormal.sample(rng);
                    let x = center + bandwidth * z;
                    if x >= *lo && x <= *hi {
                        return x;
                    }
                }
                center.clamp(*lo, *hi)
            }
        }
    }
}

fn sample_prior(kind: LearnerKind, space: &HyperSpace, rng: &mut Rng) -> HyperConfig {
    let values = space.iter().map(|(name, domain)| {
        let (lo, hi) = bounds(domain);
        let x = match domain {
            Domain::Categorical { values } => rng.random_range(0..values.len()) as f64,
            _ => rng.random_range(lo..=hi),
        };
        (name.to_string(), from_internal(domain, x))
    });
    HyperConfig::new(kind, values.collect::<Vec<_>>())
}

/// Candidates drawn from the good-set density with their log density ratios.
#[derive(Clone, Debug)]
pub struct Proposal {
    pub candidates: Vec<HyperConfig>,
    pub scores: Vec<f64>,
    pub chosen: usize,
}

/// Draw `n_ei_candidates` configs from `l` and score them by `ln l - ln g`.
pub fn tpe_propose(kind: LearnerKind, space: &HyperSpace, history: &[Trial], params: &SearchParams, rng: &mut Rng) -> Result<Proposal> {
    if space.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter space".into()));
    }
    if history.iter().any(|t| !t.loss.is_finite()) {
        return Err(Error::NonFinite("trial history has a non-finite loss".into()));
    }
    let (good, bad) = split_history(history, params.gamma);
    let densities: Vec<(&str, &Domain, ParamDensity, ParamDensity)> = space
        .iter()
        .map(|(name, domain)| {
            let coords = |set: &[&Trial]| -> Vec<f64> {
                set.iter().filter_map(|t| t.config.values.get(name)).map(|v| to_internal(domain, v)).collect()
            };
            (name, domain, ParamDensity::fit(domain, &coords(&good)), ParamDensity::fit(domain, &coords(&bad)))
        })
        .collect();

    let mut candidates = Vec::with_capacity(params.n_ei_candidates);
    let mut scores = Vec::with_capacity(params.n_ei_candidates);
    for _ in 0..params.n_ei_candidates {
        let mut score = 0.0;
        let mut values = Vec::with_capacity(densities.len());
        for (name, domain, l, g) in &densities {
            let value = from_internal(domain, l.sample(rng));
            let x = to_internal(domain, &value);
            score += l.pdf(x).max(1e-300).ln() - g.pdf(x).max(1e-300).ln();
            values.push((name.to_string(), value));
        }
        candidates.push(HyperConfig::new(kind, values));
        scores.push(score);
    }
    let chosen = (0..scores.len()).fold(0, |best, i| if scores[i] > scores[best] { i } else { best });
    Ok(Proposal { candidates, scores, chosen })
}

/// Next configuration to try given the trial history.
pub fn tpe_suggest(kind: LearnerKind, space: &HyperSpace, history: &[Trial], params: &SearchParams, rng: &mut Rng) -> Result<HyperConfig> {
    if space.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter space".into()));
    }
    if history.len() < params.n_startup {
        return Ok(sample_prior(kind, space, rng));
    }
    let mut p = tpe_propose(kind, space, history, params, rng)?;
    Ok(p.candidates.swap_remove(p.chosen))
}

/// Outcome of one learner's search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CandidateSearch {
    pub learner: String,
    pub trials: Vec<Trial>,
    /// Running minimum of trial losses.
    pub best_trace: Vec<f64>,
    /// Up to `b` distinct configs, lowest loss first.
    pub candidates: Vec<Trial>,
    /// Set when fewer than `b` distinct configs were explored.
    pub incomplete: bool,
}

impl CandidateSearch {
    pub fn best(&self) -> &Trial {
        &self.candidates[0]
    }
}

/// Seed of the TPE stream for `spec`. Depends on the learner and its space,
/// not its display name, so identical specs search identically.
pub fn search_seed(seed: u64, spec: &LearnerSpec) -> u64 {
    let space = serde_json::to_string(&spec.space).expect("spaces serialize");
    seeds::derive(seed, &format!("tpe:{}:{space}", spec.kind))
}

/// Run `n_trials` sequential TPE trials scored by out-of-fold MSE and keep
/// the `b` best distinct configurations.
pub fn bayes_candidates(
    ds: &Dataset,
    spec: &LearnerSpec,
    plan: &FoldPlan,
    params: &SearchParams,
    seed: u64,
    cache: &OobCache,
) -> Result<CandidateSearch> {
    params.validate()?;
    let mut rng = seeds::rng_from_seed(search_seed(seed, spec));
    let mut trials: Vec<Trial> = Vec::with_capacity(params.n_trials);
    let mut best_trace = Vec::with_capacity(params.n_trials);
    for _ in 0..params.n_trials {
        let config = tpe_suggest(spec.kind, &spec.space, &trials, params, &mut rng)?;
        let oob = cache.get_or_compute(ds, spec, &config, plan, seed)?;
        let loss = mse(&oob.predictions, ds.target());
        best_trace.push(best_trace.last().map_or(loss, |b: &f64| b.min(loss)));
        trials.push(Trial { config, loss });
    }

    let mut order: Vec<usize> = (0..trials.len()).collect();
    order.sort_by(|&a, &b| trials[a].loss.total_cmp(&trials[b].loss).then(a.cmp(&b)));
    let mut seen = HashSet::new();
    let candidates: Vec<Trial> = order
        .into_iter()
        .filter(|&i| seen.insert(trials[i].config.canonical()))
        .take(params.b)
        .map(|i| trials[i].clone())
        .collect();
    let incomplete = candidates.len() < params.b;
    if incomplete {
        log::warn!("{}: only {} distinct configurations explored (b = {})", spec.name, candidates.len(), params.b);
    }
    Ok(CandidateSearch { learner: spec.name.clone(), trials, best_trace, candidates, incomplete })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_fold_plan, Generator, LinearGenerator};
    use crate::learners::default_spaces;

    fn unit_space() -> HyperSpace {
        HyperSpace::new([("x", Domain::Uniform { lo: 0.0, hi: 1.0 })]).unwrap()
    }

    fn trial(x: f64, loss: f64) -> Trial {
        Trial { config: HyperConfig::new(LearnerKind::Ridge, [("x", ParamValue::Float(x))]), loss }
    }

    #[test]
    fn startup_draws_from_prior() {
        let mut rng = seeds::rng_from_seed(1);
        for spec in default_spaces() {
            for _ in 0..50 {
                let c = tpe_suggest(spec.kind, &spec.space, &[], &SearchParams::default(), &mut rng).unwrap();
                spec.space.validate(&c).unwrap();
            }
        }
    }

    #[test]
    fn good_set_size() {
        let history: Vec<Trial> = (0..8).map(|i| trial(i as f64 / 8.0, i as f64)).collect();
        let (good, bad) = split_history(&history, 0.25);
        assert_eq!(good.len(), 2);
        assert_eq!(bad.len(), 6);
        assert_eq!(good[0].loss, 0.0);
    }

    #[test]
    fn density_ratio_steers_suggestions() {
        let mut history = Vec::new();
        for i in 0..4 {
            history.push(trial(0.08 + 0.01 * i as f64, 0.1 + 0.01 * i as f64));
        }
        for i in 0..12 {
            history.push(trial(0.85 + 0.01 * i as f64, 5.0 + i as f64));
        }
        let params = SearchParams::default();
        let mut rng = seeds::rng_from_seed(42);
        let low = (0..200)
            .filter(|_| {
                let c = tpe_suggest(LearnerKind::Ridge, &unit_space(), &history, &params, &mut rng).unwrap();
                c.get_f64("x").unwrap() <= 0.5
            })
            .count();
        assert!(low >= 140, "{low} of 200 in [0, 0.5]");

        // oracle: the density ratio itself is far larger at 0.1 than at 0.9
        let (good, bad) = split_history(&history, params.gamma);
        let xs = |s: &[&Trial]| s.iter().map(|t| t.config.get_f64("x").unwrap()).collect::<Vec<_>>();
        let d = Domain::Uniform { lo: 0.0, hi: 1.0 };
        let l = ParamDensity::fit(&d, &xs(&good));
        let g = ParamDensity::fit(&d, &xs(&bad));
        assert!(l.pdf(0.1) / g.pdf(0.1) > 100.0 * l.pdf(0.9) / g.pdf(0.9));
    }

    #[test]
    fn chosen_candidate_is_in_the_drawn_set() {
        let history: Vec<Trial> = (0..10).map(|i| trial(i as f64 / 10.0, (i as f64 - 3.0).abs())).collect();
        let mut rng = seeds::rng_from_seed(5);
        let p = tpe_propose(LearnerKind::Ridge, &unit_space(), &history, &SearchParams::default(), &mut rng).unwrap();
        assert_eq!(p.candidates.len(), 24);
        assert!(p.scores.iter().all(|s| *s <= p.scores[p.chosen]));
    }

    #[test]
    fn kernel_density_integrates_to_one() {
        let d = Domain::Uniform { lo: -1.0, hi: 2.0 };
        let k = ParamDensity::fit(&d, &[-0.9, 0.3, 1.95]);
        let steps = 30_000;
        let h = 3.0 / steps as f64;
        let integral: f64 = (0..steps).map(|i| k.pdf(-1.0 + (i as f64 + 0.5) * h) * h).sum();
        assert!((integral - 1.0).abs() < 1e-4, "{integral}");
    }

    #[test]
    fn params_validation() {
        assert!(SearchParams::default().validate().is_ok());
        assert!(SearchParams { b: 40, ..Default::default() }.validate().is_err());
        assert!(SearchParams { n_startup: 31, ..Default::default() }.validate().is_err());
        assert!(SearchParams { gamma: 1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn ridge_candidates_on_noiseless_line() {
        let ds = LinearGenerator { coefficients: vec![3.0, -2.0], intercept: 1.0, noise_sd: 0.0 }.generate(40, 9).unwrap();
        let plan = make_fold_plan(40, 5, 1).unwrap();
        let spec = LearnerSpec::default_for(LearnerKind::Ridge);
        let params = SearchParams { n_trials: 10, n_startup: 4, b: 10, ..Default::default() };
        let cache = OobCache::new();
        let res = bayes_candidates(&ds, &spec, &plan, &params, 3, &cache).unwrap();
        assert!(!res.incomplete);
        let alphas: Vec<f64> = res.candidates.iter().map(|t| t.config.get_f64("alpha").unwrap()).collect();
        for w in alphas.windows(2) {
            assert!(w[0] < w[1], "loss order should follow alpha order: {alphas:?}");
        }
        let min_alpha = res.trials.iter().map(|t| t.config.get_f64("alpha").unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(alphas[0], min_alpha);
        // all trials kept, sorted by loss
        assert!(res.candidates.windows(2).all(|w| w[0].loss <= w[1].loss));
        let again = bayes_candidates(&ds, &spec, &plan, &params, 3, &OobCache::new()).unwrap();
        assert_eq!(again.candidates, res.candidates);
        for (i, b) in res.best_trace.iter().enumerate() {
            let m = res.trials[..=i].iter().map(|t| t.loss).fold(f64::INFINITY, f64::min);
            assert_eq!(*b, m);
        }
    }

    #[test]
    fn small_integer_space_flags_incomplete() {
        let ds = crate::dataset::synthetic_friedman1(40, 1.0, 2).unwrap();
        let plan = make_fold_plan(40, 4, 1).unwrap();
        let spec = LearnerSpec::default_for(LearnerKind::Knn);
        let params = SearchParams { n_trials: 30, b: 12, ..Default::default() };
        let res = bayes_candidates(&ds, &spec, &plan, &params, 3, &OobCache::new()).unwrap();
        assert!(res.incomplete);
        assert!(res.candidates.len() <= 9);
        let distinct: HashSet<String> = res.candidates.iter().map(|t| t.config.canonical()).collect();
        assert_eq!(distinct.len(), res.candidates.len());
    }
}
