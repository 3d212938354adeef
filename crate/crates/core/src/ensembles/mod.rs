//! Ensemble builders: uniform averaging (BEM), simplex-weighted blending of
//! individually tuned learners (GEM), blending with hyperparameters chosen
//! jointly with the weights (GEM-ITH), and stacked meta-learners.

mod gem_ith;
mod selection;

pub use self::gem_ith::{combination_indices, gem_ith, gem_ith_from_candidates, ComboOutcome, GemIthResult, DEFAULT_COMBO_CAP};
pub use self::selection::{pearson, select_base_learners, Selection};

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::learners::{fit_config, FittedModel, HyperConfig, LearnerSpec};
use crate::oob::{mse, oob_matrix, OobCache, OobMatrix};
use crate::search::{bayes_candidates, CandidateSearch, SearchParams};
use crate::seeds;
use crate::simplex_qp::{ensemble_mse, solve_gem_weights, SimplexWeights};

/// Second-level learners used for stacking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetaLearner {
    /// Ordinary least squares, as ridge with a vanishing penalty.
    Linear,
    RandomForest,
    Knn,
}

impl MetaLearner {
    pub fn config(self) -> HyperConfig {
        match self {
            MetaLearner::Linear => HyperConfig::ridge(1e-8),
            MetaLearner::RandomForest => HyperConfig::random_forest(200, 6),
            MetaLearner::Knn => HyperConfig::knn(5),
        }
    }
}

/// Ensemble method tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Bem,
    Gem,
    GemIth,
    Stacked(MetaLearner),
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Bem,
        Method::Gem,
        Method::GemIth,
        Method::Stacked(MetaLearner::Linear),
        Method::Stacked(MetaLearner::RandomForest),
        Method::Stacked(MetaLearner::Knn),
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bem => "BEM",
            Method::Gem => "GEM",
            Method::GemIth => "GEM-ITH",
            Method::Stacked(MetaLearner::Linear) => "STACKED-LR",
            Method::Stacked(MetaLearner::RandomForest) => "STACKED-RF",
            Method::Stacked(MetaLearner::Knn) => "STACKED-KNN",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == upper)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A base learner refitted on the full training data.
#[derive(Clone, Debug)]
pub struct BaseModel {
    pub name: String,
    pub model: FittedModel,
}

impl BaseModel {
    pub fn config(&self) -> &HyperConfig {
        self.model.config()
    }
}

#[derive(Clone, Debug)]
pub enum Combiner {
    Weights(SimplexWeights),
    Meta { model: FittedModel, training_mse: f64 },
}

/// A trained ensemble ready for prediction.
#[derive(Clone, Debug)]
pub struct EnsembleModel {
    pub method: Method,
    pub base: Vec<BaseModel>,
    pub combiner: Combiner,
}

impl EnsembleModel {
    pub fn weights(&self) -> Option<&[f64]> {
        match &self.combiner {
            Combiner::Weights(w) => Some(&w.weights),
            Combiner::Meta { .. } => None,
        }
    }

    /// Training objective: blended out-of-fold MSE, or the meta-learner's
    /// in-sample MSE on the out-of-fold features.
    pub fn objective(&self) -> f64 {
        match &self.combiner {
            Combiner::Weights(w) => w.objective,
            Combiner::Meta { training_mse, .. } => *training_mse,
        }
    }

    pub fn configs(&self) -> Vec<(String, HyperConfig)> {
        self.base.iter().map(|b| (b.name.clone(), b.config().clone())).collect()
    }

    /// Predictions of each base model, one vector per model.
    pub fn base_predictions(&self, x: ArrayView2<f64>) -> Result<Vec<Vec<f64>>> {
        self.base.iter().map(|b| b.model.predict(x)).collect()
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        let base = self.base_predictions(x)?;
        match &self.combiner {
            Combiner::Weights(w) => {
                let mut out = vec![0.0; x.nrows()];
                for (wj, col) in w.weights.iter().zip(&base) {
                    for (o, p) in out.iter_mut().zip(col) {
                        *o += wj * p;
                    }
                }
                Ok(out)
            }
            Combiner::Meta { model, .. } => {
                let feats = ndarray::Array2::from_shape_fn((x.nrows(), base.len()), |(i, j)| base[j][i]);
                model.predict(feats.view())
            }
        }
    }
}

pub fn predict_test(model: &EnsembleModel, x_test: ArrayView2<f64>) -> Result<Vec<f64>> {
    model.predict(x_test)
}

/// Test-set MSE.
pub fn evaluate(model: &EnsembleModel, test: &Dataset) -> Result<f64> {
    Ok(mse(&model.predict(test.features().view())?, test.target()))
}

/// Uniform weights.
pub fn bem(m: &OobMatrix) -> Result<SimplexWeights> {
    let k = m.k();
    let weights = vec![1.0 / k as f64; k];
    let objective = ensemble_mse(&weights, m)?;
    Ok(SimplexWeights { weights, objective })
}

/// Seed used when refitting a configuration on the full training split.
pub fn refit_seed(seed: u64, config: &HyperConfig) -> u64 {
    seeds::derive(seed, &format!("refit:{}", config.kind))
}

/// Refit each `(name, config)` on all of `ds`.
pub fn refit(ds: &Dataset, items: &[(String, HyperConfig)], seed: u64) -> Result<Vec<BaseModel>> {
    items
        .par_iter()
        .map(|(name, config)| {
            let model = fit_config(config, ds.features().view(), ds.target(), refit_seed(seed, config))?;
            Ok(BaseModel { name: name.clone(), model })
        })
        .collect()
}

/// Run the per-learner searches. Learners are searched in parallel; each
/// search has its own seed, so the result does not depend on scheduling.
pub fn tune_learners(
    ds: &Dataset,
    specs: &[LearnerSpec],
    plan: &FoldPlan,
    search: &SearchParams,
    seed: u64,
    cache: &OobCache,
) -> Result<Vec<CandidateSearch>> {
    specs.par_iter().map(|spec| bayes_candidates(ds, spec, plan, search, seed, cache)).collect()
}

/// GEM built from its tuned configurations.
#[derive(Clone, Debug)]
pub struct GemOutcome {
    pub model: EnsembleModel,
    /// Out-of-fold columns of the rank-1 configurations.
    pub oob: OobMatrix,
}

impl GemOutcome {
    /// Out-of-fold MSE of each base learner alone.
    pub fn base_mses(&self) -> Vec<f64> {
        (0..self.oob.k()).map(|j| self.oob.column_mse(j)).collect()
    }

    /// Uniform blend of the same base models.
    pub fn bem(&self) -> Result<EnsembleModel> {
        Ok(EnsembleModel {
            method: Method::Bem,
            base: self.model.base.clone(),
            combiner: Combiner::Weights(bem(&self.oob)?),
        })
    }

    /// Stacked ensemble over the same base models.
    pub fn stacked(&self, meta: MetaLearner, seed: u64) -> Result<EnsembleModel> {
        let (model, training_mse) = stacked(meta, &self.oob, seed)?;
        Ok(EnsembleModel { method: Method::Stacked(meta), base: self.model.base.clone(), combiner: Combiner::Meta { model, training_mse } })
    }
}

fn check_distinct(specs: &[LearnerSpec]) -> Result<()> {
    for (i, a) in specs.iter().enumerate() {
        if specs[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::InvalidArgument(format!("learner {} listed twice", a.name)));
        }
    }
    if specs.is_empty() {
        return Err(Error::InvalidArgument("need at least one learner".into()));
    }
    Ok(())
}

/// GEM from completed searches: rank-1 config per learner, optimal weights.
pub fn gem_from_searches(
    ds: &Dataset,
    specs: &[LearnerSpec],
    searches: &[CandidateSearch],
    plan: &FoldPlan,
    seed: u64,
    cache: &OobCache,
) -> Result<GemOutcome> {
    check_distinct(specs)?;
    let items: Vec<(&LearnerSpec, &HyperConfig)> =
        specs.iter().zip(searches).map(|(s, r)| (s, &r.best().config)).collect();
    let oob = oob_matrix(ds, &items, plan, seed, cache)?;
    let weights = solve_gem_weights(&oob)?;
    let base = refit(ds, &items.iter().map(|(s, c)| (s.name.clone(), (*c).clone())).collect::<Vec<_>>(), seed)?;
    Ok(GemOutcome { model: EnsembleModel { method: Method::Gem, base, combiner: Combiner::Weights(weights) }, oob })
}

/// Tune each learner on its own, then blend the tuned learners.
pub fn gem(
    ds_train: &Dataset,
    specs: &[LearnerSpec],
    plan: &FoldPlan,
    search: &SearchParams,
    seed: u64,
    cache: &OobCache,
) -> Result<GemOutcome> {
    check_distinct(specs)?;
    let searches = tune_learners(ds_train, specs, plan, search, seed, cache)?;
    gem_from_searches(ds_train, specs, &searches, plan, seed, cache)
}

/// Fit a meta-learner on the out-of-fold columns; returns the model and its
/// in-sample MSE.
pub fn stacked(meta: MetaLearner, m: &OobMatrix, seed: u64) -> Result<(FittedModel, f64)> {
    let x = m.to_features();
    let model = fit_config(&meta.config(), x.view(), m.y(), seeds::derive(seed, "meta"))?;
    let train = mse(&model.predict(x.view())?, m.y());
    Ok((model, train))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synthetic_friedman1;
    use crate::learners::LearnerKind;

    fn hand() -> OobMatrix {
        OobMatrix::from_columns(vec![vec![1.1, 2.1, 3.1], vec![0.8, 1.8, 2.8]], vec![1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            let j = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<Method>(&j).unwrap(), m);
        }
        assert_eq!("gem_ith".parse::<Method>().unwrap(), Method::GemIth);
    }

    #[test]
    fn bem_examples() {
        let y = vec![1.0, 4.0, -2.0];
        let m = OobMatrix::from_columns(
            vec![y.iter().map(|v| v + 0.1).collect(), y.iter().map(|v| v - 0.1).collect()],
            y.clone(),
        )
        .unwrap();
        assert!(bem(&m).unwrap().objective < 1e-28);
        let single = m.select(&[0]);
        assert_eq!(bem(&single).unwrap().objective, single.column_mse(0));
    }

    #[test]
    fn stacked_linear_on_constant_residuals() {
        let (model, train) = stacked(MetaLearner::Linear, &hand(), 0).unwrap();
        assert!(train < 1e-12, "{train}");
        let lin = model.linear().unwrap();
        // centered columns coincide, so only the coefficient sum is identified
        assert!((lin.coef[0] + lin.coef[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stacked_linear_with_exact_column() {
        let y = vec![1.0, 3.0, 2.0, 5.0, 4.0];
        let m = OobMatrix::from_columns(vec![y.clone(), vec![2.0, 2.0, 1.0, 0.0, 3.0]], y).unwrap();
        let (_, train) = stacked(MetaLearner::Linear, &m, 0).unwrap();
        assert!(train < 1e-12);
    }

    #[test]
    fn stacked_knn_with_full_k_is_the_mean() {
        let y = vec![1.0, 3.0, 2.0, 6.0, 4.0];
        let m = OobMatrix::from_columns(vec![vec![0.0, 1.0, 2.0, 3.0, 4.0]], y).unwrap();
        let (model, _) = stacked(MetaLearner::Knn, &m, 0).unwrap();
        for p in model.predict(ndarray::array![[10.0], [-3.0]].view()).unwrap() {
            assert!((p - 3.2).abs() < 1e-12);
        }
    }

    #[test]
    fn vertex_weights_reproduce_the_base_model() {
        let ds = synthetic_friedman1(80, 1.0, 3).unwrap();
        let items: Vec<(String, HyperConfig)> = vec![
            ("tree".into(), HyperConfig::tree(5)),
            ("ridge".into(), HyperConfig::ridge(0.1)),
            ("knn".into(), HyperConfig::knn(4)),
            ("en".into(), HyperConfig::elastic_net(0.01, 0.5)),
        ];
        let base = refit(&ds, &items, 1).unwrap();
        let model = EnsembleModel {
            method: Method::Gem,
            base: base.clone(),
            combiner: Combiner::Weights(SimplexWeights { weights: vec![1.0, 0.0, 0.0, 0.0], objective: 0.0 }),
        };
        let test = synthetic_friedman1(20, 1.0, 4).unwrap();
        assert_eq!(model.predict(test.features().view()).unwrap(), base[0].model.predict(test.features().view()).unwrap());

        let same = vec![base[1].clone(), base[1].clone(), base[1].clone()];
        let avg = EnsembleModel {
            method: Method::Bem,
            base: same,
            combiner: Combiner::Weights(SimplexWeights { weights: vec![1.0 / 3.0; 3], objective: 0.0 }),
        };
        let a = avg.predict(test.features().view()).unwrap();
        let b = base[1].model.predict(test.features().view()).unwrap();
        for (x, z) in a.iter().zip(&b) {
            assert!((x - z).abs() < 1e-12);
        }
        assert!(model.predict(ndarray::Array2::zeros((2, 3)).view()).is_err());
    }

    #[test]
    fn gem_gives_full_weight_to_a_perfect_learner() {
        // knn with k = 1 on a noiseless target where duplicated rows make
        // every out-of-fold neighbour an exact copy
        let base = synthetic_friedman1(20, 0.0, 3).unwrap();
        let idx: Vec<usize> = (0..40).map(|i| i % 20).collect();
        let ds = base.select_rows(&idx);
        let assignment: Vec<usize> = (0..40).map(|i| i / 20).collect();
        let plan = FoldPlan::from_assignment(2, assignment, 0).unwrap();
        let knn_space = crate::learners::HyperSpace::new([(
            "n_neighbors",
            crate::learners::Domain::Integer { lo: 1, hi: 2 },
        )])
        .unwrap();
        let specs = vec![
            LearnerSpec::new("knn1", LearnerKind::Knn, knn_space).unwrap(),
            LearnerSpec::default_for(LearnerKind::Ridge),
            LearnerSpec::default_for(LearnerKind::Tree),
            LearnerSpec::default_for(LearnerKind::ElasticNet),
        ];
        let params = SearchParams { n_trials: 6, n_startup: 3, b: 2, ..Default::default() };
        let out = gem(&ds, &specs, &plan, &params, 5, &OobCache::new()).unwrap();
        let w = out.model.weights().unwrap();
        assert!((w[0] - 1.0).abs() < 1e-6, "{w:?}");
        assert!(out.model.objective() < 1e-12);
        let mses = out.base_mses();
        assert!(mses.iter().all(|m| out.model.objective() <= m + 1e-9));
    }
}
