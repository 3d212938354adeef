//! Base regression learners behind one fit/predict interface, with the
//! hyperparameter spaces the search explores.

mod boosting;
mod forest;
mod knn;
mod linear;
mod space;
mod tree;

pub use self::boosting::GradientBoosting;
pub use self::forest::{fit_bagged_tree, RandomForest};
pub use self::knn::Knn;
pub use self::linear::{cholesky_solve, fit_elastic_net, fit_ridge, LinearModel};
pub use self::space::{Domain, HyperConfig, HyperSpace, ParamValue};
pub use self::tree::{RegressionTree, TreeParams};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The learner families available as base models or meta models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Ridge,
    ElasticNet,
    Knn,
    Tree,
    RandomForest,
    GradientBoosting,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 6] = [
        LearnerKind::Ridge,
        LearnerKind::ElasticNet,
        LearnerKind::Knn,
        LearnerKind::Tree,
        LearnerKind::RandomForest,
        LearnerKind::GradientBoosting,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Ridge => "ridge",
            LearnerKind::ElasticNet => "elastic_net",
            LearnerKind::Knn => "knn",
            LearnerKind::Tree => "tree",
            LearnerKind::RandomForest => "random_forest",
            LearnerKind::GradientBoosting => "gradient_boosting",
        }
    }

    /// Whether `fit` consumes its seed.
    pub fn is_randomized(self) -> bool {
        matches!(self, LearnerKind::RandomForest)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown learner {s:?}")))
    }
}

/// A named learner with the space its hyperparameters are searched over.
///
/// `name` only labels the learner in reports; two specs with the same kind
/// and space behave identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub name: String,
    pub kind: LearnerKind,
    pub space: HyperSpace,
}

impl LearnerSpec {
    pub fn new(name: impl Into<String>, kind: LearnerKind, space: HyperSpace) -> Result<Self> {
        if space.is_empty() {
            return Err(Error::InvalidArgument("hyperparameter space is empty".into()));
        }
        Ok(Self { name: name.into(), kind, space })
    }

    pub fn default_for(kind: LearnerKind) -> Self {
        let space = match kind {
            LearnerKind::Ridge => HyperSpace::new([("alpha", Domain::LogUniform { lo: 1e-5, hi: 1.0 })]),
            LearnerKind::ElasticNet => HyperSpace::new([
                ("alpha", Domain::LogUniform { lo: 1e-5, hi: 1.0 }),
                ("l1_ratio", Domain::LogUniform { lo: 1e-5, hi: 1.0 }),
            ]),
            LearnerKind::Knn => HyperSpace::new([("n_neighbors", Domain::Integer { lo: 2, hi: 10 })]),
            LearnerKind::Tree => HyperSpace::new([("max_depth", Domain::Integer { lo: 4, hi: 22 })]),
            LearnerKind::RandomForest => HyperSpace::new([
                ("n_estimators", Domain::Categorical { values: vec![ParamValue::Int(100), ParamValue::Int(200), ParamValue::Int(500)] }),
                ("max_depth", Domain::Integer { lo: 4, hi: 9 }),
            ]),
            LearnerKind::GradientBoosting => HyperSpace::new([
                ("n_estimators", Domain::Categorical { values: vec![ParamValue::Int(100), ParamValue::Int(200), ParamValue::Int(500)] }),
                ("learning_rate", Domain::Uniform { lo: 0.5, hi: 2.0 }),
            ]),
        }
        .expect("built-in spaces are valid");
        Self { name: kind.as_str().to_string(), kind, space }
    }

    /// Fit after checking `config` against this spec's space.
    pub fn fit(&self, config: &HyperConfig, x: ArrayView2<f64>, y: &[f64], seed: u64) -> Result<FittedModel> {
        if config.kind != self.kind {
            return Err(Error::InvalidConfig(format!("config for {} given to {}", config.kind, self.kind)));
        }
        self.space.validate(config)?;
        fit_config(config, x, y, seed)
    }
}

/// The six built-in learners with their default search spaces.
pub fn default_spaces() -> Vec<LearnerSpec> {
    LearnerKind::ALL.into_iter().map(LearnerSpec::default_for).collect()
}

#[derive(Clone, Debug)]
enum ModelState {
    Linear(LinearModel),
    Knn(Knn),
    Tree(RegressionTree),
    Forest(RandomForest),
    Boosting(GradientBoosting),
}

/// A trained base model.
#[derive(Clone, Debug)]
pub struct FittedModel {
    config: HyperConfig,
    n_features: usize,
    state: ModelState,
}

impl FittedModel {
    pub fn kind(&self) -> LearnerKind {
        self.config.kind
    }

    pub fn config(&self) -> &HyperConfig {
        &self.config
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Coefficients and intercept for linear models.
    pub fn linear(&self) -> Option<&LinearModel> {
        match &self.state {
            ModelState::Linear(m) => Some(m),
            _ => None,
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.ncols() });
        }
        let out = match &self.state {
            ModelState::Linear(m) => m.predict(x),
            ModelState::Knn(m) => m.predict(x),
            ModelState::Tree(m) => m.predict(x),
            ModelState::Forest(m) => m.predict(x),
            ModelState::Boosting(m) => m.predict(x),
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} produced a non-finite prediction", self.config)));
        }
        Ok(out)
    }
}

/// Fit a learner from a config alone, without a search space. Used for
/// fixed meta-learner configurations that sit outside the default spaces.
pub fn fit_config(config: &HyperConfig, x: ArrayView2<f64>, y: &[f64], seed: u64) -> Result<FittedModel> {
    let (n, p) = x.dim();
    if n == 0 {
        return Err(Error::EmptyDataset("cannot fit on zero rows".into()));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let state = match config.kind {
        LearnerKind::Ridge => ModelState::Linear(fit_ridge(x, y, config.get_f64("alpha")?)?),
        LearnerKind::ElasticNet => ModelState::Linear(fit_elastic_net(
            x,
            y,
            config.get_f64("alpha")?,
            config.get_f64("l1_ratio")?,
        )?),
        LearnerKind::Knn => ModelState::Knn(Knn::fit(x, y, config.get_usize("n_neighbors")?)?),
        LearnerKind::Tree => ModelState::Tree(RegressionTree::fit(
            x,
            y,
            TreeParams { max_depth: config.get_usize("max_depth")?, max_features: None },
            None,
        )),
        LearnerKind::RandomForest => ModelState::Forest(RandomForest::fit(
            x,
            y,
            config.get_usize("n_estimators")?,
            config.get_usize("max_depth")?,
            seed,
        )?),
        LearnerKind::GradientBoosting => ModelState::Boosting(GradientBoosting::fit(
            x,
            y,
            config.get_usize("n_estimators")?,
            config.get_f64("learning_rate")?,
        )?),
    };
    Ok(FittedModel { config: config.clone(), n_features: p, state })
}

/// Convenience wrapper for owned matrices.
pub fn fit_predict(
    config: &HyperConfig,
    x_train: &Array2<f64>,
    y_train: &[f64],
    x_test: &Array2<f64>,
    seed: u64,
) -> Result<Vec<f64>> {
    fit_config(config, x_train.view(), y_train, seed)?.predict(x_test.view())
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_space_ranges() {
        let specs = default_spaces();
        assert_eq!(specs.len(), 6);
        let get = |k: LearnerKind, p: &str| specs.iter().find(|s| s.kind == k).unwrap().space.domain(p).cloned();
        assert_eq!(get(LearnerKind::Ridge, "alpha"), Some(Domain::LogUniform { lo: 1e-5, hi: 1.0 }));
        assert_eq!(get(LearnerKind::Knn, "n_neighbors"), Some(Domain::Integer { lo: 2, hi: 10 }));
        assert_eq!(get(LearnerKind::Tree, "max_depth"), Some(Domain::Integer { lo: 4, hi: 22 }));
        assert_eq!(get(LearnerKind::RandomForest, "max_depth"), Some(Domain::Integer { lo: 4, hi: 9 }));
        assert_eq!(
            get(LearnerKind::GradientBoosting, "learning_rate"),
            Some(Domain::Uniform { lo: 0.5, hi: 2.0 })
        );
        assert_eq!(get(LearnerKind::ElasticNet, "l1_ratio"), Some(Domain::LogUniform { lo: 1e-5, hi: 1.0 }));
    }

    #[test]
    fn kind_round_trips_through_str() {
        for k in LearnerKind::ALL {
            assert_eq!(k.as_str().parse::<LearnerKind>().unwrap(), k);
        }
        assert!("svm".parse::<LearnerKind>().is_err());
    }
}
