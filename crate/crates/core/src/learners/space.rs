use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::LearnerKind;
use crate::error::{Error, Result};

/// A single hyperparameter value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Float(f) => Some(*f),
            ParamValue::Text(_) => None,
        }
    }

    /// Rendering used for cache keys and distinctness: integers verbatim,
    /// reals with 17 significant digits.
    pub fn canonical(&self) -> String {
        match self {
            ParamValue::Int(i) => i.to_string(),
            ParamValue::Float(f) => format!("{f:.16e}"),
            ParamValue::Text(s) => format!("{s:?}"),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

/// Search domain of one hyperparameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    Integer { lo: i64, hi: i64 },
    Categorical { values: Vec<ParamValue> },
}

impl Domain {
    fn check(&self) -> Result<()> {
        match self {
            Domain::Uniform { lo, hi } if lo < hi && lo.is_finite() && hi.is_finite() => Ok(()),
            Domain::LogUniform { lo, hi } if *lo > 0.0 && lo < hi && hi.is_finite() => Ok(()),
            Domain::Integer { lo, hi } if lo < hi => Ok(()),
            Domain::Categorical { values } if !values.is_empty() => Ok(()),
            other => Err(Error::InvalidArgument(format!("invalid domain {other:?}"))),
        }
    }

    pub fn contains(&self, value: &ParamValue) -> bool {
        match (self, value) {
            (Domain::Uniform { lo, hi } | Domain::LogUniform { lo, hi }, v) => {
                v.as_f64().is_some_and(|x| x >= *lo && x <= *hi)
            }
            (Domain::Integer { lo, hi }, ParamValue::Int(i)) => i >= lo && i <= hi,
            (Domain::Integer { .. }, _) => false,
            (Domain::Categorical { values }, v) => values.contains(v),
        }
    }
}

/// Named hyperparameter domains, kept in name order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperSpace {
    params: BTreeMap<String, Domain>,
}

impl HyperSpace {
    pub fn new<I, S>(params: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Domain)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (name, domain) in params {
            domain.check()?;
            let name = name.into();
            if map.insert(name.clone(), domain).is_some() {
                return Err(Error::InvalidArgument(format!("parameter {name} declared twice")));
            }
        }
        Ok(Self { params: map })
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn domain(&self, name: &str) -> Option<&Domain> {
        self.params.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Domain)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn validate(&self, config: &HyperConfig) -> Result<()> {
        for (name, domain) in &self.params {
            match config.values.get(name) {
                None => return Err(Error::InvalidConfig(format!("{config} is missing {name}"))),
                Some(v) if !domain.contains(v) => {
                    return Err(Error::InvalidConfig(format!("{name}={v} outside {domain:?}")))
                }
                Some(_) => {}
            }
        }
        if let Some(extra) = config.values.keys().find(|k| !self.params.contains_key(*k)) {
            return Err(Error::InvalidConfig(format!("{config} has undeclared parameter {extra}")));
        }
        Ok(())
    }
}

/// One concrete hyperparameter assignment for a learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperConfig {
    pub kind: LearnerKind,
    pub values: BTreeMap<String, ParamValue>,
}

impl HyperConfig {
    pub fn new<I, S>(kind: LearnerKind, values: I) -> Self
    where
        I: IntoIterator<Item = (S, ParamValue)>,
        S: Into<String>,
    {
        Self { kind, values: values.into_iter().map(|(k, v)| (k.into(), v)).collect() }
    }

    pub fn ridge(alpha: f64) -> Self {
        Self::new(LearnerKind::Ridge, [("alpha", ParamValue::Float(alpha))])
    }

    pub fn elastic_net(alpha: f64, l1_ratio: f64) -> Self {
        Self::new(
            LearnerKind::ElasticNet,
            [("alpha", ParamValue::Float(alpha)), ("l1_ratio", ParamValue::Float(l1_ratio))],
        )
    }

    pub fn knn(k: i64) -> Self {
        Self::new(LearnerKind::Knn, [("n_neighbors", ParamValue::Int(k))])
    }

    pub fn tree(max_depth: i64) -> Self {
        Self::new(LearnerKind::Tree, [("max_depth", ParamValue::Int(max_depth))])
    }

    pub fn random_forest(n_estimators: i64, max_depth: i64) -> Self {
        Self::new(
            LearnerKind::RandomForest,
            [("n_estimators", ParamValue::Int(n_estimators)), ("max_depth", ParamValue::Int(max_depth))],
        )
    }

    pub fn gradient_boosting(n_estimators: i64, learning_rate: f64) -> Self {
        Self::new(
            LearnerKind::GradientBoosting,
            [("n_estimators", ParamValue::Int(n_estimators)), ("learning_rate", ParamValue::Float(learning_rate))],
        )
    }

    pub fn get(&self, name: &str) -> Result<&ParamValue> {
        self.values
            .get(name)
            .ok_or_else(|| Error::InvalidConfig(format!("{self} is missing {name}")))
    }

    pub fn get_f64(&self, name: &str) -> Result<f64> {
        let v = self.get(name)?;
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::InvalidConfig(format!("{name}={v} is not a finite number")))
    }

    pub fn get_usize(&self, name: &str) -> Result<usize> {
        match self.get(name)? {
            ParamValue::Int(i) if *i >= 0 => Ok(*i as usize),
            ParamValue::Float(f) if *f >= 0.0 && f.fract() == 0.0 => Ok(*f as usize),
            v => Err(Error::InvalidConfig(format!("{name}={v} is not a non-negative integer"))),
        }
    }

    /// Deterministic text form: learner, then parameters sorted by name.
    pub fn canonical(&self) -> String {
        let body: Vec<String> = self.values.iter().map(|(k, v)| format!("{k}={}", v.canonical())).collect();
        format!("{}{{{}}}", self.kind, body.join(";"))
    }
}

impl fmt::Display for HyperConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}({})", self.kind, body.join(", "))
    }
}
