//! Regression ensembles whose base-learner hyperparameters and
//! simplex-constrained blending weights are optimized together.
//!
//! The pipeline: split a [`Dataset`], draw a [`FoldPlan`], search
//! hyperparameters per learner with TPE ([`search`]), collect out-of-fold
//! predictions ([`oob`]), then blend them by solving a quadratic program over
//! the probability simplex ([`simplex_qp`]). [`ensembles`] wires these into
//! BEM, GEM, GEM-ITH and stacked baselines.

pub mod dataset;
pub mod diagnostics;
pub mod ensembles;
mod error;
pub mod experiment;
pub mod learners;
pub mod oob;
pub mod search;
pub mod seeds;
pub mod simplex_qp;

pub use dataset::{Dataset, FoldPlan, Scaler};
pub use error::{Error, Result};
pub use learners::{FittedModel, HyperConfig, HyperSpace, LearnerKind, LearnerSpec};
pub use oob::{OobCache, OobMatrix, OobVector};
pub use simplex_qp::SimplexWeights;
