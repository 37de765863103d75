//! Evidential uncertainty quantification and decision-level fusion for
//! two-view classification.
//!
//! Classifier heads emit non-negative evidence, which maps to a subjective
//! opinion (per-class credibility plus an explicit uncertainty mass) and to a
//! Dirichlet distribution over class probabilities. Two views are combined
//! with a rule that weights each view by its partner's certainty, and the
//! heads are trained end to end with the Reciprocal Loss.

pub mod datagen;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod opinion;
pub mod rng;

pub use error::{Error, Result};
pub use fusion::{fuse_baseline, fuse_opinions, BaselineRule, FusedDecision, ProbVector};
pub use loss::{bayes_risk_ce, global_loss, reciprocal_loss, reciprocal_loss_grad, LabelOneHot, LossBreakdown};
pub use opinion::{DirichletParams, Evidence, Opinion, SimplexPoint};
