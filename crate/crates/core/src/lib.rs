//! Monotonic neural additive models for binary default prediction.
//!
//! A neural additive model (NAM) scores an applicant as
//! `β + f_1(x_1) + … + f_p(x_p)` with one small logistic network per feature.
//! A monotonic NAM (MNAM) is a NAM trained under squared-hinge penalties on
//! negative shape-function slopes (individual constraints) and negative slope
//! gaps between feature pairs (dominance constraints). The penalty multipliers
//! are escalated until every constraint certifies on a dense grid.
//!
//! Crate layout:
//!
//! - [`math`]: logistic activation and closed-form subnet derivatives
//! - [`nam`]: the additive model and shape-function evaluation
//! - [`monotonicity`]: constraint sets, grid penalties and certification
//! - [`training`]: penalized training and the certified escalation loop
//! - [`baselines`]: logistic regression and a fully connected network
//! - [`metrics`], [`importance`]: evaluation and sensitivity importance
//! - [`data`]: CSV ingestion, dataset recipes, normalization and splitting
//! - [`config`], [`artifact`], [`cli`]: experiment files, model files and commands
//!
//! Row- and grid-level loops run on rayon when the default `parallel` feature
//! is enabled; reductions use a fixed chunk order so results are bit-identical
//! with or without it.

pub mod artifact;
pub mod baselines;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod exec;
pub mod importance;
pub mod math;
pub mod metrics;
pub mod model;
pub mod monotonicity;
pub mod nam;
pub mod optim;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
pub use exec::Execution;
pub use math::SubNet;
pub use model::{InputGradient, Scorer, Trainable};
pub use monotonicity::{certify, CertReport, ConstraintSet, PenaltyConfig};
pub use nam::{FeatureMeta, NamModel};
pub use training::{certified_train, train_nam, TrainConfig};
