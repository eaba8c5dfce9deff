//! Gaussian-process Bayesian optimization over a mixed hyperparameter box.
//!
//! Points are encoded into the unit cube (integers min-max scaled, log
//! dimensions scaled in the log domain, categoricals one-hot), modelled by
//! a Matérn-5/2 surrogate and searched with expected improvement plus an
//! escape from over-exploitation.

pub mod acquisition;
pub mod bo;
pub mod cv;
pub mod gp;
pub mod qmc;
pub mod space;

use thiserror::Error;

pub use acquisition::{expected_improvement, expected_improvement_plus, log_expected_improvement, propose_next, AcquisitionConfig, Proposal};
pub use bo::{default_init_design, random_search, run_bo, BoHistory, BoRecord};
pub use cv::{configure, cv_rmse, rolling_origin_folds, Fold};
pub use gp::{gp_fit, gp_posterior, GpHyper, GpSurrogate};
pub use space::{DimKind, Dimension, ParamValue, Point, SearchSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HyperoptError {
    #[error("value {value} for `{name}` is outside the search space")]
    OutOfBounds { name: String, value: String },
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("kernel matrix is not positive definite even with jitter {jitter:e}")]
    SingularKernel { jitter: f64 },
    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("objective failed: {0}")]
    Objective(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, HyperoptError>;
