//! Estimation, exact moments and Monte Carlo evaluation for the simple linear
//! regression model with functional measurement error and replicated regressors.

pub mod canonical;
pub mod error;
pub mod estimators;
pub mod fixture;
pub mod mc;
pub mod moments;

pub use canonical::{
    canonicalize, helmert_q, load_csv, parse_csv, sufficient_stats, CanonicalStats, Helmert, RepeatedMeasuresSample,
    SufficientStats,
};
pub use error::{DataError, Error, EstimatorError, MomentError, Result, SimError};
pub use estimators::{EstimateResult, Estimator, EvalContext, MomentNote};
