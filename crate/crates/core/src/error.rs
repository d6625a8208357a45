use thiserror::Error;

/// Problems with input data or its reduction to canonical statistics.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("bad header: expected `y,x1,...,xr`, found `{0}`")]
    Header(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("row {row}, column {column}: `{value}` is not a number")]
    NonNumeric { row: usize, column: usize, value: String },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("need at least {min} groups, found {found}")]
    TooFewGroups { min: usize, found: usize },
    #[error("need at least one replicate per group")]
    NoReplicates,
    #[error("y has {y} entries but x has {x} rows")]
    ShapeMismatch { y: usize, x: usize },
    #[error("orthogonal transform requires n >= 2, got {0}")]
    TransformSize(usize),
    #[error("all group means are equal (U = 0); the slope is not identifiable")]
    DegenerateRegressor,
    #[error("inconsistent sufficient statistics: {0}")]
    InvalidStats(String),
}

/// Estimator evaluation failures. `Singular` marks pole events, which Monte Carlo
/// runs count rather than propagate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("{estimator} is singular at these statistics ({reason})")]
    Singular { estimator: String, reason: &'static str },
    #[error("{estimator} needs an estimate of the error variance (m >= 1, i.e. r >= 2)")]
    NeedsReplicates { estimator: String },
    #[error("{estimator} requires p >= {min_p}, got p = {p}")]
    DimensionTooSmall { estimator: String, min_p: u32, p: u32 },
    #[error("unknown estimator `{0}`")]
    Unknown(String),
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),
}

/// Validity-window and convergence failures of the exact moment series.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentError {
    #[error("{quantity} needs {condition} (LS moment window), got p = {p}")]
    LsWindow { quantity: &'static str, condition: &'static str, p: u32 },
    #[error("BR bias series needs p >= 5 and l < (p-2)/2, got p = {p}, l = {ell}")]
    BiasWindow { p: u32, ell: u32 },
    #[error("MSE of a degree-{degree} correction is infinite unless l < (p-2)/4 (p > 4l+2), got p = {p}")]
    MseWindow { p: u32, degree: u32 },
    #[error("inverse moment of order {order} needs p > {need}, got p = {p}")]
    InverseMomentWindow { order: u32, need: u32, p: u32 },
    #[error("the error-variance estimate needs m >= 1")]
    NoVarianceDf,
    #[error("psi must be bounded on (0,1) for this series")]
    UnboundedPsi,
    #[error("{what} must be {requirement}, got {value}")]
    InvalidParameter { what: &'static str, requirement: &'static str, value: f64 },
    #[error("Poisson series did not converge within {terms} terms (tail bound {bound:e})")]
    SeriesNonConvergence { terms: u64, bound: f64 },
    #[error("quadrature did not reach tolerance {tol:e} (estimated error {err:e})")]
    QuadratureNonConvergence { tol: f64, err: f64 },
    #[error("integrand is not finite at v = {0}")]
    Divergent(f64),
}

/// Monte Carlo configuration and run failures.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("every replication of {0} failed")]
    AllReplicationsFailed(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
