use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (max |A - A^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid system spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown bath index {index} (system has {n_baths} baths)")]
    UnknownBath { index: usize, n_baths: usize },

    #[error(
        "steady state is not unique: null-space indicator {indicator:e} below threshold {threshold:e}"
    )]
    NonUniqueSteadyState { indicator: f64, threshold: f64 },

    #[error("steady-state solve failed: {0}")]
    SolverFailure(String),

    #[error("time step rejected: trace drift {drift:e} exceeds {limit:e} at t = {time}")]
    StepRejected { drift: f64, limit: f64, time: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}
