use thiserror::Error;

/// Errors raised by the model, solvers, verifier and oracles.
///
/// Scalar payloads are widened to `f64` so the error type stays
/// independent of the scalar the computation ran on.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} is outside the domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error(
        "nonregular instance at type index {index}: mu_k*theta_k - mu_(k+1)*theta_(k+1) = {margin} <= 0 (ironing is not supported)"
    )]
    NonRegular { index: usize, margin: f64 },

    #[error("payment schedule is not increasing at type index {index} (ironing is not supported)")]
    NonMonotoneAllocation { index: usize },

    #[error("degenerate market: profit (P - c) D(P) is nonpositive for every P > c")]
    DegenerateMarket,

    #[error("length mismatch: expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("maximizer on the grid boundary at {at}; widen the grid")]
    GridBoundary { at: f64 },

    #[error("no feasible grid point found")]
    Infeasible,

    #[error("root finding failed: {0}")]
    Root(String),
}

pub type Result<T> = std::result::Result<T, Error>;
