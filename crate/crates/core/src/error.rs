use thiserror::Error;

/// Failures of the numerical pipelines.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input is not convex: secant test failed near x = {at:e}")]
    NonConvexInput { at: f64 },
    #[error("input is not an Orlicz function: {0}")]
    InvalidOrlicz(String),
    #[error("bracket search left the representable range (limit {limit:e})")]
    OverflowRange { limit: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rejection sampler stalled: acceptance {acceptance:e} below 1e-6")]
    RejectionStalled { acceptance: f64 },
    #[error("modulus is not concave: eps/eta^-1(eps) increases near eps = {at:e}")]
    NonConcaveModulus { at: f64 },
    #[error("level {level}: no bracket for S_k after {doublings} doublings")]
    BracketFailure { level: usize, doublings: usize },
    #[error("dyadic tail test neither converged nor diverged within {budget} halvings")]
    SlowConvergence { budget: usize },
    #[error("level {level} has an infinite constant; the process density is undefined")]
    InfiniteLevel { level: usize },
    #[error("point leaves the ball by {excess:e}")]
    OutOfBall { excess: f64 },
    #[error("the first Sobolev term diverges for every probed A")]
    DivergentTerm1,
    #[error("exponent p = {p} must exceed the dimension n = {n}")]
    ExponentOutOfRange { p: f64, n: usize },
    #[error("integrand produced a non-finite value at {at:e}")]
    NonFinite { at: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
