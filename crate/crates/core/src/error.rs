use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the region where the routine is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A q-series could not reach the requested tail bound.
    #[error("series truncation failed after {terms} terms: tail bound {tail_bound:e} exceeds tolerance {tolerance:e}")]
    Truncation {
        terms: usize,
        tail_bound: f64,
        tolerance: f64,
    },

    /// The integrated flow escaped to infinity (or the step size collapsed).
    #[error("finite-time singularity near t = {time}")]
    Singularity { time: f64 },

    /// A scan found no sub-interval where the metric coefficients are positive.
    #[error("no positivity domain for metric coefficients on [{start}, {end}]")]
    EmptyDomain { start: f64, end: f64 },

    /// A value that must be real (or must satisfy an identity) does not.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// A numeric parameter is invalid (non-positive tolerance, step underflow, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An operation requested for a configuration that does not support it.
    #[error("mode error: {0}")]
    Mode(String),

    /// A rational map whose numerator and denominator share a root.
    #[error("degenerate rational map: resultant {resultant:e} vanishes")]
    DegenerateMap { resultant: f64 },

    /// The Higgs field is too small to define an abelian direction.
    #[error("abelian projection singular: |phi| = {norm:e}")]
    ProjectionSingular { norm: f64 },

    /// Decay/growth splitting of a scattering problem lost numerical rank.
    #[error("ill-conditioned scattering problem: {0}")]
    Conditioning(String),

    /// Adaptive quadrature did not converge.
    #[error("quadrature failed to reach tolerance: {0}")]
    Accuracy(String),

    /// Generic numerical breakdown (eigen-solver, Cholesky, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
