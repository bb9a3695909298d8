//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the numerical and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An input fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two refinements of a quadrature rule disagreed beyond tolerance.
    #[error("quadrature did not converge in {operation}: |order n - order 2n| = {discrepancy:.3e} exceeds {tolerance:.1e}")]
    QuadratureNonconvergence {
        operation: &'static str,
        discrepancy: f64,
        tolerance: f64,
    },

    /// A mode index outside the ranges admitted by the basis definitions.
    #[error("invalid mode index: {0}")]
    InvalidMode(String),

    /// Bessel order or argument outside the vetted range of the evaluator.
    #[error("Bessel evaluation outside supported range: order {order}, argument {argument}")]
    BesselRange { order: i64, argument: f64 },

    /// A probability left [0, 1] or a channel set failed its sum rule.
    #[error("invalid probability: {0}")]
    InvalidProbability(String),

    /// Channel probabilities summed to more than one beyond tolerance,
    /// signalling a non-orthonormal mode set or a quadrature failure.
    #[error("probability consistency violation: channel sum {sum} exceeds 1 by more than {tolerance:.1e}")]
    ProbabilitySum { sum: f64, tolerance: f64 },

    /// Experiment configuration rejected during validation.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
