use thiserror::Error;

/// Errors produced by the numerical kernels, the rate evaluators and the
/// optimisers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or malformed arguments (length mismatch, bad state).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A series did not reach the requested relative accuracy.
    #[error("{what} did not converge after {terms} terms (last term magnitude {last_term:e})")]
    NonConvergence {
        what: &'static str,
        terms: usize,
        last_term: f64,
    },

    /// Adaptive integration needed more bisection levels than allowed.
    #[error("adaptive integration exceeded subdivision depth {depth} near [{a}, {b}]")]
    SubdivisionLimit { depth: u32, a: f64, b: f64 },

    /// A closed-form power allocation produced a negative power.
    #[error("infeasible allocation: {power} = {value:e} < 0 (binding: {binding})")]
    Infeasible {
        power: &'static str,
        binding: &'static str,
        value: f64,
    },

    /// A denominator in a closed-form solve vanished.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
