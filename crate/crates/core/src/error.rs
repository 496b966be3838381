use thiserror::Error;

/// Errors raised by the evaluation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument or parameter violates its documented domain.
    #[error("{0}")]
    InvalidArgument(String),

    /// The integrand produced NaN or an infinity at a quadrature node.
    #[error("non-finite integrand value {value} at {location:?}")]
    NonFiniteIntegrand { location: Vec<f64>, value: f64 },

    /// The bell comb carries (numerically) no mass over the outer domain.
    #[error("degenerate localization: comb mass {mass:e} over [{lo}, {hi}] is below 1e-12")]
    DegenerateLocalization { mass: f64, lo: f64, hi: f64 },

    /// A requested grid would exceed the evaluation budget.
    #[error("resource guard: {0}")]
    ResourceGuard(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
