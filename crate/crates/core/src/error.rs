use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Stable or tuning parameters outside their admissible region.
    #[error("parameter domain: {0}")]
    ParameterDomain(String),
    /// Argument outside the domain of a function (e.g. an infinite moment).
    #[error("domain error: {0}")]
    Domain(String),
    /// Evaluation point outside the support of a piecewise linear function.
    #[error("range error: {0}")]
    Range(String),
    /// Quadrature or root finding failed to reach the requested accuracy.
    #[error("numeric evaluation: {0}")]
    NumericEvaluation(String),
    /// An emitted error bound failed to dominate the unseen tail.
    #[error("domination violated: {0}")]
    DominationViolation(String),
    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ParameterDomain(_) => "parameter_domain",
            Error::Domain(_) => "domain",
            Error::Range(_) => "range",
            Error::NumericEvaluation(_) => "numeric_evaluation",
            Error::DominationViolation(_) => "domination_violation",
            Error::Contract(_) => "contract",
            Error::UnsupportedCombination(_) => "unsupported_combination",
        }
    }
}
