use thiserror::Error;

/// Errors raised by the numerical and data-handling routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QiError {
    /// A parameter lies outside its admissible domain.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The square window was requested without acknowledging that it is unstable.
    #[error("the square window is mathematically unstable; pass an explicit opt-in to use it")]
    UnstableWindow,

    /// Adaptive quadrature exhausted its evaluation budget before meeting the tolerance.
    #[error(
        "quadrature did not converge: estimate {value:e}, achieved error {achieved_error:e} \
         (tolerance {tolerance:e}) after {evaluations} evaluations"
    )]
    NotConverged {
        value: f64,
        achieved_error: f64,
        tolerance: f64,
        evaluations: usize,
    },

    /// The bound bracket came out above one, which no normalized window can produce.
    #[error("inconsistent bound bracket {bracket} (error estimate {error_estimate:e}); expected a value in [0, 1]")]
    InconsistentBracket { bracket: f64, error_estimate: f64 },

    /// The effective squeezed-fraction weight vanished over the whole range.
    #[error("zero total weight over the integration range; no squeezing anywhere")]
    ZeroWeight,

    /// A curve identifier could not be parsed.
    #[error("unknown curve id `{0}`")]
    UnknownCurve(String),

    /// A dataset row failed to parse or validate.
    #[error("dataset line {line}: {message}")]
    Data { line: u64, message: String },

    /// No scale factor in (0, 1] satisfies the envelope constraint.
    #[error("no feasible scale factor: {0}")]
    Infeasible(String),
}

impl QiError {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        QiError::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// True for errors that stem from numerical non-convergence.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            QiError::NotConverged { .. } | QiError::InconsistentBracket { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, QiError>;
