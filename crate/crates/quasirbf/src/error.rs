use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{param}`: {reason}")]
    InvalidParameter { param: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("wrong family: {0}")]
    WrongFamily(String),

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("degenerate pole configuration: {0}")]
    Degenerate(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("infeasible stencil system: {0}")]
    Infeasible(String),

    #[error("parity error: {0}")]
    Parity(String),

    #[error("insufficient margin: {0}")]
    InsufficientMargin(String),

    #[error("singular evaluation: {0}")]
    SingularEvaluation(String),
}

impl Error {
    pub fn param(param: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            param: param.to_string(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's input rather than by a numerical procedure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::Domain(_) | Error::WrongFamily(_) | Error::Parity(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
