use cmvrp_autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// A configuration or instance violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// A text document could not be parsed; `field` names the offending entry.
    #[error("parse error in `{field}`: {reason}")]
    Parse { field: String, reason: String },
    /// A caller broke an operation's precondition. Indicates a bug upstream.
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("instance too large for exhaustive search: {0}")]
    SizeGuard(String),
    /// Training produced a non-finite loss or gradient.
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

impl CoreError {
    pub(crate) fn parse(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CoreError::Parse {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
