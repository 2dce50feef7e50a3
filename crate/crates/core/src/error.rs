use thiserror::Error;

/// Errors produced by the library.
///
/// The variants map onto the failure classes surfaced by the CLI: bad input,
/// numerical breakdown, misuse of a value in the wrong state, and exhausted
/// enumeration budgets.
#[derive(Debug, Error)]
pub enum JsrError {
    #[error("input error: {0}")]
    Input(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("state error: {0}")]
    State(String),

    #[error("budget error: {what} needs {needed} evaluations but product_budget is {budget}")]
    Budget {
        what: String,
        needed: f64,
        budget: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = JsrError> = std::result::Result<T, E>;

impl JsrError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        JsrError::Input(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        JsrError::Numeric(msg.into())
    }
}
