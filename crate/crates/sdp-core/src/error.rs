use thiserror::Error;

/// Errors raised while building or solving an SDP.
#[derive(Debug, Error)]
pub enum SdpError {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e} exceeds tolerance)")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("ill-formed problem: {0}")]
    BadProblem(String),

    #[error("eigenvalue iteration failed to converge (off-diagonal residual {residual:e})")]
    EigenNoConvergence { residual: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
