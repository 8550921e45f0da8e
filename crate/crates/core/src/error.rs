use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{func}: argument out of domain ({detail})")]
    Domain { func: &'static str, detail: String },

    #[error("matrix is not symmetric (max |a_ij - a_ji| = {0:e})")]
    Asymmetric(f64),

    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("Jacobi eigen solver did not converge after {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("Cholesky factorisation failed at pivot {pivot} (value {value:e})")]
    Cholesky { pivot: usize, value: f64 },

    #[error("column {0} is degenerate (all values equal)")]
    DegenerateColumn(usize),

    #[error("physical generator requires an integer fading severity, got m = {0}")]
    NonIntegerShape(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag, used by the CLI's JSON error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Asymmetric(_) => "asymmetric_matrix",
            Error::Shape(_) => "shape",
            Error::EigenNoConvergence(_) => "eigen_no_convergence",
            Error::Cholesky { .. } => "cholesky",
            Error::DegenerateColumn(_) => "degenerate_column",
            Error::NonIntegerShape(_) => "non_integer_shape",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
