use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("parameter `{field}` out of range: {reason}")]
    Parameter { field: &'static str, reason: String },

    /// A state does not fit into the requested truncation.
    #[error(
        "truncation error: tail mass {tail:.3e} beyond dimension {dim} (try dim >= {suggested})"
    )]
    Truncation {
        dim: usize,
        tail: f64,
        suggested: usize,
    },

    #[error("operator is not hermitian (max |M - M^+| = {0:.3e})")]
    NotHermitian(f64),

    #[error("representation error: {0}")]
    Representation(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("fiducial construction failed: residual {0:.3e}")]
    Fiducial(f64),

    #[error("unsupported canonical map: {0}")]
    UnsupportedMap(String),

    #[error("gradient evaluation failed at (p, q) = ({p}, {q})")]
    Gradient { p: f64, q: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    /// A module error raised while running a subcommand.
    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Parameter { .. } | Error::Config(_) | Error::UnsupportedMap(_) => true,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }
}
