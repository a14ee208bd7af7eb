use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("eigen-decomposition did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("degenerate code: {0}")]
    DegenerateCode(String),

    #[error("expansion point rejected: {0}")]
    ExpansionPoint(String),

    #[error("subproblem infeasible: {0}")]
    Infeasible(String),

    #[error("scenario error at `{path}`: {message}")]
    Scenario { path: String, message: String },

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by bad user input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Scenario { .. } | Error::Parse(_) => true,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    /// The innermost error beneath any context layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Wraps the error with a location such as `frame 3, node 1`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn scenario(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Scenario {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
