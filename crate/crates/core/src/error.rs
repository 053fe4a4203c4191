use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },

    #[error("dense oracle limited to {limit} nodes, got {n}")]
    SizeLimit { n: usize, limit: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("undefined metric: {0}")]
    Undefined(String),

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Subsystem the error originates from, used for `ERROR <module>: ...` reporting.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Shape { .. } | Error::NonFinite(_) => "nn_core",
            Error::Index { .. } | Error::Graph(_) => "graph_core",
            Error::SizeLimit { .. } | Error::Precondition(_) => "spectral_engine",
            Error::Parse { .. } => "data_gen",
            Error::Config(_) | Error::Argument(_) => "config",
            Error::Sampling(_) | Error::Undefined(_) => "tasks_eval",
            Error::Io(_) => "io",
        }
    }

    /// Configuration errors map to exit status 2 in the CLI.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
