use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand dimensions do not line up.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// A decomposition failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Invalid configuration, partition, or argument.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or unreadable input data.
    #[error("data error: {0}")]
    Data(String),

    /// Operation requires a state the value is not in (e.g. predicting before fitting).
    #[error("invalid state: {0}")]
    State(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    /// Wraps the error with a prefix describing where it happened, keeping its kind.
    pub fn context(self, ctx: &str) -> Self {
        match self {
            Error::Shape { op, detail } => Error::Shape {
                op,
                detail: format!("{ctx}: {detail}"),
            },
            Error::Numerical(m) => Error::Numerical(format!("{ctx}: {m}")),
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
            Error::State(m) => Error::State(format!("{ctx}: {m}")),
            io @ Error::Io { .. } => io,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
