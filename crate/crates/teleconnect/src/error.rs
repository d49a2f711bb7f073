use thiserror::Error;

/// Unified error type for the toolkit.
///
/// Variants map onto the CLI exit codes: parse/structural/alignment
/// problems are data errors (exit 3), domain/numeric/search problems are
/// numeric errors (exit 4).
#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The file parsed but violates a structural invariant (duplicate
    /// years, non-monotone years, ...).
    #[error("structural error: {0}")]
    Structural(String),

    /// Series could not be aligned on a common window.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// An operation was called outside its domain (wrong lengths, missing
    /// values, invalid orders, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numeric computation broke down (rank deficiency, non-finite
    /// intermediates, recursion breakdown).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Every candidate of a model search failed; carries per-cell detail.
    #[error("search error: all candidate fits failed: {0}")]
    Search(String),

    /// A pipeline stage failed; wraps the stage name around the cause.
    #[error("pipeline stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI: 3 for data errors, 4 for numeric
    /// errors, 2 for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Structural(_) | Error::Alignment(_) | Error::Io(_) => 3,
            Error::Domain(_) | Error::Numeric(_) | Error::Search(_) | Error::Json(_) => 4,
            Error::Usage(_) => 2,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
