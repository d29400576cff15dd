use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the pipeline.
///
/// Variants split into two families: problems with the inputs
/// ([`Error::is_validation`]) and failures of a computation on otherwise
/// well-formed inputs. The CLI maps the former to exit code 1 and the latter
/// to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid data: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("alignment failed at character offset {offset}: {message}")]
    Alignment { offset: usize, message: String },

    #[error("rank-deficient design: collinear or constant column(s) {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("no rows left after the {stage} filter")]
    EmptyDesign { stage: &'static str },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True when the error comes from malformed or inconsistent input rather
    /// than from a numerical failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Argument(_)
            | Error::Alignment { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => true,
            Error::RankDeficient { .. } | Error::InsufficientData(_) | Error::EmptyDesign { .. } => false,
            Error::Fold { source, .. } => source.is_validation(),
        }
    }
}
