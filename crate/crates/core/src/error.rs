use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// The CLI maps these onto process exit codes through [`Error::exit_code`].
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid jump measure: {0}")]
    InvalidMeasure(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("rank-deficient regression at node {node} (t = {t:.6}): {detail}")]
    RankDeficient { node: usize, t: f64, detail: String },

    #[error("non-finite value at node {node}, path {path}: {what}")]
    NonFinite {
        node: usize,
        path: usize,
        what: &'static str,
    },

    #[error("Picard iteration is not contracting: ratio {ratio:.4} at iteration {iteration}")]
    NotContracting { iteration: usize, ratio: f64 },

    #[error("too many excluded paths: {excluded} of {total} had a nonpositive price")]
    TooManyExclusions { excluded: usize, total: usize },

    #[error("approximation kind {0} is not present in the path bundle")]
    MissingKind(String),

    #[error("sweep failed at epsilon = {epsilon}: {source}")]
    Sweep {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("certificate failed: {0}")]
    Certificate(String),

    #[error("malformed path dump: {0}")]
    Dump(String),

    #[error("malformed report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 config error, 3 numerical failure, 4 certificate failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidParameter(_) | Error::InvalidMeasure(_) => 2,
            Error::MissingKind(_) => 2,
            Error::Certificate(_) => 4,
            Error::Sweep { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
