use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is numerically singular: pivot {pivot:e} below floor {floor:e}")]
    SingularMatrix { pivot: f64, floor: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} did not converge within {iterations} iterations")]
    ConvergenceFailure { what: &'static str, iterations: usize },

    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("estimated G is singular (eigenvalue ratio {ratio:e})")]
    SingularG { ratio: f64 },

    #[error("restricted covariance core R G^-1 H G^-1 R' is singular")]
    SingularW,

    #[error("non-positive sparsity estimate {0}")]
    DegenerateSparsity(f64),

    #[error("quantile grid is empty")]
    EmptyGrid,

    #[error("at quantile level {alpha}: {source}")]
    AtLevel {
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("configuration error for `{key}`: {msg}")]
    Config { key: String, msg: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// Strips any `AtLevel` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLevel { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for failures caused by ill-conditioned estimates rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::SingularMatrix { .. }
                | Error::ConvergenceFailure { .. }
                | Error::SingularG { .. }
                | Error::SingularW
                | Error::DegenerateSparsity(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
