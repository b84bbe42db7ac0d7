use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by every stage of the pipeline and the query layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("need {needed} points, have {available}")]
    InsufficientPoints { needed: usize, available: usize },

    #[error("degenerate neighborhood (no well-defined surface normal)")]
    DegenerateNeighborhood,

    #[error("direction vector must be nonzero and finite")]
    InvalidDirection,

    #[error("distance query did not converge after {iterations} iterations (best bound {best_bound})")]
    NonConvergence { iterations: usize, best_bound: f64 },

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not implemented: {0}")]
    NotImplemented(&'static str),

    #[error("stage {stage}: {source}")]
    Stage { stage: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the pipeline stage it occurred in.
    pub fn at_stage(self, stage: impl Into<String>) -> Error {
        Error::Stage { stage: stage.into(), source: Box::new(self) }
    }

    /// True for failures of numerical procedures rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::DegenerateNeighborhood => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
