use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::argid::ArgIdError;
use crate::deptree::DepTreeError;
use crate::embeddings::{EmbeddingError, FilterSpecError};
use crate::eval::EvalError;
use crate::fndata::FnDataError;
use crate::paraphrase::{ConfigError, ProjectionError};
use crate::query::QueryError;
use crate::valence::ValenceError;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] FnDataError),
    #[error(transparent)]
    Valence(#[from] ValenceError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Filter(#[from] FilterSpecError),
    #[error(transparent)]
    Tree(#[from] DepTreeError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Generation(#[from] ConfigError),
    #[error(transparent)]
    ArgId(#[from] ArgIdError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

impl Error {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Data(FnDataError::Parse { .. }) => "parse",
            Error::Data(FnDataError::Integrity(_)) => "integrity",
            Error::Data(FnDataError::Rejected { .. }) => "rejected",
            Error::Data(FnDataError::UnknownDocument(_) | FnDataError::DocumentConflict(_)) => {
                "split"
            }
            Error::Data(FnDataError::Io { .. }) => "io",
            Error::Valence(_) => "valence",
            Error::Embedding(_) => "embeddings",
            Error::Filter(_) => "config",
            Error::Tree(_) => "tree",
            Error::Projection(_) => "projection",
            Error::Generation(_) => "config",
            Error::ArgId(ArgIdError::Io { .. }) => "io",
            Error::ArgId(_) => "model",
            Error::Eval(_) => "eval",
            Error::Analysis(_) => "analysis",
            Error::Query(e) => e.kind(),
        }
    }
}
