use std::fmt;
use std::path::PathBuf;

use mbc_core::document::DocumentError;
use mbc_core::prompts::PromptError;
use mbc_core::query::QueryError;

use crate::providers::ProviderError;
use crate::synthesis::MbcDraft;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Initial,
    Search,
    Extraction,
    Expansion,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Initial => "initial generation",
            Stage::Search => "search",
            Stage::Extraction => "extraction",
            Stage::Expansion => "expansion",
        })
    }
}

/// A pipeline failure with the draft as it stood after the last good round.
#[derive(Debug)]
pub struct PipelineFailure {
    pub source_name: String,
    pub stage: Stage,
    pub query_label: Option<String>,
    pub cause: Error,
    pub partial: Option<MbcDraft>,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("retrieval failed for query `{label}`: {source}")]
    Retrieval { label: String, source: ProviderError },
    #[error("search quota exhausted for query `{label}`: {message}")]
    RateLimited { label: String, message: String },
    #[error("extraction failed: {0}")]
    Extraction(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("expansion failed: {0}")]
    Expansion(String),
    #[error("template error: {0}")]
    Template(#[from] PromptError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
    #[error("{variant} answer failed: {source}")]
    Answer { variant: &'static str, source: Box<Error> },
    #[error("pipeline for `{}` failed at {}{}: {}", .0.source_name, .0.stage, .0.query_label.as_ref().map(|l| format!(" (query `{l}`)")).unwrap_or_default(), .0.cause)]
    Pipeline(Box<PipelineFailure>),
}

impl From<QueryError> for Error {
    fn from(e: QueryError) -> Self {
        Error::Validation(e.to_string())
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Template(PromptError::UnknownTemplate(_)) => 2,
            Error::Pipeline(f) => f.cause.exit_code(),
            Error::Answer { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
