use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("project {project_id} has no sentences left after cleaning")]
    DocumentEmpty { project_id: String },

    #[error("project {project_id} does not look like English ({ratio:.2} of tokens recognised)")]
    NotEnglish { project_id: String, ratio: f64 },

    #[error("document has no sentences")]
    EmptyDocument,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("corpus needs at least two distinct terms")]
    InsufficientCorpus,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("description has no sentences")]
    EmptyDescription,

    #[error("cannot balance classes with {positives} positives and {negatives} negatives")]
    CannotBalance { positives: usize, negatives: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("model/feature-space fingerprint mismatch: model {model:016x}, input {input:016x}")]
    ModelMismatch { model: u64, input: u64 },

    #[error("stage {stage} produced no sentences")]
    StageEmpty { stage: u8 },

    #[error("n-gram order must be at least 1, got {0}")]
    InvalidN(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid lengths: document {doc_len}, summary {summary_len}")]
    InvalidLengths { doc_len: usize, summary_len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),

    #[error("no summarized project has a reference description")]
    NoOverlap,

    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }

    /// Stable short code used in line-delimited error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::DocumentEmpty { .. } => "document_empty",
            Error::NotEnglish { .. } => "not_english",
            Error::EmptyDocument => "empty_document",
            Error::EmptyCorpus => "empty_corpus",
            Error::InsufficientCorpus => "insufficient_corpus",
            Error::Dimension { .. } => "dimension",
            Error::EmptyDescription => "empty_description",
            Error::CannotBalance { .. } => "cannot_balance",
            Error::SingleClass => "single_class",
            Error::ModelMismatch { .. } => "model_mismatch",
            Error::StageEmpty { .. } => "stage_empty",
            Error::InvalidN(_) => "invalid_n",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::InvalidLengths { .. } => "invalid_lengths",
            Error::Config(_) => "config",
            Error::MissingArtifact(_) => "missing_artifact",
            Error::NoOverlap => "no_overlap",
            Error::Verification(_) => "verification",
        }
    }

    /// Process exit code: 2 for usage and path problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Config(_) | Error::MissingArtifact(_) => 2,
            _ => 1,
        }
    }
}
