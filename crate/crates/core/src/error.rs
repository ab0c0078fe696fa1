use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// Each variant maps to a stable machine-readable code (see [`Error::code`])
/// which the CLI prints as `error[CODE]:` and the HTTP service returns in
/// its error body.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{field} out of [1,9]: {value}")]
    Range { field: &'static str, value: f64 },

    #[error("{field} must be a non-negative finite number: {value}")]
    NegativeSd { field: &'static str, value: f64 },

    #[error("{field} must be strictly positive: {value}")]
    Threshold { field: &'static str, value: f64 },

    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },

    #[error("unknown term '{0}'")]
    UnknownTerm(String),

    #[error("empty semantic profile")]
    EmptyProfile,

    #[error("taxonomy line {line}: {message}")]
    Taxonomy { line: usize, message: String },

    #[error("line {line}: {field}: {message}")]
    Malformed {
        line: u64,
        field: String,
        message: String,
    },

    #[error("line {line}: {source}")]
    AtLine {
        line: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("duplicate id '{id}' (lines {first_line} and {second_line})")]
    DuplicateId {
        id: String,
        first_line: u64,
        second_line: u64,
    },

    #[error("unsupported corpus format '{found}', expected 'affectcouple-corpus v1'")]
    Version { found: String },

    #[error("unannotated document '{0}'")]
    Unannotated(String),

    #[error("document '{0}' is already annotated")]
    AlreadyAnnotated(String),

    #[error("no reference annotations")]
    NoReferenceAnnotations,

    #[error("unknown document '{0}'")]
    UnknownDocument(String),

    #[error("candidate index {index} out of range ({len} candidates)")]
    CandidateIndex { index: usize, len: usize },

    #[error("session closed ({0})")]
    SessionClosed(&'static str),

    #[error("group '{group}' has {len} members, at least 3 needed: insufficient members")]
    InsufficientMembers { group: String, len: usize },

    #[error("leave-one-out needs at least 2 annotated documents, found {0}")]
    InsufficientData(usize),

    #[error("synthetic spec: {0}")]
    Synthetic(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Range { .. } => "RANGE",
            Error::NegativeSd { .. } | Error::Threshold { .. } | Error::Invalid { .. } => "VALIDATION",
            Error::UnknownTerm(_) => "UNKNOWN_TERM",
            Error::EmptyProfile => "EMPTY_PROFILE",
            Error::Taxonomy { .. } => "TAXONOMY",
            Error::Malformed { .. } | Error::Csv(_) => "MALFORMED",
            Error::AtLine { source, .. } => source.code(),
            Error::DuplicateId { .. } => "DUPLICATE_ID",
            Error::Version { .. } => "VERSION",
            Error::Unannotated(_) => "UNANNOTATED",
            Error::AlreadyAnnotated(_) => "ALREADY_ANNOTATED",
            Error::NoReferenceAnnotations => "NO_REFERENCE",
            Error::UnknownDocument(_) => "NOT_FOUND",
            Error::CandidateIndex { .. } => "INDEX",
            Error::SessionClosed(_) => "SESSION_CLOSED",
            Error::InsufficientMembers { .. } => "INSUFFICIENT_MEMBERS",
            Error::InsufficientData(_) => "INSUFFICIENT_DATA",
            Error::Synthetic(_) => "SYNTHETIC",
            Error::Io { .. } => "IO",
            Error::Json(_) => "FORMAT",
        }
    }

    /// Strips any line-number wrapper.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLine { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn at_line(self, line: u64) -> Error {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
