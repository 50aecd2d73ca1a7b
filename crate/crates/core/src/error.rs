use thiserror::Error;

/// Every failure the library can report.
///
/// Each variant maps to a stable kebab-case code (see [`Error::code`]) which the
/// command-line tool prints as `ERROR <code>: <message>`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("eigensolver did not converge (off-diagonal norm {residual:e})")]
    Convergence { residual: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e}, max {max_eigenvalue:e})")]
    NotPsd {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("class {label:?} has no documents")]
    EmptyClass { label: String },

    #[error("class {label:?} has an all-zero feature statistics vector")]
    DegenerateClass { label: String },

    #[error("document has no nonzero feature")]
    DegenerateDocument,

    #[error("prior must lie strictly between 0 and 1, got {0}")]
    InvalidPrior(f64),

    #[error("class vectors are parallel (cosine {cosine}); no separating eigenspace")]
    DegenerateSeparation { cosine: f64 },

    #[error("measurement element {index} is not rank one (eigenvalue ratio {ratio:e})")]
    NotRankOne { index: usize, ratio: f64 },

    #[error("corpus needs at least 2 classes, found {found}")]
    TooFewClasses { found: usize },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("split leaves the {side} side empty")]
    EmptySplit { side: &'static str },

    #[error("class {label:?} has {count} document(s); stratified split needs at least 2")]
    ClassTooSmall { label: String, count: usize },

    #[error("unsupported model format_version {found} (supported: {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },

    #[error("malformed model file: {0}")]
    Format(String),

    #[error("test labels not known to the model: {}", .0.join(", "))]
    UnknownLabels(Vec<String>),

    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Convergence { .. } => "convergence",
            Error::NotPsd { .. } => "not-psd",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::EmptyClass { .. } => "empty-class",
            Error::DegenerateClass { .. } => "degenerate-class",
            Error::DegenerateDocument => "degenerate-document",
            Error::InvalidPrior(_) => "invalid-prior",
            Error::DegenerateSeparation { .. } => "degenerate-separation",
            Error::NotRankOne { .. } => "not-rank-one",
            Error::TooFewClasses { .. } => "degenerate-corpus",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Parse { .. } => "parse",
            Error::EmptySplit { .. } => "empty-split",
            Error::ClassTooSmall { .. } => "class-too-small",
            Error::UnsupportedVersion { .. } => "unsupported-version",
            Error::Format(_) => "format",
            Error::UnknownLabels(_) => "unknown-labels",
            Error::InvalidCost(_) => "invalid-cost",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
