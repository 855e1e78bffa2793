use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty cloud")]
    EmptyCloud,

    #[error("non-finite coordinate at point {index}")]
    NonFinitePoint { index: usize },

    #[error("cloud too small: {points} points, need at least {required}")]
    CloudTooSmall { points: usize, required: usize },

    #[error("k out of range: k = {k}, at most {max} allowed")]
    KOutOfRange { k: usize, max: usize },

    #[error("degenerate epsilon: all points coincide")]
    ZeroEpsilon,

    #[error("mask length {mask} does not match point count {points}")]
    MaskLength { mask: usize, points: usize },

    #[error("nothing to vote into: no regions exist")]
    NothingToVoteInto,

    #[error("no candidate regions (threshold {min_fraction} of {points} points)")]
    NoCandidateRegions { min_fraction: f64, points: usize },

    #[error("degenerate cut: one side of the fracture is empty")]
    DegenerateCut,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("improper rotation (det = {det})")]
    ImproperRotation { det: f64 },

    #[error("rotation is not orthonormal (deviation {deviation:e})")]
    NonOrthonormal { deviation: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {kind} at {location}")]
    Parse {
        path: PathBuf,
        kind: ParseErrorKind,
        location: Location,
    },

    #[error("malformed JSON in {path}: {message}")]
    Json { path: PathBuf, message: String },

    #[error("malformed config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Strips any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Where in a file a parse error occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Byte(u64),
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Byte(n) => write!(f, "byte {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("vertex count mismatch: header declares {declared}, found {found}")]
    VertexCountMismatch { declared: usize, found: usize },
    #[error("malformed data: {0}")]
    MalformedData(String),
    #[error("empty cloud")]
    EmptyCloud,
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
