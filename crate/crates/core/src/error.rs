use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header at line {line}: {msg}")]
    MalformedHeader { line: usize, msg: String },

    #[error("line {line}: cannot parse {token:?} as a number")]
    NonNumeric { line: usize, token: String },

    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("face {face}: vertex index {index} out of range for {count} vertices")]
    IndexOutOfRange { face: usize, index: i64, count: usize },

    #[error("face {face} repeats vertex {index}")]
    RepeatedIndex { face: usize, index: usize },

    #[error("face {face} has {sides} sides; only triangles are accepted without triangulation")]
    NonTriangleFace { face: usize, sides: usize },

    #[error("{what}: header declares {declared}, found {found}")]
    CountMismatch { what: &'static str, declared: usize, found: usize },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("{what}: expected length {expected}, got {found}")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },

    #[error("mesh has no {0}")]
    MissingAttribute(&'static str),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("vertex {vertex}: {msg}")]
    DegenerateVertex { vertex: usize, msg: String },

    #[error("face {face} has zero area")]
    DegenerateFace { face: usize },

    #[error("edge ({a}, {b}) is shared by more than two faces")]
    NonManifoldEdge { a: usize, b: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vertex index {index} out of range for {count} vertices")]
    VertexOutOfRange { index: usize, count: usize },

    #[error("{n} vertices exceed the dense eigensolver limit of {limit}; use the Chebyshev path")]
    TooLargeForDense { n: usize, limit: usize },

    #[error("non-finite value in Chebyshev recurrence at term {term}")]
    ChebyshevDiverged { term: usize },

    #[error("non-finite filter response at vertex {vertex}")]
    NonFiniteResponse { vertex: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True when the failure stems from bad input or arguments rather than
    /// a numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::ChebyshevDiverged { .. }
                | Error::NonFiniteResponse { .. }
                | Error::Eigensolver(_)
                | Error::NonFinite { .. }
        )
    }
}
