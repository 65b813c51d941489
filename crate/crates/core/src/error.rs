use thiserror::Error;

/// Errors raised by mesh, metric, distance and pipeline operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("metric tensor at vertex {vertex} is not positive-definite")]
    NotPositiveDefinite { vertex: usize },

    #[error("lapse at vertex {vertex} is not strictly positive ({value})")]
    NonPositiveLapse { vertex: usize, value: f64 },

    #[error("graph is disconnected: vertex {unreachable} unreachable from vertex {from}")]
    Disconnected { from: usize, unreachable: usize },

    #[error("segment {index} of the path is not causal")]
    NonCausalSegment { index: usize },

    #[error("point sets differ ({left} vs {right} points)")]
    PointSetMismatch { left: usize, right: usize },

    #[error("resource cap exceeded: {what} needs {requested}, cap is {cap}")]
    ResourceCap {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("good set infeasible: excess volume {excess} exceeds target {target} for every delta step")]
    Infeasible { excess: f64, target: f64 },

    #[error("unknown example id `{0}`")]
    UnknownExample(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
