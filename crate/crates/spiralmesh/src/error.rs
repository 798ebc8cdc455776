//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("non-triangle face with {arity} vertices at face {face}")]
    NonTriangleFace { face: usize, arity: usize },

    #[error("face {face} references vertex {index} but mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: u32,
        vertex_count: usize,
    },

    #[error("degenerate face {face}: repeated vertex index {index}")]
    DegenerateFace { face: usize, index: u32 },

    #[error("inconsistent orientation: directed edge ({from}, {to}) appears in more than one face")]
    InconsistentOrientation { from: u32, to: u32 },

    #[error("non-manifold edge ({a}, {b}): {count} incident faces")]
    NonManifoldEdge { a: u32, b: u32, count: usize },

    #[error("non-manifold vertex {vertex}: incident faces form more than one fan")]
    NonManifoldVertex { vertex: u32 },

    #[error("mesh edge graph is disconnected: vertex {vertex} unreachable")]
    Disconnected { vertex: u32 },

    #[error("vertex index {index} out of range (mesh has {vertex_count} vertices)")]
    VertexOutOfRange { index: u32, vertex_count: usize },

    #[error("isolated vertex {vertex}: empty 1-ring")]
    IsolatedVertex { vertex: u32 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("template mismatch: expected topology hash {expected:#018x}, got {got:#018x}")]
    TemplateMismatch { expected: u64, got: u64 },

    #[error("sample {name} does not share the template topology")]
    TopologyDrift { name: String },

    #[error("decimation stalled at {achieved} vertices (target {target}): no manifold-preserving collapse left")]
    DecimationStalled { achieved: usize, target: usize },

    #[error("requested {k} components but at most {max} are available")]
    RankTooLarge { k: usize, max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("corrupt file {path}: {message}")]
    CorruptFile { path: String, message: String },

    #[error("split {0} is empty")]
    EmptySplit(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 data error, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Numeric(_) => 3,
            _ => 2,
        }
    }
}
