use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate triangle {triangle}: {reason}")]
    DegenerateTriangle { triangle: usize, reason: String },

    #[error("non-manifold edge ({a}, {b}) shared by {count} triangles")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("triangle {triangle} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { triangle: usize, index: usize, count: usize },

    #[error("vertex {0} is not used by any triangle")]
    UnreferencedVertex(usize),

    #[error("mesh is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("vertex {0} has a non-finite coordinate")]
    NonFiniteVertex(usize),

    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("index space overflow: {0}")]
    Overflow(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("field belongs to mesh {found}, expected mesh {expected}")]
    MeshMismatch { expected: u64, found: u64 },

    #[error("field has {found} values, mesh has {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },

    #[error("domain error at node {node}: value {value} maps to a non-finite result")]
    Domain { node: usize, value: f64 },

    #[error("non-finite value {value} at {location}")]
    NonFinite { location: String, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error(
        "linear solver did not converge: relative residual {residual:e} after {iterations} iterations (tol {tol:e})"
    )]
    SolverDiverged { iterations: usize, residual: f64, tol: f64 },

    #[error("oracle size cap exceeded: {nodes} nodes > {cap}")]
    SizeCap { nodes: usize, cap: usize },

    #[error("singular matrix at pivot column {0}")]
    Singular(usize),

    #[error("timestep condition violated: 2k*sup(phi) = {value} >= 1")]
    TimestepCondition { value: f64 },

    #[error("mesh is not weakly acute: worst angle sum {worst_angle_sum} rad on edge ({a}, {b})")]
    NotWeaklyAcute { a: usize, b: usize, worst_angle_sum: f64 },

    #[error("invariant violated at step {step}: {message}")]
    Invariant { step: usize, message: String },

    #[error("ill-conditioned u-step: motility {value:e} at node {node} is below the conditioning floor")]
    Conditioning { node: usize, value: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
