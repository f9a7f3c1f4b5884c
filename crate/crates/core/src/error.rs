use thiserror::Error;

#[derive(Debug, Error)]
pub enum GermLabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("vertex at {0:?} lies outside the unit disk")]
    OutsideDisk([f64; 2]),
    #[error("metric is degenerate at vertex {vertex}: {detail}")]
    SingularMetric { vertex: usize, detail: String },
    #[error("fields live on different meshes ({left} vs {right} vertices)")]
    MeshMismatch { left: usize, right: usize },
    #[error("iterative solve failed to converge: {0}")]
    Convergence(String),
    #[error("linearization is singular: {0}")]
    SingularLinearization(String),
    #[error("eigensolve failed: {0}")]
    Eigensolve(String),
    #[error("pointwise blow-up at vertex {vertex} near t = {time:.6}")]
    BlowUp { vertex: usize, time: f64 },
    #[error("step size underflow at t = {0:.6}")]
    StepUnderflow(f64),
    #[error("phase point (x0, y0) = ({0}, {1}) is not realizable by a symmetric 2x2 matrix")]
    Unrealizable(f64, f64),
    #[error("invalid transport path: {0}")]
    InvalidPath(String),
    #[error("germ residuals exceed tolerance: {0}")]
    GermRejected(String),
    #[error("connection is too close to reducible (margin {0:.3e})")]
    NearReducible(f64),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("schema violation at {path}: {detail}")]
    Schema { path: String, detail: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GermLabError>;
