use thiserror::Error;

/// Errors raised while building geometry, local spaces, or global systems.
#[derive(Debug, Error)]
pub enum VemError {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("polygon is not counterclockwise (signed area {0:e})")]
    Orientation(f64),

    #[error("triangulation failed: {0}")]
    Triangulation(String),

    #[error("unsupported quadrature request: {0}")]
    Quadrature(String),

    #[error("unsupported order {order} for {space} (minimum {min})")]
    Order {
        space: &'static str,
        order: usize,
        min: usize,
    },

    #[error("gradient decomposition rank {found} differs from expected {expected}")]
    RankMismatch { expected: usize, found: usize },

    #[error("singular local system while computing {0}")]
    SingularLocal(&'static str),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("mesh file line {line}: {msg}")]
    MeshFormat { line: usize, msg: String },

    #[error("mesh marker {0} has no boundary condition")]
    UnmappedMarker(u32),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular global system: {0}")]
    SingularSystem(String),

    #[error("solver residual {residual:e} exceeds bound {bound:e}")]
    Residual { residual: f64, bound: f64 },

    #[error("unsupported option: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VemError>;
