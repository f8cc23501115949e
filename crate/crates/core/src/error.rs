use std::path::PathBuf;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("point ({x}, {y}) lies outside the mesh")]
    PointOutsideMesh { x: f64, y: f64 },

    #[error("unknown boundary marker `{0}`")]
    UnknownMarker(String),

    #[error("non-positive Jacobian det F = {det}")]
    NonPositiveJacobian { det: f64 },

    #[error("inverted element: cell {cell}, quadrature point {point}, det F = {det}")]
    InvertedElement { cell: usize, point: usize, det: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("constraint residual {residual:e} exceeds bound {bound:e}")]
    ConstraintViolated { residual: f64, bound: f64 },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable name of the variant, used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::InvalidMesh(_) => "InvalidMesh",
            Error::PointOutsideMesh { .. } => "PointOutsideMesh",
            Error::UnknownMarker(_) => "UnknownMarker",
            Error::NonPositiveJacobian { .. } => "NonPositiveJacobian",
            Error::InvertedElement { .. } => "InvertedElement",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::SingularMatrix(_) => "SingularMatrix",
            Error::ResidualTooLarge { .. } => "ResidualTooLarge",
            Error::ConstraintViolated { .. } => "ConstraintViolated",
            Error::Config { .. } => "Config",
            Error::ConfigParse { .. } => "ConfigParse",
            Error::Step { source, .. } => source.kind(),
            Error::Io { .. } => "Io",
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Error {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
