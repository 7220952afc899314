use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rotation axis is not unit length (norm {norm})")]
    InvalidAxis { norm: f64 },

    #[error("matrix is not a valid rotation: {0}")]
    InvalidRotation(String),

    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate motion: {0}")]
    DegenerateMotion(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid robot model: {0}")]
    InvalidModel(String),

    #[error("joint configuration outside limits: joint {joint} = {value} rad not in [{lower}, {upper}]")]
    JointLimit {
        joint: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("no path between frames {from} and {to}")]
    NoPath { from: String, to: String },

    #[error("frame graph is not a tree: {0}")]
    AmbiguousPath(String),

    #[error("duplicate edge {parent} -> {child}")]
    DuplicateEdge { parent: String, child: String },

    #[error("drill roll is undefined: bend heading is parallel to the surface normal")]
    UndefinedRoll,

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by geometrically or numerically degenerate input,
    /// as opposed to malformed files or I/O failures.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateMatrix(_)
                | Error::InsufficientData { .. }
                | Error::DegenerateMotion(_)
                | Error::DegenerateGeometry(_)
                | Error::UndefinedRoll
        )
    }

    /// Short machine-readable kind name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidAxis { .. } => "invalid_axis",
            Error::InvalidRotation(_) => "invalid_rotation",
            Error::DegenerateMatrix(_) => "degenerate_matrix",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::DegenerateMotion(_) => "degenerate_motion",
            Error::DegenerateGeometry(_) => "degenerate_geometry",
            Error::InvalidModel(_) => "invalid_model",
            Error::JointLimit { .. } => "joint_limit",
            Error::NoPath { .. } => "no_path",
            Error::AmbiguousPath(_) => "ambiguous_path",
            Error::DuplicateEdge { .. } => "duplicate_edge",
            Error::UndefinedRoll => "undefined_roll",
            Error::OutOfRange(_) => "out_of_range",
            Error::InvalidPlan(_) => "invalid_plan",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
