use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point is behind the camera (z = {z})")]
    PointBehindCamera { z: f64 },

    #[error("cost matrix is empty ({rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("cost matrix entry ({row}, {col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("waypoint times must be strictly increasing (index {index})")]
    NonMonotoneWaypoints { index: usize },

    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("insufficient points for {components} mixture components: got {points}")]
    InsufficientPoints { points: usize, components: usize },

    #[error("solver did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("distance out of range: d + b1 = {value}")]
    DistanceOutOfRange { value: f64 },

    #[error("empty pixel patch")]
    EmptyPatch,

    #[error("tracks have no overlapping frames")]
    NoOverlap,

    #[error("invalid overlap: K*delta = {duration} s")]
    InvalidOverlap { duration: f64 },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("no temperature readings")]
    NoReadings,

    #[error("feature store has a single class; at least two are required")]
    SingleClass,

    #[error("feature store is empty")]
    EmptyStore,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("incomplete feature window: {0}")]
    IncompleteWindow(String),

    #[error("no feature vectors to score")]
    NoFeatures,

    #[error("no matched frames between estimates and ground truth")]
    NoMatchedFrames,

    #[error("linear system is not positive definite")]
    NotPositiveDefinite,

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PointBehindCamera { .. } => "point_behind_camera",
            Error::EmptyMatrix { .. } => "empty_matrix",
            Error::NonFiniteCost { .. } => "non_finite_cost",
            Error::InvalidConfig(_) => "invalid_config",
            Error::NonMonotoneWaypoints { .. } => "non_monotone_waypoints",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::InsufficientPoints { .. } => "insufficient_points",
            Error::NonConvergence { .. } => "non_convergence",
            Error::DistanceOutOfRange { .. } => "distance_out_of_range",
            Error::EmptyPatch => "empty_patch",
            Error::NoOverlap => "no_overlap",
            Error::InvalidOverlap { .. } => "invalid_overlap",
            Error::RankDeficient => "rank_deficient",
            Error::NoReadings => "no_readings",
            Error::SingleClass => "single_class",
            Error::EmptyStore => "empty_store",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::IncompleteWindow(_) => "incomplete_window",
            Error::NoFeatures => "no_features",
            Error::NoMatchedFrames => "no_matched_frames",
            Error::NotPositiveDefinite => "not_positive_definite",
            Error::SchemaVersion { .. } => "schema_version",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
