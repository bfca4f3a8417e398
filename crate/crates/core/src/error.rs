use thiserror::Error;

/// Errors produced by the registration pipeline and simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("empty geometry: {0}")]
    EmptyGeometry(&'static str),

    #[error("point ({x}, {y}) is outside the {width}x{height} grid")]
    OutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },

    #[error("shape mismatch: {a_w}x{a_h} vs {b_w}x{b_h}")]
    ShapeMismatch {
        a_w: usize,
        a_h: usize,
        b_w: usize,
        b_h: usize,
    },

    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("floor plan schema error{}: {message}", room.as_ref().map(|r| format!(" in room `{r}`")).unwrap_or_default())]
    Schema {
        room: Option<String>,
        message: String,
    },

    #[error("{combinable} combinable rooms exceed the variant limit of {limit}")]
    VariantLimit { combinable: usize, limit: usize },

    #[error("unknown room `{0}`")]
    UnknownRoom(String),

    #[error("no occupied structure left after preprocessing")]
    EmptyStructure,

    #[error("no floor-plan candidate overlaps the LiDAR mask")]
    NoMatch,

    #[error("iou_a needs at least one room IoU")]
    EmptyIouList,

    #[error("pose ({x:.2}, {y:.2}) is not in free space")]
    InvalidPose { x: f64, y: f64 },

    #[error("path endpoint ({x}, {y}) is blocked or outside the map")]
    InvalidEndpoint { x: i64, y: i64 },

    #[error("localization found no structure to match")]
    LocalizationFailed,

    #[error("world file error: {0}")]
    World(String),

    #[error("PGM error: {0}")]
    Pgm(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn schema(room: Option<&str>, message: impl Into<String>) -> Self {
        Error::Schema {
            room: room.map(str::to_owned),
            message: message.into(),
        }
    }
}
