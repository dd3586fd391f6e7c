use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("undefined conic section: w must be non-zero")]
    UndefinedConicSection,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid with {n} points is too small for a derivative of order {order}")]
    GridTooSmall { n: usize, order: usize },

    #[error("derivative order {0} not supported (expected 1..=4)")]
    UnsupportedOrder(usize),

    #[error("non-finite value in field `{0}`")]
    NonFinite(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("frame integration drifted: <phi1,phi1> off by {drift:e} (limit {limit:e})")]
    IntegrationDrift { drift: f64, limit: f64 },

    #[error("profile escaped: |k| exceeded {limit:e} at u = {u}")]
    ProfileEscaped { u: f64, limit: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("insufficient smoothness: {0}")]
    InsufficientSmoothness(String),

    #[error("r0 must be positive (got {0})")]
    NonPositiveR0(f64),

    #[error("series depth must be at least 1 (got {0})")]
    InvalidDepth(usize),

    #[error("coefficient index {index} outside computed depth {depth}")]
    IndexOutOfRange { index: i32, depth: usize },

    #[error("empty basis for constant fit")]
    EmptyBasis,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
