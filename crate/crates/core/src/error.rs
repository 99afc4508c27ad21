use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow evaluating order {order} at z = {z}")]
    Overflow { order: u32, z: f64 },
    #[error("undefined symbol mode (k = {k}, l = {l})")]
    UndefinedMode { k: i64, l: i64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
    #[error("self-intersecting curve: c_gamma estimate {0:.3e} below threshold")]
    SelfIntersection(f64),
    #[error("geometric constraint violated: {0}")]
    Geometry(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("ill-conditioned system: condition estimate {0:.3e}")]
    IllConditioned(f64),
    #[error("singular system")]
    Singular,
    #[error("zero-mean precondition violated: mean {0:.3e}")]
    NonZeroMean(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
