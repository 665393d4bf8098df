use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("packet too wide: mass {0:.3e} lies outside the grid")]
    PacketTooWide(f64),
    #[error("dense oracle size cap exceeded: {0} > 4096 nodes")]
    SizeCap(usize),
    #[error("time-dependent part requires a time argument (and only then)")]
    TimeArgument,
    #[error("Kato fit infeasible: {0}")]
    FitInfeasible(String),
    #[error("decay fit needs at least 6 usable points, got {0}")]
    InsufficientPoints(usize),
    #[error("non-finite amplitude at t={0}")]
    NonFinite(f64),
    #[error("resolvent solve failed at z={0}")]
    Resolvent(num_complex::Complex64),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
