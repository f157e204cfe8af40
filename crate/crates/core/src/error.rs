use thiserror::Error;

/// Errors raised by the registration toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("values length {values} does not match grid length {grid}")]
    LengthMismatch { grid: usize, values: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("target point {point} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { point: f64, lo: f64, hi: f64 },
    #[error("functions are sampled on different grids")]
    GridMismatch,
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("square-root slope has squared norm {0}, expected 1")]
    NotUnitNorm(f64),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("warp is not invertible: {0}")]
    NotInvertible(String),
    #[error("no admissible monotone path through the lattice")]
    NoPath,
    #[error("warped domain does not overlap the reference domain")]
    EmptyOverlap,
    #[error("function has zero norm")]
    ZeroNorm,
    #[error("landmarks must be strictly increasing and inside the domain")]
    LandmarkOrder,
    #[error("landmark count mismatch: {src} source vs {dst} target")]
    CountMismatch { src: usize, dst: usize },
    #[error("sample of {curves} curves is too small for {components} components")]
    RankDeficient { curves: usize, components: usize },
    #[error("need at least {needed} curves, got {got}")]
    TooFewCurves { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
