//! Curve registration: separating amplitude from phase variation in
//! functional data.
//!
//! The crate is layered bottom-up:
//!
//! * [`function`]: sampled functions, interpolation, finite differences and
//!   the trapezoidal L² geometry everything else is built on.
//! * [`warp`]: time-warping functions (parametric families, piecewise-linear
//!   warps, log-derivative and square-root-slope representations).
//! * [`srvf`]: the square-root velocity transform, the warp action on it and
//!   the Fisher–Rao distance.
//! * [`register`]: pairwise registration (lattice dynamic programming,
//!   landmarks, parametric search under several criteria).
//! * [`multalign`]: multiple alignment (Procrustes iterations, Karcher mean,
//!   k-mean alignment, registration to principal-component fits).
//! * [`fixtures`]: deterministic synthetic panels with known warps.

pub mod error;
pub mod fixtures;
pub mod function;
pub mod multalign;
mod optimize;
pub mod register;
pub mod srvf;
pub mod warp;

pub use error::{Error, Result};
pub use function::{inner_product, l2_distance, l2_norm, Grid, Interpolation, SampledFunction};
pub use srvf::{fr_distance, group_action, srvf_inverse, srvf_transform, Srvf};
pub use warp::{
    from_log_derivative, from_sqrt_slope, make_warp, LogDerivativeRep, SqrtSlope, ValidateOptions,
    Warp, WarpDiagnostics, WarpFamily,
};

/// Default number of points of the uniform working grid.
pub const DEFAULT_WORKING_GRID: usize = 512;
