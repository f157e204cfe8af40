//! Pairwise registration.
//!
//! Every routine returns a [`PairRegistration`] whose `aligned` curve is the
//! moving curve composed with `warp`; which argument moves is stated on each
//! function.

mod criteria;
mod dp;
mod landmark;
mod parametric;

use serde::{Deserialize, Serialize};

pub use criteria::{criterion_value, Criterion};
pub use dp::{
    dp_align, dp_solve, dtw_l2, elastic_align, DpOptions, DpSolution, SegmentCost, StepPattern,
};
pub use landmark::{detect_peaks, landmark_register, LandmarkInterp};
pub use parametric::{parametric_register, ParametricFamily, ParametricOptions};

use crate::error::{Error, Result};
use crate::function::{Grid, SampledFunction};
use crate::warp::{Warp, DOMAIN_TOL};

/// What produced a [`PairRegistration`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DtwL2,
    Elastic,
    Landmark,
    Parametric(Criterion),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairRegistration {
    pub warp: Warp,
    /// Moving curve composed with `warp`, sampled on the moving curve's grid.
    pub aligned: SampledFunction,
    /// Minimized loss (non-negative).
    pub cost: f64,
    /// Criterion value in its natural units (e.g. the correlation itself).
    pub value: f64,
    pub method: Method,
    pub converged: bool,
}

/// `f ∘ h` sampled on the grid of `f`, with constant extension outside `f`'s domain.
pub fn compose_function(f: &SampledFunction, h: &Warp) -> SampledFunction {
    let values = f.grid().points().iter().map(|&t| f.eval(h.eval(t))).collect();
    SampledFunction::new(f.grid().clone(), values).expect("finite values")
}

pub(crate) fn common_domain(a: &SampledFunction, b: &SampledFunction) -> Result<(f64, f64)> {
    let (a0, a1) = a.domain();
    let (b0, b1) = b.domain();
    let tol = DOMAIN_TOL * (1.0 + (a1 - a0).abs());
    if (a0 - b0).abs() > tol || (a1 - b1).abs() > tol {
        return Err(Error::DomainMismatch(format!(
            "[{a0}, {a1}] vs [{b0}, {b1}]"
        )));
    }
    Ok((a0, a1))
}

pub(crate) fn normalized(f: &SampledFunction) -> Result<SampledFunction> {
    f.with_domain(0.0, 1.0)
}

pub(crate) fn unit_lattice(n: usize) -> Grid {
    Grid::unit(n)
}
