//! Square-root velocity functions and the Fisher–Rao distance.
//!
//! `q = sign(Dx) √|Dx|`. Under this transform the Fisher–Rao distance between
//! functions becomes the plain L² distance between their SRVFs, and warping
//! `x ↦ x ∘ h` acts on `q` by `q ↦ (q ∘ h) √Dh`, which preserves the L² norm.

use crate::error::{Error, Result};
use crate::function::{l2_distance, Grid, Interpolation, SampledFunction};
use crate::warp::{Warp, DOMAIN_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct Srvf {
    q: SampledFunction,
}

impl Srvf {
    pub fn new(q: SampledFunction) -> Self {
        Self { q }
    }

    pub fn grid(&self) -> &Grid {
        self.q.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.q.values()
    }

    pub fn as_function(&self) -> &SampledFunction {
        &self.q
    }

    pub fn into_function(self) -> SampledFunction {
        self.q
    }

    pub fn norm(&self) -> f64 {
        crate::function::l2_norm(&self.q)
    }
}

/// Signed square root with `sign(0) = 0`.
pub fn signed_sqrt(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().sqrt()
    }
}

pub fn srvf_transform(x: &SampledFunction) -> Srvf {
    let d = x.derivative();
    Srvf {
        q: d.map(signed_sqrt).expect("finite derivative"),
    }
}

/// Recover `x` from its SRVF and its left-endpoint value: `x = x0 + ∫ q|q|`.
pub fn srvf_inverse(q: &Srvf, x0: f64) -> SampledFunction {
    let v = q.q.map(|v| v * v.abs()).expect("finite");
    let cum = v.cumulative_integral();
    cum.map(|c| x0 + c).expect("finite")
}

/// `(q ∘ h) √Dh` on the grid of `q`. `h` must map the domain of `q` onto itself.
pub fn group_action(q: &Srvf, h: &Warp) -> Result<Srvf> {
    let (lo, hi) = q.q.domain();
    let (a, b) = h.domain();
    let (c, d) = h.codomain();
    let tol = DOMAIN_TOL * (1.0 + (hi - lo).abs());
    if (a - lo).abs() > tol || (b - hi).abs() > tol || (c - lo).abs() > tol || (d - hi).abs() > tol {
        return Err(Error::DomainMismatch(format!(
            "warp [{a}, {b}] -> [{c}, {d}] does not act on [{lo}, {hi}]"
        )));
    }
    let grid = q.grid();
    let slopes = h.node_slopes(grid);
    // Interpolate q|q| (the velocity, smooth for smooth curves) rather than q,
    // whose square-root cusps at zero crossings interpolate poorly.
    let velocity = q.q.map(|v| v * v.abs())?;
    let values = grid
        .points()
        .iter()
        .zip(&slopes)
        .map(|(&t, &s)| signed_sqrt(velocity.eval(h.eval(t))) * s.max(0.0).sqrt())
        .collect();
    Ok(Srvf {
        q: SampledFunction::new(grid.clone(), values)?,
    })
}

/// `‖SRVF(x1) − SRVF(x2)‖`. `x2` is linearly resampled onto the grid of `x1`
/// when the grids differ.
pub fn fr_distance(x1: &SampledFunction, x2: &SampledFunction) -> Result<f64> {
    let x2 = if x1.grid().same_as(x2.grid()) {
        x2.clone()
    } else {
        let (a1, b1) = x1.domain();
        let (a2, b2) = x2.domain();
        if (a1 - a2).abs() > DOMAIN_TOL || (b1 - b2).abs() > DOMAIN_TOL {
            return Err(Error::DomainMismatch(format!(
                "[{a1}, {b1}] vs [{a2}, {b2}]"
            )));
        }
        x2.resample(x1.grid(), Interpolation::Linear)?
    };
    l2_distance(&srvf_transform(x1).q, &srvf_transform(&x2).q)
}
