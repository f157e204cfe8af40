//! Time-warping functions and their algebra.
//!
//! A [`Warp`] is a monotone map from a domain interval onto a codomain
//! interval. Parametric families evaluate in closed form; everything else is
//! piecewise linear, which is closed under composition and inversion and is
//! what the lattice solver produces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{cumulative_trapezoid, finite_difference, Grid, SampledFunction, GRID_TOL};
use crate::DEFAULT_WORKING_GRID;

/// Tolerance for matching interval endpoints.
pub const DOMAIN_TOL: f64 = 1e-9;

/// Default slope floor for piecewise-linear warps.
pub const DEFAULT_MIN_SLOPE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarpFamily {
    Scale,
    Shift,
    Affine,
    OneParam,
    OneParamInverse,
    PiecewiseLinear,
    FlatAllowed,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WarpRep {
    /// `h(t) = a t`
    Scale { a: f64 },
    /// `h(t) = t + c`
    Shift { c: f64 },
    /// `h(t) = c + a t`
    Affine { c: f64, a: f64 },
    /// `h(t) = lo + T (e^{β(t-lo)} - 1) / (e^{βT} - 1)` with `T = hi - lo`.
    OneParam { beta: f64 },
    /// Closed-form inverse of [`WarpRep::OneParam`] with the same `β`.
    OneParamInverse { beta: f64 },
    PiecewiseLinear { grid: Grid, values: Vec<f64> },
    /// Piecewise linear with zero-slope plateaus permitted.
    FlatAllowed { grid: Grid, values: Vec<f64> },
}

/// A time warp `h: [a, b] -> [c, d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WarpRecord", into = "WarpRecord")]
pub struct Warp {
    domain: (f64, f64),
    codomain: (f64, f64),
    rep: WarpRep,
}

fn check_interval(domain: (f64, f64)) -> Result<()> {
    if !(domain.0.is_finite() && domain.1.is_finite() && domain.1 > domain.0) {
        return Err(Error::BadParam(format!(
            "interval [{}, {}] is empty or not finite",
            domain.0, domain.1
        )));
    }
    Ok(())
}

/// Build a parametric warp from its family parameters.
///
/// * `Scale`: `[a]`, `a > 0`
/// * `Shift`: `[c]`
/// * `Affine`: `[c, a]`, `a > 0`
/// * `OneParam`: `[β]`; `β = 0` is the identity
pub fn make_warp(family: WarpFamily, params: &[f64], domain: (f64, f64)) -> Result<Warp> {
    check_interval(domain)?;
    let need = |n: usize| -> Result<()> {
        if params.len() != n || params.iter().any(|p| !p.is_finite()) {
            Err(Error::BadParam(format!(
                "{family:?} expects {n} finite parameter(s), got {params:?}"
            )))
        } else {
            Ok(())
        }
    };
    let rep = match family {
        WarpFamily::Scale => {
            need(1)?;
            if params[0] <= 0.0 {
                return Err(Error::BadParam(format!("scale must be positive, got {}", params[0])));
            }
            WarpRep::Scale { a: params[0] }
        }
        WarpFamily::Shift => {
            need(1)?;
            WarpRep::Shift { c: params[0] }
        }
        WarpFamily::Affine => {
            need(2)?;
            if params[1] <= 0.0 {
                return Err(Error::BadParam(format!("affine slope must be positive, got {}", params[1])));
            }
            WarpRep::Affine { c: params[0], a: params[1] }
        }
        WarpFamily::OneParam => {
            need(1)?;
            WarpRep::OneParam { beta: params[0] }
        }
        WarpFamily::OneParamInverse => {
            need(1)?;
            WarpRep::OneParamInverse { beta: params[0] }
        }
        WarpFamily::PiecewiseLinear | WarpFamily::FlatAllowed => {
            return Err(Error::BadParam(
                "piecewise-linear warps are built from grid values, not parameters".into(),
            ))
        }
    };
    Ok(Warp::parametric(rep, domain))
}

impl Warp {
    fn parametric(rep: WarpRep, domain: (f64, f64)) -> Warp {
        let mut w = Warp {
            domain,
            codomain: domain,
            rep,
        };
        w.codomain = (w.eval(domain.0), w.eval(domain.1));
        if matches!(w.rep, WarpRep::OneParam { .. } | WarpRep::OneParamInverse { .. }) {
            w.codomain = domain;
        }
        w
    }

    pub fn identity(domain: (f64, f64)) -> Result<Warp> {
        make_warp(WarpFamily::Affine, &[0.0, 1.0], domain)
    }

    /// Piecewise-linear warp through `(grid[i], values[i])`. Monotonicity is
    /// not enforced here; see [`Warp::validate`].
    pub fn piecewise_linear(grid: Grid, values: Vec<f64>) -> Result<Warp> {
        Self::sampled(grid, values, false)
    }

    pub fn flat_allowed(grid: Grid, values: Vec<f64>) -> Result<Warp> {
        Self::sampled(grid, values, true)
    }

    fn sampled(grid: Grid, values: Vec<f64>, flat: bool) -> Result<Warp> {
        // Validates lengths and finiteness.
        let f = SampledFunction::new(grid, values)?;
        let grid = f.grid().clone();
        let values = f.into_values();
        let domain = (grid.lo(), grid.hi());
        let codomain = (values[0], values[values.len() - 1]);
        let rep = if flat {
            WarpRep::FlatAllowed { grid, values }
        } else {
            WarpRep::PiecewiseLinear { grid, values }
        };
        Ok(Warp { domain, codomain, rep })
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn codomain(&self) -> (f64, f64) {
        self.codomain
    }

    pub fn rep(&self) -> &WarpRep {
        &self.rep
    }

    pub fn family(&self) -> WarpFamily {
        match self.rep {
            WarpRep::Scale { .. } => WarpFamily::Scale,
            WarpRep::Shift { .. } => WarpFamily::Shift,
            WarpRep::Affine { .. } => WarpFamily::Affine,
            WarpRep::OneParam { .. } => WarpFamily::OneParam,
            WarpRep::OneParamInverse { .. } => WarpFamily::OneParamInverse,
            WarpRep::PiecewiseLinear { .. } => WarpFamily::PiecewiseLinear,
            WarpRep::FlatAllowed { .. } => WarpFamily::FlatAllowed,
        }
    }

    pub fn is_parametric(&self) -> bool {
        !matches!(
            self.rep,
            WarpRep::PiecewiseLinear { .. } | WarpRep::FlatAllowed { .. }
        )
    }

    /// Breakpoints and values of a sampled warp.
    pub fn nodes(&self) -> Option<(&Grid, &[f64])> {
        match &self.rep {
            WarpRep::PiecewiseLinear { grid, values } | WarpRep::FlatAllowed { grid, values } => {
                Some((grid, values))
            }
            _ => None,
        }
    }

    fn is_identity(&self) -> bool {
        match self.rep {
            WarpRep::Affine { c, a } => c == 0.0 && a == 1.0,
            WarpRep::Shift { c } => c == 0.0,
            WarpRep::Scale { a } => a == 1.0,
            WarpRep::OneParam { beta } | WarpRep::OneParamInverse { beta } => beta == 0.0,
            _ => false,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.domain;
        let span = hi - lo;
        match &self.rep {
            WarpRep::Scale { a } => a * t,
            WarpRep::Shift { c } => t + c,
            WarpRep::Affine { c, a } => c + a * t,
            WarpRep::OneParam { beta } => {
                if *beta == 0.0 {
                    t
                } else {
                    lo + span * (beta * (t - lo)).exp_m1() / (beta * span).exp_m1()
                }
            }
            WarpRep::OneParamInverse { beta } => {
                if *beta == 0.0 {
                    t
                } else {
                    let k = (beta * span).exp_m1() / span;
                    lo + ((t - lo) * k).ln_1p() / beta
                }
            }
            WarpRep::PiecewiseLinear { grid, values } | WarpRep::FlatAllowed { grid, values } => {
                interp(grid, values, t)
            }
        }
    }

    /// Derivative of the warp; for sampled warps the slope of the segment holding `t`.
    pub fn slope(&self, t: f64) -> f64 {
        let (lo, hi) = self.domain;
        let span = hi - lo;
        match &self.rep {
            WarpRep::Scale { a } => *a,
            WarpRep::Shift { .. } => 1.0,
            WarpRep::Affine { a, .. } => *a,
            WarpRep::OneParam { beta } => {
                if *beta == 0.0 {
                    1.0
                } else {
                    beta * span * (beta * (t - lo)).exp() / (beta * span).exp_m1()
                }
            }
            WarpRep::OneParamInverse { beta } => {
                if *beta == 0.0 {
                    1.0
                } else {
                    let k = (beta * span).exp_m1() / span;
                    k / (beta * (1.0 + (t - lo) * k))
                }
            }
            WarpRep::PiecewiseLinear { grid, values } | WarpRep::FlatAllowed { grid, values } => {
                let i = grid.segment(t);
                let p = grid.points();
                (values[i + 1] - values[i]) / (p[i + 1] - p[i])
            }
        }
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.points().iter().map(|&t| self.eval(t)).collect()
    }

    /// Slope estimates at the nodes of `grid`: analytic for parametric warps,
    /// second-order finite differences otherwise.
    pub fn node_slopes(&self, grid: &Grid) -> Vec<f64> {
        if self.is_parametric() {
            return grid.points().iter().map(|&t| self.slope(t)).collect();
        }
        let values = self.sample(grid);
        let p = grid.points();
        let mut d = finite_difference(p, &values);
        let n = p.len();
        // One-sided formulas can overshoot at a kink next to the boundary.
        let first = (values[1] - values[0]) / (p[1] - p[0]);
        let last = (values[n - 1] - values[n - 2]) / (p[n - 1] - p[n - 2]);
        if d[0] <= 0.0 {
            d[0] = first;
        }
        if d[n - 1] <= 0.0 {
            d[n - 1] = last;
        }
        d
    }

    /// Grid used when this warp must be sampled: its own breakpoints or a
    /// uniform working grid of `n` points over the domain.
    pub fn natural_grid(&self, n: usize) -> Grid {
        match self.nodes() {
            Some((g, _)) => g.clone(),
            None => Grid::uniform(self.domain.0, self.domain.1, n.max(2)).expect("valid domain"),
        }
    }

    /// Lower onto `grid` as a piecewise-linear warp.
    pub fn lower(&self, grid: &Grid) -> Result<Warp> {
        if grid.lo() < self.domain.0 - DOMAIN_TOL || grid.hi() > self.domain.1 + DOMAIN_TOL {
            return Err(Error::DomainMismatch(format!(
                "grid [{}, {}] exceeds warp domain [{}, {}]",
                grid.lo(),
                grid.hi(),
                self.domain.0,
                self.domain.1
            )));
        }
        let values = self.sample(grid);
        let flat = matches!(self.rep, WarpRep::FlatAllowed { .. });
        Self::sampled(grid.clone(), values, flat)
    }

    /// Clip slopes below `min_slope` and rescale the excess so both boundary
    /// values are preserved.
    pub fn project_min_slope(&self, min_slope: f64) -> Result<Warp> {
        let lowered = if self.is_parametric() {
            self.lower(&self.natural_grid(DEFAULT_WORKING_GRID))?
        } else {
            self.clone()
        };
        let (grid, values) = lowered.nodes().expect("lowered");
        let p = grid.points();
        let rise = values[values.len() - 1] - values[0];
        let len = grid.span();
        if rise < min_slope * len {
            return Err(Error::BadParam(format!(
                "total rise {rise} cannot accommodate slope floor {min_slope}"
            )));
        }
        let slopes: Vec<f64> = p
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| ((v[1] - v[0]) / (t[1] - t[0])).max(min_slope))
            .collect();
        let excess: f64 = slopes
            .iter()
            .zip(p.windows(2))
            .map(|(s, t)| (s - min_slope) * (t[1] - t[0]))
            .sum();
        let target = rise - min_slope * len;
        let factor = if excess > 0.0 { target / excess } else { 0.0 };
        let mut out = Vec::with_capacity(values.len());
        let mut acc = values[0];
        out.push(acc);
        for (s, t) in slopes.iter().zip(p.windows(2)) {
            acc += (min_slope + (s - min_slope) * factor) * (t[1] - t[0]);
            out.push(acc);
        }
        let n = out.len();
        out[n - 1] = values[n - 1];
        Self::sampled(grid.clone(), out, false)
    }

    /// `self ∘ inner`, i.e. `t ↦ self(inner(t))`.
    pub fn compose(&self, inner: &Warp) -> Result<Warp> {
        let (c, d) = inner.codomain;
        let (a, b) = self.domain;
        if (c - a).abs() > DOMAIN_TOL || (d - b).abs() > DOMAIN_TOL {
            return Err(Error::DomainMismatch(format!(
                "inner codomain [{c}, {d}] does not match outer domain [{a}, {b}]"
            )));
        }
        if self.is_identity() {
            return Ok(inner.clone());
        }
        if inner.is_identity() {
            let mut out = self.clone();
            out.domain = inner.domain;
            return Ok(out);
        }
        if let (Some((c1, a1)), Some((c2, a2))) = (self.affine_coeffs(), inner.affine_coeffs()) {
            return Ok(Warp::parametric(
                WarpRep::Affine {
                    c: c1 + a1 * c2,
                    a: a1 * a2,
                },
                inner.domain,
            ));
        }
        if let (WarpRep::OneParam { beta: b1 }, WarpRep::OneParamInverse { beta: b2 })
        | (WarpRep::OneParamInverse { beta: b1 }, WarpRep::OneParam { beta: b2 }) =
            (&self.rep, &inner.rep)
        {
            if b1 == b2 && self.domain == inner.domain {
                return Warp::identity(inner.domain);
            }
        }

        let flat = matches!(self.rep, WarpRep::FlatAllowed { .. })
            || matches!(inner.rep, WarpRep::FlatAllowed { .. });
        let mut knots: Vec<f64> = inner
            .natural_grid(DEFAULT_WORKING_GRID)
            .points()
            .to_vec();
        if let Some((g, _)) = self.nodes() {
            if let Ok(inv) = inner.invert() {
                let (lo, hi) = inner.domain;
                knots.extend(
                    g.points()
                        .iter()
                        .map(|&s| inv.eval(s))
                        .filter(|&t| t > lo && t < hi),
                );
            }
        }
        let grid = dedup_grid(knots)?;
        let values: Vec<f64> = grid
            .points()
            .iter()
            .map(|&t| self.eval(inner.eval(t)))
            .collect();
        let mut out = Self::sampled(grid, values, flat)?;
        out.codomain = (self.eval(inner.eval(inner.domain.0)), self.eval(inner.eval(inner.domain.1)));
        Ok(out)
    }

    fn affine_coeffs(&self) -> Option<(f64, f64)> {
        match self.rep {
            WarpRep::Scale { a } => Some((0.0, a)),
            WarpRep::Shift { c } => Some((c, 1.0)),
            WarpRep::Affine { c, a } => Some((c, a)),
            _ => None,
        }
    }

    /// Inverse warp `h⁻¹: [c, d] -> [a, b]`.
    pub fn invert(&self) -> Result<Warp> {
        let domain = self.codomain;
        match &self.rep {
            WarpRep::FlatAllowed { .. } => Err(Error::NotInvertible(
                "warps with flat regions have no inverse".into(),
            )),
            WarpRep::Scale { a } => Ok(Warp::parametric(WarpRep::Scale { a: 1.0 / a }, domain)),
            WarpRep::Shift { c } => Ok(Warp::parametric(WarpRep::Shift { c: -c }, domain)),
            WarpRep::Affine { c, a } => Ok(Warp::parametric(
                WarpRep::Affine {
                    c: -c / a,
                    a: 1.0 / a,
                },
                domain,
            )),
            WarpRep::OneParam { beta } => Ok(Warp::parametric(
                WarpRep::OneParamInverse { beta: *beta },
                domain,
            )),
            WarpRep::OneParamInverse { beta } => {
                Ok(Warp::parametric(WarpRep::OneParam { beta: *beta }, domain))
            }
            WarpRep::PiecewiseLinear { grid, values } => {
                let swapped = Grid::new(values.clone()).map_err(|_| {
                    Error::NotInvertible("piecewise-linear warp is not strictly increasing".into())
                })?;
                let mut out = Self::sampled(swapped, grid.points().to_vec(), false)?;
                out.codomain = self.domain;
                Ok(out)
            }
        }
    }

    /// Sup-norm distance from the identity over `n` uniform points (plus breakpoints).
    pub fn deviation_from_identity(&self, n: usize) -> f64 {
        let grid = Grid::uniform(self.domain.0, self.domain.1, n.max(2)).expect("valid domain");
        let mut dev = grid
            .points()
            .iter()
            .map(|&t| (self.eval(t) - t).abs())
            .fold(0.0, f64::max);
        if let Some((g, v)) = self.nodes() {
            dev = g
                .points()
                .iter()
                .zip(v)
                .map(|(t, v)| (v - t).abs())
                .fold(dev, f64::max);
        }
        dev
    }

    /// Sup-norm distance to another warp on the same domain.
    pub fn sup_distance(&self, other: &Warp, n: usize) -> f64 {
        let grid = Grid::uniform(self.domain.0, self.domain.1, n.max(2)).expect("valid domain");
        let mut pts: Vec<f64> = grid.points().to_vec();
        for w in [self, other] {
            if let Some((g, _)) = w.nodes() {
                pts.extend_from_slice(g.points());
            }
        }
        pts.iter()
            .map(|&t| (self.eval(t) - other.eval(t)).abs())
            .fold(0.0, f64::max)
    }

    /// Conjugate a sampled warp of `[lo0, hi0]` onto itself to one of
    /// `[lo, hi]` onto itself (unit conversion for outputs).
    pub fn rescaled(&self, lo: f64, hi: f64) -> Result<Warp> {
        let lowered = if self.is_parametric() {
            self.lower(&self.natural_grid(DEFAULT_WORKING_GRID))?
        } else {
            self.clone()
        };
        let (grid, values) = lowered.nodes().expect("lowered");
        let (a, b) = self.domain;
        let (c, d) = self.codomain;
        let new_grid = grid.rescaled(lo, hi)?;
        let n = values.len();
        let mut new_values: Vec<f64> = values
            .iter()
            .map(|&v| lo + (v - c) / (d - c) * (hi - lo))
            .collect();
        if (a - c).abs() <= DOMAIN_TOL && (b - d).abs() <= DOMAIN_TOL {
            new_values[0] = lo;
            new_values[n - 1] = hi;
        }
        Self::sampled(
            new_grid,
            new_values,
            matches!(self.rep, WarpRep::FlatAllowed { .. }),
        )
    }

    pub fn validate(&self, opts: &ValidateOptions) -> WarpDiagnostics {
        let (grid, values) = match self.nodes() {
            Some((g, v)) => (g.clone(), v.to_vec()),
            None => {
                let g = self.natural_grid(DEFAULT_WORKING_GRID);
                let v = self.sample(&g);
                (g, v)
            }
        };
        let p = grid.points();
        let flat_rep = matches!(self.rep, WarpRep::FlatAllowed { .. });
        let mut min_slope = f64::INFINITY;
        let mut violations = Vec::new();
        let mut flat_regions: Vec<(f64, f64)> = Vec::new();
        let mut check = |t0: f64, t1: f64, s: f64| {
            min_slope = min_slope.min(s);
            if s >= opts.min_slope - 1e-12 {
                return;
            }
            if s >= -1e-12 && flat_rep && opts.allow_flat {
                match flat_regions.last_mut() {
                    Some(last) if (last.1 - t0).abs() <= GRID_TOL => last.1 = t1,
                    _ => flat_regions.push((t0, t1)),
                }
            } else {
                violations.push(SlopeViolation { t0, t1, slope: s });
            }
        };
        if self.is_parametric() {
            for (i, &t) in p.iter().enumerate() {
                let t1 = if i + 1 < p.len() { p[i + 1] } else { t };
                check(t, t1, self.slope(t));
            }
        } else {
            for i in 0..p.len() - 1 {
                check(p[i], p[i + 1], (values[i + 1] - values[i]) / (p[i + 1] - p[i]));
            }
        }
        let (c, d) = opts.expected_codomain.unwrap_or(self.codomain);
        let start_residual = self.eval(self.domain.0) - c;
        let end_residual = self.eval(self.domain.1) - d;
        let anchored = start_residual.abs() <= opts.boundary_tol && end_residual.abs() <= opts.boundary_tol;
        WarpDiagnostics {
            pass: violations.is_empty() && anchored,
            min_slope,
            start_residual,
            end_residual,
            violations,
            flat_regions,
        }
    }

    /// Square-root slope of the warp normalized to `[0, 1] -> [0, 1]`,
    /// sampled on its natural grid (breakpoints or a uniform working grid).
    pub fn to_sqrt_slope(&self) -> Result<SqrtSlope> {
        self.to_sqrt_slope_on(&self.natural_grid(DEFAULT_WORKING_GRID))
    }

    pub fn to_sqrt_slope_on(&self, grid: &Grid) -> Result<SqrtSlope> {
        if matches!(self.rep, WarpRep::FlatAllowed { .. }) {
            return Err(Error::NotInvertible(
                "square-root slopes are defined for strictly increasing warps".into(),
            ));
        }
        let (a, b) = self.domain;
        let (c, d) = self.codomain;
        if !(d > c) {
            return Err(Error::NotInvertible("warp has an empty codomain".into()));
        }
        let factor = (b - a) / (d - c);
        let slopes = self.node_slopes(grid);
        if let Some(i) = slopes.iter().position(|&s| s <= 0.0) {
            return Err(Error::NotInvertible(format!(
                "non-positive slope at t = {}",
                grid.points()[i]
            )));
        }
        let unit = grid.rescaled(0.0, 1.0)?;
        let psi: Vec<f64> = slopes.iter().map(|s| (s * factor).sqrt()).collect();
        SqrtSlope::new(SampledFunction::new(unit, psi)?)?.normalized()
    }

    /// Log-derivative representation `W = log Dh - log c1`, `C0 = h(a)`,
    /// sampled on the warp's natural grid.
    pub fn to_log_derivative(&self, c1: f64) -> Result<LogDerivativeRep> {
        if !(c1 > 0.0) {
            return Err(Error::BadParam(format!("C1 must be positive, got {c1}")));
        }
        let grid = self.natural_grid(DEFAULT_WORKING_GRID);
        let slopes = self.node_slopes(&grid);
        if let Some(i) = slopes.iter().position(|&s| s <= 0.0) {
            return Err(Error::NotInvertible(format!(
                "non-positive slope at t = {}",
                grid.points()[i]
            )));
        }
        let w: Vec<f64> = slopes.iter().map(|s| s.ln() - c1.ln()).collect();
        LogDerivativeRep::new(SampledFunction::new(grid, w)?, self.eval(self.domain.0), c1)
    }
}

fn interp(grid: &Grid, values: &[f64], t: f64) -> f64 {
    let p = grid.points();
    let n = p.len();
    if t <= p[0] {
        return values[0];
    }
    if t >= p[n - 1] {
        return values[n - 1];
    }
    let i = grid.segment(t);
    let w = (t - p[i]) / (p[i + 1] - p[i]);
    values[i] * (1.0 - w) + values[i + 1] * w
}

fn dedup_grid(mut pts: Vec<f64>) -> Result<Grid> {
    pts.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&last) if p - last <= GRID_TOL => {}
            _ => out.push(p),
        }
    }
    Grid::new(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidateOptions {
    pub min_slope: f64,
    pub allow_flat: bool,
    pub boundary_tol: f64,
    /// Codomain the warp must hit at its endpoints; defaults to its own.
    pub expected_codomain: Option<(f64, f64)>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            min_slope: DEFAULT_MIN_SLOPE,
            allow_flat: false,
            boundary_tol: DOMAIN_TOL,
            expected_codomain: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeViolation {
    pub t0: f64,
    pub t1: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WarpDiagnostics {
    pub pass: bool,
    pub min_slope: f64,
    pub start_residual: f64,
    pub end_residual: f64,
    pub violations: Vec<SlopeViolation>,
    pub flat_regions: Vec<(f64, f64)>,
}

/// `ψ = √(Dh)` for a warp of `[0, 1]` onto itself; a point on the unit sphere of L².
#[derive(Clone, Debug, PartialEq)]
pub struct SqrtSlope {
    psi: SampledFunction,
}

/// Tolerance on `∫ψ² = 1` accepted by [`from_sqrt_slope`].
pub const UNIT_NORM_TOL: f64 = 1e-4;

impl SqrtSlope {
    pub fn new(psi: SampledFunction) -> Result<Self> {
        let (lo, hi) = psi.domain();
        if lo.abs() > DOMAIN_TOL || (hi - 1.0).abs() > DOMAIN_TOL {
            return Err(Error::DomainMismatch(format!(
                "square-root slopes live on [0, 1], got [{lo}, {hi}]"
            )));
        }
        if psi.values().iter().any(|&v| v < 0.0) {
            return Err(Error::BadParam("square-root slope must be non-negative".into()));
        }
        Ok(Self { psi })
    }

    pub fn psi(&self) -> &SampledFunction {
        &self.psi
    }

    pub fn norm_squared(&self) -> f64 {
        let sq: Vec<f64> = self.psi.values().iter().map(|v| v * v).collect();
        crate::function::trapezoid(self.psi.grid().points(), &sq)
    }

    /// Radial projection back onto the unit sphere.
    pub fn normalized(&self) -> Result<SqrtSlope> {
        let n2 = self.norm_squared();
        if !(n2 > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            psi: self.psi.scale(1.0 / n2.sqrt()),
        })
    }

    /// Chordal mean: average on `grid`, then project to the sphere.
    pub fn chordal_mean(items: &[SqrtSlope], grid: &Grid) -> Result<SqrtSlope> {
        let resampled = items
            .iter()
            .map(|s| s.psi.resample(grid, crate::function::Interpolation::Linear))
            .collect::<Result<Vec<_>>>()?;
        Self::new(crate::function::mean_function(&resampled)?)?.normalized()
    }
}

/// Rebuild a warp from its square-root slope: `h(t) = start + ∫₀ᵗ ψ²`.
pub fn from_sqrt_slope(psi: &SqrtSlope, start: f64) -> Result<Warp> {
    let n2 = psi.norm_squared();
    if (n2 - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NotUnitNorm(n2));
    }
    let grid = psi.psi.grid();
    let sq: Vec<f64> = psi.psi.values().iter().map(|v| v * v).collect();
    let cum = cumulative_trapezoid(grid.points(), &sq);
    let total = cum[cum.len() - 1];
    let mut values: Vec<f64> = cum.iter().map(|c| start + c / total).collect();
    let n = values.len();
    values[n - 1] = start + 1.0;
    let flat = values.windows(2).any(|w| w[1] <= w[0]);
    Warp::sampled(grid.clone(), values, flat)
}

/// `h(t) = C0 + C1 ∫ exp W`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogDerivativeRep {
    pub w: SampledFunction,
    pub c0: f64,
    pub c1: f64,
}

impl LogDerivativeRep {
    pub fn new(w: SampledFunction, c0: f64, c1: f64) -> Result<Self> {
        if !(c1 > 0.0) || !c1.is_finite() || !c0.is_finite() {
            return Err(Error::BadParam(format!("need finite C0 and C1 > 0, got {c0}, {c1}")));
        }
        Ok(Self { w, c0, c1 })
    }

    /// Choose `C1` so the warp ends at `end`.
    pub fn anchored(w: SampledFunction, c0: f64, end: f64) -> Result<Self> {
        let total = w.map(f64::exp)?.integral();
        Self::new(w, c0, (end - c0) / total)
    }
}

pub fn from_log_derivative(rep: &LogDerivativeRep) -> Result<Warp> {
    let e = rep.w.map(f64::exp)?;
    let cum = e.cumulative_integral();
    let values = cum.values().iter().map(|v| rep.c0 + rep.c1 * v).collect();
    Warp::piecewise_linear(rep.w.grid().clone(), values)
}

#[derive(Serialize, Deserialize)]
struct WarpRecord {
    family: WarpFamily,
    #[serde(default)]
    params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    domain: [f64; 2],
}

impl From<Warp> for WarpRecord {
    fn from(w: Warp) -> Self {
        let domain = [w.domain.0, w.domain.1];
        let family = w.family();
        let (params, grid, values) = match w.rep {
            WarpRep::Scale { a } => (vec![a], None, None),
            WarpRep::Shift { c } => (vec![c], None, None),
            WarpRep::Affine { c, a } => (vec![c, a], None, None),
            WarpRep::OneParam { beta } | WarpRep::OneParamInverse { beta } => (vec![beta], None, None),
            WarpRep::PiecewiseLinear { grid, values } | WarpRep::FlatAllowed { grid, values } => {
                (vec![], Some(grid.points().to_vec()), Some(values))
            }
        };
        WarpRecord {
            family,
            params,
            grid,
            values,
            domain,
        }
    }
}

impl TryFrom<WarpRecord> for Warp {
    type Error = Error;

    fn try_from(r: WarpRecord) -> Result<Self> {
        match r.family {
            WarpFamily::PiecewiseLinear | WarpFamily::FlatAllowed => {
                let grid = Grid::new(r.grid.ok_or_else(|| Error::BadParam("missing grid".into()))?)?;
                let values = r.values.ok_or_else(|| Error::BadParam("missing values".into()))?;
                Warp::sampled(grid, values, r.family == WarpFamily::FlatAllowed)
            }
            f => make_warp(f, &r.params, (r.domain[0], r.domain[1])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> (f64, f64) {
        (0.0, 1.0)
    }

    #[test]
    fn one_param_limits_and_values() {
        let h = make_warp(WarpFamily::OneParam, &[1e-12], unit()).unwrap();
        for &t in Grid::unit(101).points() {
            assert!((h.eval(t) - t).abs() < 1e-6);
        }
        let h = make_warp(WarpFamily::OneParam, &[1.0], unit()).unwrap();
        let expected = (0.5f64.exp() - 1.0) / (1f64.exp() - 1.0);
        assert!((h.eval(0.5) - expected).abs() < 1e-14);
        assert!((h.eval(0.5) - 0.37754).abs() < 1e-5);
        assert_eq!(make_warp(WarpFamily::OneParam, &[0.0], unit()).unwrap().eval(0.3), 0.3);
    }

    #[test]
    fn affine_and_bad_params() {
        let h = make_warp(WarpFamily::Affine, &[2.0, 3.0], unit()).unwrap();
        assert_eq!((h.eval(0.0), h.eval(1.0), h.eval(0.5)), (2.0, 5.0, 3.5));
        assert_eq!(h.codomain(), (2.0, 5.0));
        assert!(matches!(
            make_warp(WarpFamily::Scale, &[0.0], unit()),
            Err(Error::BadParam(_))
        ));
        assert!(make_warp(WarpFamily::Affine, &[0.0, -1.0], unit()).is_err());
        assert!(make_warp(WarpFamily::Shift, &[0.0, 1.0], unit()).is_err());
    }

    #[test]
    fn affine_inverse_closed_form() {
        let h = make_warp(WarpFamily::Affine, &[2.0, 3.0], unit()).unwrap();
        let inv = h.invert().unwrap();
        match inv.rep() {
            WarpRep::Affine { c, a } => {
                assert!((c + 2.0 / 3.0).abs() < 1e-15);
                assert!((a - 1.0 / 3.0).abs() < 1e-15);
            }
            r => panic!("unexpected {r:?}"),
        }
        assert_eq!(inv.domain(), (2.0, 5.0));
    }

    #[test]
    fn one_param_inverse_matches_formula() {
        for beta in [-2.0, -0.5, 1.0, 3.0] {
            let h = make_warp(WarpFamily::OneParam, &[beta], unit()).unwrap();
            let inv = h.invert().unwrap();
            for &s in Grid::unit(257).points() {
                let closed = (1.0 / beta) * ((s * ((beta as f64).exp() - 1.0) + 1.0) / 1.0).ln();
                assert!((inv.eval(s) - closed).abs() < 1e-12);
            }
            let id = h.compose(&inv).unwrap();
            assert!(id.deviation_from_identity(513) < 1e-12);
        }
    }

    #[test]
    fn compose_with_identity() {
        let id = Warp::identity(unit()).unwrap();
        let grid = Grid::new(vec![0.0, 0.3, 0.6, 1.0]).unwrap();
        let pl = Warp::piecewise_linear(grid, vec![0.0, 0.1, 0.7, 1.0]).unwrap();
        let one = make_warp(WarpFamily::OneParam, &[1.5], unit()).unwrap();
        for h in [pl, one] {
            assert_eq!(id.compose(&h).unwrap(), h);
            assert!(h.compose(&id).unwrap().sup_distance(&h, 257) < 1e-15);
        }
    }

    #[test]
    fn composing_piecewise_linear_is_exact() {
        let h1 = Warp::piecewise_linear(Grid::new(vec![0.0, 0.5, 1.0]).unwrap(), vec![0.0, 0.2, 1.0]).unwrap();
        let h2 = Warp::piecewise_linear(Grid::new(vec![0.0, 0.25, 1.0]).unwrap(), vec![0.0, 0.6, 1.0]).unwrap();
        let c = h1.compose(&h2).unwrap();
        for &t in Grid::unit(1001).points() {
            assert!((c.eval(t) - h1.eval(h2.eval(t))).abs() < 1e-14);
        }
        let err = h1.compose(&make_warp(WarpFamily::Affine, &[1.0, 1.0], unit()).unwrap());
        assert!(matches!(err, Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn flat_warps_do_not_invert() {
        let f = Warp::flat_allowed(Grid::unit(4), vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        assert!(matches!(f.invert(), Err(Error::NotInvertible(_))));
        assert!(f.to_sqrt_slope().is_err());
    }

    #[test]
    fn validate_reports() {
        let id = Warp::identity(unit()).unwrap();
        let d = id.validate(&ValidateOptions::default());
        assert!(d.pass);
        assert_eq!(d.min_slope, 1.0);

        let bad = Warp::piecewise_linear(Grid::unit(4), vec![0.0, 0.6, 0.4, 1.0]).unwrap();
        let d = bad.validate(&ValidateOptions::default());
        assert!(!d.pass);
        assert_eq!(d.violations.len(), 1);
        assert!((d.violations[0].t0 - 1.0 / 3.0).abs() < 1e-12);

        let flat = Warp::flat_allowed(Grid::unit(5), vec![0.0, 0.4, 0.4, 0.4, 1.0]).unwrap();
        let allow = ValidateOptions {
            allow_flat: true,
            ..Default::default()
        };
        let d = flat.validate(&allow);
        assert!(d.pass);
        assert_eq!(d.flat_regions, vec![(0.25, 0.75)]);
        assert!(!flat.validate(&ValidateOptions::default()).pass);

        let off = ValidateOptions {
            expected_codomain: Some((0.0, 2.0)),
            ..Default::default()
        };
        assert!(!id.validate(&off).pass);
    }

    #[test]
    fn sqrt_slope_cases() {
        let id = Warp::identity(unit()).unwrap();
        let psi = id.to_sqrt_slope().unwrap();
        assert!(psi.psi().values().iter().all(|v| (v - 1.0).abs() < 1e-12));

        let grid = Grid::unit(2001);
        let sq = Warp::piecewise_linear(grid.clone(), grid.points().iter().map(|t| t * t).collect()).unwrap();
        let psi = sq.to_sqrt_slope().unwrap();
        assert!((psi.norm_squared() - 1.0).abs() < 1e-12);
        for (t, v) in grid.points().iter().zip(psi.psi().values()).skip(1).step_by(50) {
            assert!((v - (2.0 * t).sqrt()).abs() < 1e-3, "t={t} psi={v}");
        }

        let ones = SqrtSlope::new(SampledFunction::constant(&Grid::unit(33), 1.0)).unwrap();
        let h = from_sqrt_slope(&ones, 0.0).unwrap();
        assert!(h.deviation_from_identity(101) < 1e-15);

        let half = SqrtSlope::new(SampledFunction::constant(&Grid::unit(33), 0.5)).unwrap();
        assert!(matches!(from_sqrt_slope(&half, 0.0), Err(Error::NotUnitNorm(_))));
    }

    #[test]
    fn sqrt_slope_round_trip_smooth() {
        for beta in [-2.0, 0.7, 2.5] {
            let h = make_warp(WarpFamily::OneParam, &[beta], unit()).unwrap();
            let psi = h.to_sqrt_slope_on(&Grid::unit(2049)).unwrap();
            let back = from_sqrt_slope(&psi, 0.0).unwrap();
            assert!(back.sup_distance(&h, 2049) < 1e-6, "beta {beta}");
        }
    }

    #[test]
    fn log_derivative_cases() {
        let grid = Grid::unit(1025);
        let zero = LogDerivativeRep::new(SampledFunction::constant(&grid, 0.0), 0.0, 1.0).unwrap();
        assert!(from_log_derivative(&zero).unwrap().deviation_from_identity(257) < 1e-15);

        let w = SampledFunction::from_fn(&grid, |t| 0.4 * (3.0 * t).sin() - 0.2 * t).unwrap();
        let rep = LogDerivativeRep::new(w.clone(), 0.0, 0.8).unwrap();
        let h = from_log_derivative(&rep).unwrap();
        let back = h.to_log_derivative(0.8).unwrap();
        let err = back
            .w
            .values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "round-trip error {err}");
        assert!(LogDerivativeRep::new(w, 0.0, -1.0).is_err());
    }

    #[test]
    fn min_slope_projection_keeps_boundaries() {
        let w = Warp::piecewise_linear(Grid::unit(5), vec![0.0, 0.5, 0.5, 0.5, 1.0]).unwrap();
        let p = w.project_min_slope(0.1).unwrap();
        let (_, v) = p.nodes().unwrap();
        assert_eq!(v[0], 0.0);
        assert_eq!(v[4], 1.0);
        assert!(p.validate(&ValidateOptions { min_slope: 0.1, ..Default::default() }).pass);
    }

    #[test]
    fn json_round_trip() {
        let w = make_warp(WarpFamily::OneParam, &[1.5], (0.0, 2.0)).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert!(s.contains("\"family\":\"one_param\""));
        let back: Warp = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
        let pl = Warp::piecewise_linear(Grid::unit(3), vec![0.0, 0.3, 1.0]).unwrap();
        let back: Warp = serde_json::from_str(&serde_json::to_string(&pl).unwrap()).unwrap();
        assert_eq!(back, pl);
        assert!(serde_json::from_str::<Warp>(r#"{"family":"scale","params":[-1],"domain":[0,1]}"#).is_err());
    }

    fn smooth_warp(a1: f64, a2: f64) -> Warp {
        // t + a1 sin(πt)/π + a2 sin(2πt)/(2π) with |a1| + |a2| < 1 is a diffeomorphism of [0, 1].
        use std::f64::consts::PI;
        let grid = Grid::unit(257);
        let values = grid
            .points()
            .iter()
            .map(|&t| t + a1 * (PI * t).sin() / PI + a2 * (2.0 * PI * t).sin() / (2.0 * PI))
            .collect();
        Warp::piecewise_linear(grid, values).unwrap()
    }

    proptest! {
        #[test]
        fn group_laws(a in -0.45f64..0.45, b in -0.45f64..0.45, c in -0.45f64..0.45, d in -0.45f64..0.45) {
            let h1 = smooth_warp(a, b);
            let h2 = smooth_warp(c, d);
            let h3 = make_warp(WarpFamily::OneParam, &[a * 4.0], (0.0, 1.0))
                .unwrap()
                .lower(&Grid::unit(97))
                .unwrap();
            let left = h1.compose(&h2).unwrap().compose(&h3).unwrap();
            let right = h1.compose(&h2.compose(&h3).unwrap()).unwrap();
            prop_assert!(left.sup_distance(&right, 513) < 1e-9);
            let id = h1.compose(&h1.invert().unwrap()).unwrap();
            prop_assert!(id.deviation_from_identity(513) < 1e-6);
            let id = h1.invert().unwrap().compose(&h1).unwrap();
            prop_assert!(id.deviation_from_identity(513) < 1e-6);
        }

        #[test]
        fn families_validate(c in -3.0f64..3.0, a in 0.01f64..10.0, beta in -6.0f64..6.0) {
            let opts = ValidateOptions::default();
            for w in [
                make_warp(WarpFamily::Scale, &[a], (0.5, 2.0)).unwrap(),
                make_warp(WarpFamily::Shift, &[c], (0.0, 1.0)).unwrap(),
                make_warp(WarpFamily::Affine, &[c, a], (0.0, 1.0)).unwrap(),
                make_warp(WarpFamily::OneParam, &[beta], (0.0, 1.0)).unwrap(),
            ] {
                prop_assert!(w.validate(&opts).pass, "{:?}", w);
            }
        }

        #[test]
        fn sqrt_slope_on_sphere(a in -0.45f64..0.45, b in -0.45f64..0.45) {
            let psi = smooth_warp(a, b).to_sqrt_slope().unwrap();
            prop_assert!((psi.norm_squared() - 1.0).abs() < 1e-6);
        }

        #[test]
        fn log_derivative_is_increasing(amp in -5.0f64..5.0, freq in 0.0f64..20.0) {
            let w = SampledFunction::from_fn(&Grid::unit(200), |t| amp * (freq * t).cos()).unwrap();
            let h = from_log_derivative(&LogDerivativeRep::new(w, 0.0, 1.0).unwrap()).unwrap();
            let (_, v) = h.nodes().unwrap();
            prop_assert!(v.windows(2).all(|p| p[1] > p[0]));
        }
    }
}
