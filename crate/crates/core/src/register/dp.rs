//! Dynamic programming over monotone lattice paths.
//!
//! The unit square is cut into an `n × n` lattice; a warp is a piecewise-linear
//! path from `(0, 0)` to `(1, 1)` made of admissible steps. The solver is
//! globally optimal over that restricted class.

use serde::{Deserialize, Serialize};

use super::{common_domain, compose_function, normalized, unit_lattice, Method, PairRegistration};
use crate::error::{Error, Result};
use crate::function::SampledFunction;
use crate::srvf::srvf_transform;
use crate::warp::Warp;

/// One lattice step: `dt` cells along the time axis, `ds` along the warp axis.
/// Its slope is `ds / dt`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepPattern {
    pub dt: usize,
    pub ds: usize,
}

impl StepPattern {
    pub const DIAGONAL: StepPattern = StepPattern { dt: 1, ds: 1 };

    pub fn slope(&self) -> f64 {
        self.ds as f64 / self.dt as f64
    }

    /// Slopes between 1/3 and 3: every coprime step of at most six cells
    /// inside that range (17 steps).
    ///
    /// A richer set of slopes than `{1/3, 1/2, 1, 2, 3}` lets the path follow
    /// smooth warps without zig-zagging between neighboring slopes.
    pub fn default_window() -> Vec<StepPattern> {
        Self::window_up_to(6)
            .into_iter()
            .filter(|s| 3 * s.ds >= s.dt && s.ds <= 3 * s.dt)
            .collect()
    }

    /// Every coprime step with both components at most `max`.
    pub fn window_up_to(max: usize) -> Vec<StepPattern> {
        fn gcd(a: usize, b: usize) -> usize {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        let mut out = Vec::new();
        for dt in 1..=max {
            for ds in 1..=max {
                if gcd(dt, ds) == 1 {
                    out.push(StepPattern { dt, ds });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpOptions {
    /// Lattice nodes per axis.
    pub grid_size: usize,
    pub steps: Vec<StepPattern>,
    /// Weight λ of the roughness term `Σ (slope − 1)² · Δt`.
    pub penalty: f64,
    /// Quadrature sub-intervals per lattice cell when integrating a segment.
    pub subsamples: usize,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self {
            grid_size: 129,
            steps: StepPattern::default_window(),
            penalty: 0.0,
            subsamples: 4,
        }
    }
}

impl DpOptions {
    /// Steps up to `max` cells in either direction; slopes from `1/max` to `max`.
    pub fn flexible(max: usize) -> Self {
        Self {
            steps: StepPattern::window_up_to(max),
            ..Self::default()
        }
    }

    pub fn with_penalty(mut self, penalty: f64) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_grid_size(mut self, n: usize) -> Self {
        self.grid_size = n;
        self
    }

    /// Width of one lattice cell on the unit interval.
    pub fn cell(&self) -> f64 {
        1.0 / (self.grid_size - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 2 {
            return Err(Error::BadParam("grid_size must be at least 2".into()));
        }
        if !(self.penalty >= 0.0) || !self.penalty.is_finite() {
            return Err(Error::BadParam(format!("penalty must be >= 0, got {}", self.penalty)));
        }
        if self.steps.is_empty() || self.steps.iter().any(|s| s.dt == 0 || s.ds == 0) {
            return Err(Error::BadParam("step patterns must be non-empty with positive components".into()));
        }
        if self.subsamples == 0 {
            return Err(Error::BadParam("subsamples must be positive".into()));
        }
        Ok(())
    }

    /// Steps in evaluation order: the diagonal first, so ties prefer it.
    fn ordered_steps(&self) -> Vec<StepPattern> {
        let mut steps = Vec::with_capacity(self.steps.len());
        if self.steps.contains(&StepPattern::DIAGONAL) {
            steps.push(StepPattern::DIAGONAL);
        }
        for s in &self.steps {
            if *s != StepPattern::DIAGONAL && !steps.contains(s) {
                steps.push(*s);
            }
        }
        steps
    }
}

/// Local cost of the straight segment between lattice nodes `(i0, j0)` and
/// `(i1, j1)`; `i` indexes time, `j` the warp value.
pub trait SegmentCost {
    fn cost(&self, i0: usize, j0: usize, i1: usize, j1: usize) -> f64;
}

impl<F: Fn(usize, usize, usize, usize) -> f64> SegmentCost for F {
    fn cost(&self, i0: usize, j0: usize, i1: usize, j1: usize) -> f64 {
        self(i0, j0, i1, j1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DpSolution {
    /// Lattice nodes visited, from `(0, 0)` to `(n-1, n-1)`.
    pub path: Vec<(usize, usize)>,
    /// Accumulated cost including the roughness term.
    pub total: f64,
    /// Accumulated segment cost without the roughness term.
    pub data_cost: f64,
    /// The path as a warp of `[0, 1]` onto itself.
    pub warp: Warp,
}

pub fn dp_solve(cost: &impl SegmentCost, opts: &DpOptions) -> Result<DpSolution> {
    opts.validate()?;
    let n = opts.grid_size;
    let steps = opts.ordered_steps();
    let cell = opts.cell();
    let penalties: Vec<f64> = steps
        .iter()
        .map(|s| opts.penalty * (s.slope() - 1.0).powi(2) * s.dt as f64 * cell)
        .collect();

    let idx = |i: usize, j: usize| i * n + j;
    let mut acc = vec![f64::INFINITY; n * n];
    let mut pred = vec![u32::MAX; n * n];
    acc[0] = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut arg = u32::MAX;
            for (k, s) in steps.iter().enumerate() {
                if s.dt > i || s.ds > j {
                    continue;
                }
                let (pi, pj) = (i - s.dt, j - s.ds);
                let prev = acc[idx(pi, pj)];
                if !prev.is_finite() {
                    continue;
                }
                let cand = prev + (cost.cost(pi, pj, i, j) + penalties[k]);
                if cand < best {
                    best = cand;
                    arg = k as u32;
                }
            }
            acc[idx(i, j)] = best;
            pred[idx(i, j)] = arg;
        }
    }
    let total = acc[idx(n - 1, n - 1)];
    if !total.is_finite() {
        return Err(Error::NoPath);
    }
    let mut path = vec![(n - 1, n - 1)];
    let (mut i, mut j) = (n - 1, n - 1);
    while i > 0 || j > 0 {
        let s = steps[pred[idx(i, j)] as usize];
        i -= s.dt;
        j -= s.ds;
        path.push((i, j));
    }
    path.reverse();
    let data_cost = path
        .windows(2)
        .fold(0.0, |a, w| a + cost.cost(w[0].0, w[0].1, w[1].0, w[1].1));
    let lattice = unit_lattice(n);
    let p = lattice.points();
    let grid = crate::function::Grid::new(path.iter().map(|&(i, _)| p[i]).collect())?;
    let warp = Warp::piecewise_linear(grid, path.iter().map(|&(_, j)| p[j]).collect())?;
    Ok(DpSolution {
        path,
        total,
        data_cost,
        warp,
    })
}

/// Optimal lattice warp of `[0, 1]` for `cost`.
pub fn dp_align(cost: &impl SegmentCost, opts: &DpOptions) -> Result<Warp> {
    Ok(dp_solve(cost, opts)?.warp)
}

/// Linear interpolation with constant extension; O(1) on uniform grids.
struct Sampler<'a> {
    values: &'a [f64],
    f: &'a SampledFunction,
    uniform: Option<(f64, f64)>,
}

impl<'a> Sampler<'a> {
    fn new(f: &'a SampledFunction) -> Self {
        let p = f.grid().points();
        let n = p.len();
        let (lo, span) = (p[0], p[n - 1] - p[0]);
        let h = span / (n - 1) as f64;
        let is_uniform = p
            .iter()
            .enumerate()
            .all(|(i, &x)| (x - (lo + h * i as f64)).abs() <= 1e-12 * span);
        Sampler {
            values: f.values(),
            f,
            uniform: is_uniform.then_some((lo, 1.0 / h)),
        }
    }

    #[inline]
    fn eval(&self, t: f64) -> f64 {
        let Some((lo, inv_h)) = self.uniform else {
            return self.f.eval(t);
        };
        let v = self.values;
        let x = (t - lo) * inv_h;
        if x <= 0.0 {
            return v[0];
        }
        let last = v.len() - 1;
        if x >= last as f64 {
            return v[last];
        }
        let i = (x as usize).min(last - 1);
        let w = x - i as f64;
        v[i] * (1.0 - w) + v[i + 1] * w
    }
}

enum Integrand<'a> {
    /// `[y(t) − x0(s)]²`
    L2 { y: Sampler<'a>, x0: Sampler<'a> },
    /// `[q1(t) − q2(s) √slope]²`
    Elastic { q1: Sampler<'a>, q2: Sampler<'a> },
}

/// Trapezoidal integral of an integrand along a straight lattice segment.
struct FunctionCost<'a> {
    lattice: Vec<f64>,
    subsamples: usize,
    integrand: Integrand<'a>,
}

impl SegmentCost for FunctionCost<'_> {
    fn cost(&self, i0: usize, j0: usize, i1: usize, j1: usize) -> f64 {
        let (t0, t1) = (self.lattice[i0], self.lattice[i1]);
        let (s0, s1) = (self.lattice[j0], self.lattice[j1]);
        let k = self.subsamples * (i1 - i0).max(j1 - j0);
        let dt = (t1 - t0) / k as f64;
        let ds = (s1 - s0) / k as f64;
        let slope = (s1 - s0) / (t1 - t0);
        let root = slope.sqrt();
        let f = |m: usize| {
            let t = t0 + dt * m as f64;
            let s = s0 + ds * m as f64;
            match &self.integrand {
                Integrand::L2 { y, x0 } => (y.eval(t) - x0.eval(s)).powi(2),
                Integrand::Elastic { q1, q2 } => (q1.eval(t) - q2.eval(s) * root).powi(2),
            }
        };
        let mut sum = 0.5 * (f(0) + f(k));
        for m in 1..k {
            sum += f(m);
        }
        sum * dt
    }
}

/// Least-squares lattice registration, `min_h ‖y − x0 ∘ h‖²` (+ roughness).
///
/// `x0` is the moving curve: `aligned = x0 ∘ h ≈ y`. The reported cost is the
/// unpenalized squared error in the original time units.
pub fn dtw_l2(y: &SampledFunction, x0: &SampledFunction, opts: &DpOptions) -> Result<PairRegistration> {
    let (lo, hi) = common_domain(y, x0)?;
    let (yn, xn) = (normalized(y)?, normalized(x0)?);
    let field = FunctionCost {
        lattice: unit_lattice(opts.grid_size).points().to_vec(),
        subsamples: opts.subsamples,
        integrand: Integrand::L2 { y: Sampler::new(&yn), x0: Sampler::new(&xn) },
    };
    let sol = dp_solve(&field, opts)?;
    let warp = sol.warp.rescaled(lo, hi)?;
    let cost = sol.data_cost * (hi - lo);
    Ok(PairRegistration {
        aligned: compose_function(x0, &warp),
        warp,
        cost,
        value: cost,
        method: Method::DtwL2,
        converged: true,
    })
}

/// Elastic registration, `min_h ‖SRVF(x1) − (SRVF(x2), h)‖`.
///
/// `x2` is the moving curve: `aligned = x2 ∘ h`. Also returns the amplitude
/// distance, the square root of the unpenalized segment cost.
pub fn elastic_align(
    x1: &SampledFunction,
    x2: &SampledFunction,
    opts: &DpOptions,
) -> Result<(PairRegistration, f64)> {
    let (lo, hi) = common_domain(x1, x2)?;
    let q1 = srvf_transform(&normalized(x1)?).into_function();
    let q2 = srvf_transform(&normalized(x2)?).into_function();
    let field = FunctionCost {
        lattice: unit_lattice(opts.grid_size).points().to_vec(),
        subsamples: opts.subsamples,
        integrand: Integrand::Elastic { q1: Sampler::new(&q1), q2: Sampler::new(&q2) },
    };
    let sol = dp_solve(&field, opts)?;
    let warp = sol.warp.rescaled(lo, hi)?;
    let distance = sol.data_cost.max(0.0).sqrt();
    Ok((
        PairRegistration {
            aligned: compose_function(x2, &warp),
            warp,
            cost: sol.data_cost,
            value: distance,
            method: Method::Elastic,
            converged: true,
        },
        distance,
    ))
}
