//! Deterministic synthetic curves and panels with known warps.
//!
//! Every generator takes an explicit seed and uses a ChaCha stream, so the same
//! seed gives the same panel on every platform.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::function::{Grid, SampledFunction};
use crate::warp::Warp;

/// Points of the piecewise-linear lowering of generated warps.
pub const WARP_RESOLUTION: usize = 1025;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(center: f64, width: f64) -> impl Fn(f64) -> f64 {
    move |t| (-(t - center).powi(2) / (2.0 * width * width)).exp()
}

/// Two bumps of unequal height on [0, 1] riding on a gentle linear trend.
///
/// The trend keeps the velocity away from zero between the bumps, which pins
/// down the warp there.
pub fn two_bump(t: f64) -> f64 {
    gaussian(0.3, 0.09)(t) + 0.7 * gaussian(0.68, 0.08)(t) + 0.3 * t
}

pub fn one_bump(t: f64) -> f64 {
    1.2 * gaussian(0.5, 0.09)(t) + 0.3 * t
}

/// Several narrow peaks of varying height, loosely NMR-spectrum shaped.
pub fn spectrum(t: f64) -> f64 {
    const PEAKS: [(f64, f64, f64); 5] = [
        (0.25, 0.025, 1.0),
        (0.34, 0.02, 0.45),
        (0.47, 0.03, 0.8),
        (0.6, 0.02, 0.3),
        (0.7, 0.025, 0.6),
    ];
    PEAKS.iter().map(|&(c, w, a)| a * gaussian(c, w)(t)).sum()
}

/// Growth-velocity analog: a declining infant phase plus a pubertal spurt at `peak`.
pub fn growth_velocity(peak: f64) -> impl Fn(f64) -> f64 {
    move |t| 1.5 * (-4.0 * t).exp() + 0.4 + 0.9 * gaussian(peak, 0.06)(t)
}

/// Smooth logistic step from 0 to `height` at `at`.
pub fn step(at: f64, height: f64, steepness: f64) -> impl Fn(f64) -> f64 {
    move |t| height / (1.0 + (-(t - at) * steepness).exp())
}

/// The two single-step curves: a unit step at 0.3 and a half step at 0.6.
pub fn step_pair(points: usize) -> Result<(SampledFunction, SampledFunction)> {
    let g = Grid::unit(points);
    Ok((
        SampledFunction::from_fn(&g, step(0.3, 1.0, 60.0))?,
        SampledFunction::from_fn(&g, step(0.6, 0.5, 60.0))?,
    ))
}

/// A single Gaussian bump and its twofold vertical scaling.
pub fn pinching_pair(points: usize) -> Result<(SampledFunction, SampledFunction)> {
    let g = Grid::unit(points);
    let b = gaussian(0.5, 0.08);
    Ok((
        SampledFunction::from_fn(&g, &b)?,
        SampledFunction::from_fn(&g, |t| 2.0 * b(t))?,
    ))
}

/// Smooth warp of [0, 1]: `t + Σ a_k sin(kπt)/(kπ)`.
///
/// With `Σ|a_k| < 1` the slope stays within `[1 − Σ|a_k|, 1 + Σ|a_k|]`, so
/// the warp is a diffeomorphism with closed-form values and slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct SineWarp {
    pub coef: Vec<f64>,
}

impl SineWarp {
    /// Three random coefficients with `Σ|a_k| = strength`.
    pub fn random(rng: &mut impl Rng, strength: f64) -> Self {
        let raw: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let total: f64 = raw.iter().map(|a| a.abs()).sum::<f64>().max(1e-12);
        SineWarp {
            coef: raw.iter().map(|a| a * strength / total).collect(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let bend: f64 = self
            .coef
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let w = (k + 1) as f64 * PI;
                a * (w * t).sin() / w
            })
            .sum();
        (t + bend).clamp(0.0, 1.0)
    }

    pub fn slope(&self, t: f64) -> f64 {
        1.0 + self
            .coef
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * PI * t).cos())
            .sum::<f64>()
    }

    /// Piecewise-linear interpolant through `points` uniform nodes.
    pub fn to_warp(&self, points: usize) -> Result<Warp> {
        let g = Grid::unit(points);
        let values = g.points().iter().map(|&t| self.eval(t)).collect();
        Warp::piecewise_linear(g, values)
    }
}

/// Random [`SineWarp`] of the given strength, lowered to [`WARP_RESOLUTION`] nodes.
pub fn smooth_warp(rng: &mut impl Rng, strength: f64) -> Result<Warp> {
    SineWarp::random(rng, strength).to_warp(WARP_RESOLUTION)
}

/// Sampled curves with the warps and labels that generated them.
#[derive(Clone, Debug)]
pub struct Panel {
    pub grid: Grid,
    pub curves: Vec<SampledFunction>,
    /// Generating warps: `curves[i] = base_i ∘ warps[i]`.
    pub warps: Vec<Warp>,
    pub labels: Vec<usize>,
}

fn warped(grid: &Grid, f: &impl Fn(f64) -> f64, h: &Warp) -> Result<SampledFunction> {
    SampledFunction::from_fn(grid, |t| f(h.eval(t)))
}

/// `n` copies `f ∘ h_i` for random smooth `h_i`.
pub fn warped_panel(
    f: impl Fn(f64) -> f64,
    n: usize,
    points: usize,
    strength: f64,
    seed: u64,
) -> Result<Panel> {
    let grid = Grid::unit(points);
    let mut r = rng(seed);
    let mut curves = Vec::with_capacity(n);
    let mut warps = Vec::with_capacity(n);
    for _ in 0..n {
        let h = smooth_warp(&mut r, strength)?;
        curves.push(warped(&grid, &f, &h)?);
        warps.push(h);
    }
    Ok(Panel {
        grid,
        curves,
        warps,
        labels: vec![0; n],
    })
}

/// Warped copies of [`one_bump`] (label 0) and [`two_bump`] (label 1), interleaved.
pub fn two_cluster_panel(per_cluster: usize, points: usize, seed: u64) -> Result<Panel> {
    let grid = Grid::unit(points);
    let mut r = rng(seed);
    let mut panel = Panel {
        grid: grid.clone(),
        curves: Vec::new(),
        warps: Vec::new(),
        labels: Vec::new(),
    };
    for _ in 0..per_cluster {
        for label in 0..2 {
            let h = smooth_warp(&mut r, 0.3)?;
            let c = if label == 0 {
                warped(&grid, &one_bump, &h)?
            } else {
                warped(&grid, &two_bump, &h)?
            };
            panel.curves.push(c);
            panel.warps.push(h);
            panel.labels.push(label);
        }
    }
    Ok(panel)
}

/// Two populations of [`spectrum`] shifted by `offsets.0` and `offsets.1`,
/// each curve with a small extra shift jitter and amplitude scaling.
pub fn shift_cluster_panel(
    per_cluster: usize,
    points: usize,
    offsets: (f64, f64),
    seed: u64,
) -> Result<Panel> {
    let grid = Grid::unit(points);
    let mut r = rng(seed);
    let mut panel = Panel {
        grid: grid.clone(),
        curves: Vec::new(),
        warps: Vec::new(),
        labels: Vec::new(),
    };
    for _ in 0..per_cluster {
        for (label, base) in [offsets.0, offsets.1].into_iter().enumerate() {
            let delta = base + r.random_range(-0.01..0.01);
            let amp = r.random_range(0.85..1.15);
            // curve(t) = spectrum(t − δ) = spectrum ∘ (t ↦ t − δ)
            let h = crate::warp::make_warp(crate::warp::WarpFamily::Shift, &[-delta], (0.0, 1.0))?;
            panel.curves.push(SampledFunction::from_fn(&grid, |t| amp * spectrum(t - delta))?);
            panel.warps.push(h);
            panel.labels.push(label);
        }
    }
    Ok(panel)
}

/// Curves with a three-component amplitude structure, each warped by a random smooth warp.
pub fn pca_panel(n: usize, points: usize, strength: f64, seed: u64) -> Result<Panel> {
    let grid = Grid::unit(points);
    let mut r = rng(seed);
    let mean = |t: f64| two_bump(t);
    let comps: [Box<dyn Fn(f64) -> f64>; 3] = [
        Box::new(gaussian(0.3, 0.09)),
        Box::new(gaussian(0.68, 0.08)),
        Box::new(|t: f64| (PI * t).sin()),
    ];
    let sd = [0.3, 0.2, 0.1];
    let mut panel = Panel {
        grid: grid.clone(),
        curves: Vec::new(),
        warps: Vec::new(),
        labels: vec![0; n],
    };
    for _ in 0..n {
        let z: Vec<f64> = sd.iter().map(|s| s * r.random_range(-1.5..1.5)).collect();
        let h = smooth_warp(&mut r, strength)?;
        let f = |t: f64| mean(t) + z.iter().zip(&comps).map(|(z, c)| z * c(t)).sum::<f64>();
        panel.curves.push(warped(&grid, &f, &h)?);
        panel.warps.push(h);
    }
    Ok(panel)
}

/// Growth-velocity analogs with pubertal peaks drawn uniformly from [0.55, 0.75].
/// Returns the panel and each curve's true peak time.
pub fn growth_panel(n: usize, points: usize, seed: u64) -> Result<(Panel, Vec<f64>)> {
    let grid = Grid::unit(points);
    let mut r = rng(seed);
    let mut peaks = Vec::with_capacity(n);
    let mut curves = Vec::with_capacity(n);
    for _ in 0..n {
        let p = r.random_range(0.55..0.75);
        let amp = r.random_range(0.9..1.1);
        let v = growth_velocity(p);
        curves.push(SampledFunction::from_fn(&grid, |t| amp * v(t))?);
        peaks.push(p);
    }
    let warps = vec![Warp::identity((0.0, 1.0))?; n];
    Ok((
        Panel {
            grid,
            curves,
            warps,
            labels: vec![0; n],
        },
        peaks,
    ))
}
