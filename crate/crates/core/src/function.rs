//! Sampled real functions on strictly increasing grids.
//!
//! A [`SampledFunction`] is the carrier for observed curves, aligned curves and
//! templates. Between samples it is read as piecewise linear, which makes the
//! trapezoidal rule used by [`inner_product`] exact for the function model.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Absolute tolerance for comparing grid abscissae.
pub const GRID_TOL: f64 = 1e-12;

/// Strictly increasing abscissae with at least two points.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Arc<[f64]>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self {
            points: points.into(),
        })
    }

    /// `n` equally spaced points on `[lo, hi]`, endpoints included exactly.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::InvalidGrid(format!(
                "uniform grid needs n >= 2 and hi > lo (n={n}, lo={lo}, hi={hi})"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        points[n - 1] = hi;
        Self::new(points)
    }

    /// Uniform grid on `[0, 1]`.
    pub fn unit(n: usize) -> Self {
        Self::uniform(0.0, 1.0, n.max(2)).expect("unit grid is always valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn span(&self) -> f64 {
        self.hi() - self.lo()
    }

    /// True when both grids have the same points up to [`GRID_TOL`].
    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.points, &other.points)
            || (self.len() == other.len()
                && self
                    .points
                    .iter()
                    .zip(other.points.iter())
                    .all(|(a, b)| (a - b).abs() <= GRID_TOL))
    }

    /// Index of the segment `[p[i], p[i+1]]` containing `t`, clamped to the grid.
    pub fn segment(&self, t: f64) -> usize {
        let n = self.points.len();
        let idx = self.points.partition_point(|&p| p <= t);
        idx.saturating_sub(1).min(n - 2)
    }

    /// Affinely map the grid onto `[lo, hi]`.
    pub fn rescaled(&self, lo: f64, hi: f64) -> Result<Grid> {
        let (a, b) = (self.lo(), self.hi());
        let n = self.len();
        let mut pts: Vec<f64> = self
            .points
            .iter()
            .map(|&p| lo + (p - a) / (b - a) * (hi - lo))
            .collect();
        pts[0] = lo;
        pts[n - 1] = hi;
        Grid::new(pts)
    }
}

/// Interpolation scheme used by [`SampledFunction::resample`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Linear,
    /// Natural cubic spline.
    Cubic,
}

/// A real function given by its values on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                grid: grid.len(),
                values: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self::new(grid.clone(), values)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.grid.lo(), self.grid.hi())
    }

    /// Piecewise-linear evaluation; constant extension outside the domain.
    pub fn eval(&self, t: f64) -> f64 {
        let p = self.grid.points();
        if t <= p[0] {
            return self.values[0];
        }
        let n = p.len();
        if t >= p[n - 1] {
            return self.values[n - 1];
        }
        let i = self.grid.segment(t);
        let w = (t - p[i]) / (p[i + 1] - p[i]);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Sample onto `target`, which must lie inside this function's domain.
    pub fn resample(&self, target: &Grid, scheme: Interpolation) -> Result<SampledFunction> {
        if self.grid.same_as(target) {
            return Ok(Self::new(target.clone(), self.values.clone())?);
        }
        let (lo, hi) = self.domain();
        for &t in [target.lo(), target.hi()].iter() {
            if t < lo - GRID_TOL || t > hi + GRID_TOL {
                return Err(Error::OutOfDomain { point: t, lo, hi });
            }
        }
        let values = match scheme {
            Interpolation::Linear => target.points().iter().map(|&t| self.eval(t)).collect(),
            Interpolation::Cubic => {
                let spline = NaturalSpline::new(self.grid.points(), &self.values);
                target
                    .points()
                    .iter()
                    .map(|&t| spline.eval(t.clamp(lo, hi)))
                    .collect()
            }
        };
        Self::new(target.clone(), values)
    }

    /// Second-order finite-difference derivative on the same grid.
    pub fn derivative(&self) -> SampledFunction {
        Self {
            grid: self.grid.clone(),
            values: finite_difference(self.grid.points(), &self.values),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SampledFunction> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> SampledFunction {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Pointwise `a * self + b * other` on a shared grid.
    pub fn combine(&self, a: f64, other: &SampledFunction, b: f64) -> Result<SampledFunction> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.combine(1.0, other, -1.0)
    }

    pub fn integral(&self) -> f64 {
        trapezoid(self.grid.points(), &self.values)
    }

    /// Running trapezoidal integral starting at zero.
    pub fn cumulative_integral(&self) -> SampledFunction {
        Self {
            grid: self.grid.clone(),
            values: cumulative_trapezoid(self.grid.points(), &self.values),
        }
    }

    /// The same values on the grid affinely moved onto `[lo, hi]`.
    pub fn with_domain(&self, lo: f64, hi: f64) -> Result<SampledFunction> {
        Self::new(self.grid.rescaled(lo, hi)?, self.values.clone())
    }
}

/// Trapezoidal approximation of `∫ f g`.
pub fn inner_product(f: &SampledFunction, g: &SampledFunction) -> Result<f64> {
    if !f.grid.same_as(&g.grid) {
        return Err(Error::GridMismatch);
    }
    let p = f.grid.points();
    let mut acc = 0.0;
    for i in 0..p.len() - 1 {
        let a = f.values[i] * g.values[i];
        let b = f.values[i + 1] * g.values[i + 1];
        acc += 0.5 * (a + b) * (p[i + 1] - p[i]);
    }
    Ok(acc)
}

pub fn l2_norm(f: &SampledFunction) -> f64 {
    inner_product(f, f).expect("same grid").max(0.0).sqrt()
}

pub fn l2_distance(f: &SampledFunction, g: &SampledFunction) -> Result<f64> {
    Ok(l2_norm(&f.sub(g)?))
}

/// Trapezoidal rule for samples `y` at abscissae `x`.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (yw[0] + yw[1]) * (xw[1] - xw[0]))
        .sum()
}

/// Cumulative trapezoidal integral, first entry zero.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (y[i - 1] + y[i]) * (x[i] - x[i - 1]);
        out.push(acc);
    }
    out
}

/// Three-point derivative: central in the interior, one-sided at the ends.
/// Exact for quadratics on arbitrary grids.
pub fn finite_difference(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 2 {
        let s = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![s, s];
    }
    let mut d = vec![0.0; n];
    {
        let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
        d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * y[0] + (h1 + h2) / (h1 * h2) * y[1]
            - h1 / (h2 * (h1 + h2)) * y[2];
    }
    for i in 1..n - 1 {
        let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        d[i] = -h2 / (h1 * (h1 + h2)) * y[i - 1]
            + (h2 - h1) / (h1 * h2) * y[i]
            + h1 / (h2 * (h1 + h2)) * y[i + 1];
    }
    {
        let (h1, h2) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
        d[n - 1] = h2 / (h1 * (h1 + h2)) * y[n - 3] - (h1 + h2) / (h1 * h2) * y[n - 2]
            + (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * y[n - 1];
    }
    d
}

/// Pointwise mean of functions sharing a grid.
pub fn mean_function(fs: &[SampledFunction]) -> Result<SampledFunction> {
    let first = fs.first().ok_or(Error::TooFewCurves { needed: 1, got: 0 })?;
    let mut acc = vec![0.0; first.len()];
    for f in fs {
        if !f.grid.same_as(&first.grid) {
            return Err(Error::GridMismatch);
        }
        for (a, v) in acc.iter_mut().zip(&f.values) {
            *a += v;
        }
    }
    let n = fs.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    SampledFunction::new(first.grid.clone(), acc)
}

/// `∫ Var_i f_i(t) dt` with the population (1/n) variance at each abscissa.
pub fn integrated_variance(fs: &[SampledFunction]) -> Result<f64> {
    let mean = mean_function(fs)?;
    let n = fs.len() as f64;
    let var: Vec<f64> = (0..mean.len())
        .map(|j| {
            fs.iter()
                .map(|f| (f.values[j] - mean.values[j]).powi(2))
                .sum::<f64>()
                / n
        })
        .collect();
    Ok(trapezoid(mean.grid.points(), &var))
}

/// Natural cubic spline through `(x[i], y[i])`.
pub(crate) struct NaturalSpline<'a> {
    x: &'a [f64],
    y: &'a [f64],
    m: Vec<f64>,
}

impl<'a> NaturalSpline<'a> {
    pub(crate) fn new(x: &'a [f64], y: &'a [f64]) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the interior second derivatives.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for j in 0..k {
                let i = j + 1;
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                diag[j] = 2.0 * (h0 + h1);
                upper[j] = h1;
                rhs[j] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for j in 1..k {
                let lower = x[j + 1] - x[j];
                let w = lower / diag[j - 1];
                diag[j] -= w * upper[j - 1];
                rhs[j] -= w * rhs[j - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for j in (0..k - 1).rev() {
                m[j + 1] = (rhs[j] - upper[j] * m[j + 2]) / diag[j];
            }
        }
        Self { x, y, m }
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&p| p <= t).saturating_sub(1).min(n - 2);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(vec![0.0]).is_err());
        assert!(Grid::new(vec![0.0, 0.0]).is_err());
        assert!(Grid::new(vec![0.0, 1.0, 0.5]).is_err());
        assert!(SampledFunction::new(Grid::unit(3), vec![1.0, 2.0]).is_err());
        assert!(SampledFunction::new(Grid::unit(2), vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn linear_resample_reproduces_linear_function() {
        let f = SampledFunction::from_fn(&Grid::new(vec![0.0, 0.5, 1.0]).unwrap(), |t| t).unwrap();
        let g = f.resample(&Grid::unit(5), Interpolation::Linear).unwrap();
        for (v, e) in g.values().iter().zip([0.0, 0.25, 0.5, 0.75, 1.0]) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn resample_onto_own_grid_is_identity() {
        let grid = Grid::new(vec![0.0, 0.1, 0.35, 0.8, 1.0]).unwrap();
        let f = SampledFunction::new(grid.clone(), vec![1.0, -2.0, 0.5, 3.0, 0.25]).unwrap();
        for s in [Interpolation::Linear, Interpolation::Cubic] {
            assert_eq!(f.resample(&grid, s).unwrap(), f);
        }
        // A grid equal in value but not in identity goes through the evaluator.
        let copy = Grid::new(grid.points().to_vec()).unwrap();
        let spline = NaturalSpline::new(grid.points(), f.values());
        for (t, v) in copy.points().iter().zip(f.values()) {
            assert_eq!(spline.eval(*t), *v);
            assert_eq!(f.eval(*t), *v);
        }
    }

    #[test]
    fn cubic_resample_of_sine() {
        let f = SampledFunction::from_fn(&Grid::unit(64), |t| (2.0 * PI * t).sin()).unwrap();
        let g = f.resample(&Grid::unit(256), Interpolation::Cubic).unwrap();
        let err = g
            .grid()
            .points()
            .iter()
            .zip(g.values())
            .map(|(t, v)| (v - (2.0 * PI * t).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "max error {err}");
    }

    #[test]
    fn resample_out_of_domain() {
        let f = SampledFunction::constant(&Grid::unit(4), 1.0);
        let target = Grid::uniform(0.0, 1.1, 5).unwrap();
        assert!(matches!(
            f.resample(&target, Interpolation::Linear),
            Err(Error::OutOfDomain { .. })
        ));
        let inside = Grid::new(vec![-1e-13, 0.5, 1.0 + 1e-13]).unwrap();
        assert!(f.resample(&inside, Interpolation::Linear).is_ok());
    }

    #[test]
    fn derivative_cases() {
        let grid = Grid::new(vec![0.0, 0.2, 0.3, 0.7, 1.0]).unwrap();
        let c = SampledFunction::constant(&grid, 3.0).derivative();
        assert!(c.values().iter().all(|v| v.abs() < 1e-12));

        let sq = SampledFunction::from_fn(&Grid::unit(101), |t| t * t).unwrap();
        let d = sq.derivative();
        for (t, v) in d.grid().points().iter().zip(d.values()) {
            assert!((v - 2.0 * t).abs() < 1e-10);
        }

        let s = SampledFunction::from_fn(&Grid::uniform(0.0, PI, 512).unwrap(), f64::sin).unwrap();
        let d = s.derivative();
        let p = d.grid().points();
        let err = (1..p.len() - 1)
            .map(|i| (d.values()[i] - p[i].cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "max error {err}");
    }

    #[test]
    fn inner_product_cases() {
        let g = Grid::unit(1001);
        let one = SampledFunction::constant(&g, 1.0);
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-12);
        let s = SampledFunction::from_fn(&g, |t| (2.0 * PI * t).sin()).unwrap();
        let c = SampledFunction::from_fn(&g, |t| (2.0 * PI * t).cos()).unwrap();
        assert!(inner_product(&s, &c).unwrap().abs() < 1e-6);
        let zero = SampledFunction::constant(&g, 0.0);
        assert_eq!(inner_product(&s, &zero).unwrap(), 0.0);
        let other = SampledFunction::constant(&Grid::unit(11), 1.0);
        assert_eq!(inner_product(&s, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn variance_of_identical_curves_is_zero() {
        let g = Grid::unit(50);
        let f = SampledFunction::from_fn(&g, |t| t.sin()).unwrap();
        assert_eq!(integrated_variance(&[f.clone(), f.clone()]).unwrap(), 0.0);
        let mean = mean_function(&[f.clone(), f.scale(3.0)]).unwrap();
        assert!((mean.values()[10] - 2.0 * f.values()[10]).abs() < 1e-15);
    }
}
