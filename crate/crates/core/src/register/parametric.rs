use serde::{Deserialize, Serialize};

use super::criteria::{criterion_value, Criterion};
use super::{compose_function, Method, PairRegistration};
use crate::error::{Error, Result};
use crate::function::{Grid, SampledFunction};
use crate::optimize::{golden_section, nelder_mead_2d};
use crate::warp::{make_warp, Warp, WarpFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParametricFamily {
    Shift,
    Affine,
    OneParam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParametricOptions {
    pub family: ParametricFamily,
    pub criterion: Criterion,
    /// 0 compares the curves, 1 their first derivatives.
    pub derivative_order: u8,
    /// Largest shift searched, as a fraction of the domain length.
    pub max_shift: f64,
    /// Range of affine slopes searched.
    pub scale_range: (f64, f64),
    pub beta_range: (f64, f64),
    /// Warps whose overlap is shorter than this fraction of the domain are rejected.
    pub min_overlap: f64,
    /// Points of the coarse scan along each parameter.
    pub coarse: usize,
    /// Number of coarse minima refined locally.
    pub starts: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ParametricOptions {
    fn default() -> Self {
        ParametricOptions {
            family: ParametricFamily::Shift,
            criterion: Criterion::L2,
            derivative_order: 0,
            max_shift: 0.25,
            scale_range: (0.5, 2.0),
            beta_range: (-5.0, 5.0),
            min_overlap: 0.5,
            coarse: 101,
            starts: 5,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

impl ParametricOptions {
    pub fn new(family: ParametricFamily, criterion: Criterion) -> Self {
        ParametricOptions {
            family,
            criterion,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadParam(m.into()));
        if self.derivative_order > 1 {
            return bad("derivative_order must be 0 or 1");
        }
        if !(self.max_shift >= 0.0 && self.max_shift.is_finite()) {
            return bad("max_shift must be a non-negative number");
        }
        let (s0, s1) = self.scale_range;
        if !(s0 > 0.0 && s1 >= s0 && s1.is_finite()) {
            return bad("scale_range must be positive and ordered");
        }
        let (b0, b1) = self.beta_range;
        if !(b1 >= b0 && b0.is_finite() && b1.is_finite()) {
            return bad("beta_range must be finite and ordered");
        }
        if !(self.min_overlap > 0.0 && self.min_overlap <= 1.0) {
            return bad("min_overlap must lie in (0, 1]");
        }
        if self.coarse < 3 || self.starts == 0 || self.max_iter == 0 {
            return bad("coarse >= 3, starts >= 1 and max_iter >= 1 are required");
        }
        Ok(())
    }
}

/// Everything the loss needs, prepared once per call.
struct Problem<'a> {
    y: SampledFunction,
    x0: SampledFunction,
    y_domain: (f64, f64),
    domain: (f64, f64),
    points: usize,
    opts: &'a ParametricOptions,
}

impl Problem<'_> {
    fn warp(&self, p: &[f64]) -> Result<Warp> {
        let (lo, hi) = self.domain;
        match self.opts.family {
            ParametricFamily::Shift => make_warp(WarpFamily::Shift, p, self.domain),
            ParametricFamily::OneParam => make_warp(WarpFamily::OneParam, p, self.domain),
            ParametricFamily::Affine => {
                // Centre shift and log-slope keep the two coordinates on similar scales.
                let mid = 0.5 * (lo + hi);
                let a = p[1].exp();
                make_warp(WarpFamily::Affine, &[mid + p[0] - a * mid, a], self.domain)
            }
        }
    }

    /// Part of the domain that `h` maps inside the moving curve's domain.
    fn overlap(&self, h: &Warp) -> Result<(f64, f64)> {
        let (lo, hi) = self.domain;
        let inv = h.invert()?;
        let (y0, y1) = self.y_domain;
        Ok((lo.max(inv.eval(y0)), hi.min(inv.eval(y1))))
    }

    fn pair(&self, h: &Warp) -> Result<Option<(SampledFunction, SampledFunction)>> {
        let (a, b) = self.overlap(h)?;
        let (lo, hi) = self.domain;
        if !(b - a >= self.opts.min_overlap * (hi - lo)) {
            return Ok(None);
        }
        let grid = Grid::uniform(a, b, self.points)?;
        let moved = if self.opts.derivative_order == 0 {
            SampledFunction::from_fn(&grid, |t| self.y.eval(h.eval(t)))?
        } else {
            SampledFunction::from_fn(&grid, |t| self.y.eval(h.eval(t)) * h.slope(t))?
        };
        let target = SampledFunction::from_fn(&grid, |t| self.x0.eval(t))?;
        Ok(Some((moved, target)))
    }

    fn value(&self, h: &Warp) -> Result<Option<f64>> {
        let Some((moved, target)) = self.pair(h)? else {
            return Ok(None);
        };
        match criterion_value(self.opts.criterion, &target, &moved) {
            Ok(v) if self.opts.criterion == Criterion::L2 => Ok(Some(v / moved.grid().span())),
            Ok(v) => Ok(Some(v)),
            Err(Error::ZeroNorm) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Loss to minimize; infeasible parameters score `+∞`.
    fn loss(&self, p: &[f64]) -> f64 {
        match self.warp(p).and_then(|h| self.value(&h)) {
            Ok(Some(v)) if v.is_finite() => self.opts.criterion.loss(v),
            _ => f64::INFINITY,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Indices of the `k` best scan values, local minima first.
fn best_starts(vals: &[f64], k: usize) -> Vec<usize> {
    let n = vals.len();
    let is_local = |i: usize| {
        (i == 0 || vals[i] <= vals[i - 1]) && (i + 1 == n || vals[i] <= vals[i + 1])
    };
    let mut idx: Vec<usize> = (0..n).filter(|&i| vals[i].is_finite()).collect();
    idx.sort_by(|&a, &b| {
        is_local(b)
            .cmp(&is_local(a))
            .then(vals[a].total_cmp(&vals[b]))
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

fn search_1d(prob: &Problem, lo: f64, hi: f64) -> (Vec<f64>, f64, bool) {
    let opts = prob.opts;
    let xs = linspace(lo, hi, opts.coarse);
    let vals: Vec<f64> = xs.iter().map(|&x| prob.loss(&[x])).collect();
    let step = (hi - lo) / (opts.coarse - 1) as f64;
    let mut best = (vec![f64::NAN], f64::INFINITY, false);
    for i in best_starts(&vals, opts.starts) {
        let (a, b) = ((xs[i] - step).max(lo), (xs[i] + step).min(hi));
        let (x, fx, ok) = golden_section(&mut |x| prob.loss(&[x]), a, b, opts.tol, opts.max_iter);
        let (x, fx) = if vals[i] <= fx { (xs[i], vals[i]) } else { (x, fx) };
        if fx < best.1 {
            best = (vec![x], fx, ok);
        }
    }
    best
}

fn search_affine(prob: &Problem) -> (Vec<f64>, f64, bool) {
    let opts = prob.opts;
    let span = prob.domain.1 - prob.domain.0;
    let d_max = opts.max_shift * span;
    let (u0, u1) = (opts.scale_range.0.ln(), opts.scale_range.1.ln());
    let side = ((opts.coarse as f64).sqrt().ceil() as usize).max(11) | 1;
    let ds = linspace(-d_max, d_max, side);
    let us = linspace(u0, u1, side);
    let feasible = |p: [f64; 2]| p[0].abs() <= d_max + 1e-15 && p[1] >= u0 - 1e-15 && p[1] <= u1 + 1e-15;
    let mut loss = |p: [f64; 2]| if feasible(p) { prob.loss(&p) } else { f64::INFINITY };
    let mut pts = Vec::with_capacity(side * side);
    for &d in &ds {
        for &u in &us {
            pts.push([d, u]);
        }
    }
    let vals: Vec<f64> = pts.iter().map(|&p| loss(p)).collect();
    let mut order: Vec<usize> = (0..pts.len()).filter(|&i| vals[i].is_finite()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    order.truncate(opts.starts);
    let step = [
        (2.0 * d_max / (side - 1) as f64).max(1e-3 * span),
        ((u1 - u0) / (side - 1) as f64).max(1e-3),
    ];
    let mut best = (vec![f64::NAN, f64::NAN], f64::INFINITY, false);
    for i in order {
        let (p, fp, ok) = nelder_mead_2d(&mut loss, pts[i], step, opts.tol, opts.max_iter * 5);
        let (p, fp) = if vals[i] <= fp { (pts[i], vals[i]) } else { (p, fp) };
        if fp < best.1 {
            best = (p.to_vec(), fp, ok);
        }
    }
    best
}

/// Parametric registration of `y` onto `x0`: `aligned = y ∘ h ≈ x0`.
///
/// The criterion is evaluated on the part of `x0`'s domain that `h` maps into
/// `y`'s domain; the L2 criterion is divided by the length of that overlap.
/// With `derivative_order = 1` the criterion compares `D(y ∘ h)` with `Dx0`.
pub fn parametric_register(
    y: &SampledFunction,
    x0: &SampledFunction,
    opts: &ParametricOptions,
) -> Result<PairRegistration> {
    opts.validate()?;
    let (ym, xm) = if opts.derivative_order == 1 {
        (y.derivative(), x0.derivative())
    } else {
        (y.clone(), x0.clone())
    };
    let domain = x0.domain();
    let prob = Problem {
        y_domain: y.domain(),
        points: x0.len().max(64),
        domain,
        y: ym,
        x0: xm,
        opts,
    };
    let span = domain.1 - domain.0;
    let (params, loss, converged) = match opts.family {
        ParametricFamily::Shift => search_1d(&prob, -opts.max_shift * span, opts.max_shift * span),
        ParametricFamily::OneParam => search_1d(&prob, opts.beta_range.0, opts.beta_range.1),
        ParametricFamily::Affine => search_affine(&prob),
    };
    if !loss.is_finite() {
        return Err(Error::EmptyOverlap);
    }
    let warp = prob.warp(&params)?;
    let value = prob.value(&warp)?.ok_or(Error::EmptyOverlap)?;
    Ok(PairRegistration {
        aligned: compose_function(y, &warp),
        warp,
        cost: loss.max(0.0),
        value,
        method: Method::Parametric(opts.criterion),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(c: f64) -> impl Fn(f64) -> f64 {
        move |t| (-(t - c).powi(2) / (2.0 * 0.06f64.powi(2))).exp()
    }

    fn shift_of(h: &Warp) -> f64 {
        h.eval(0.5) - 0.5
    }

    #[test]
    fn registered_pair_returns_identity() {
        let g = Grid::unit(201);
        let x0 = SampledFunction::from_fn(&g, bump(0.5)).unwrap();
        for c in [Criterion::L2, Criterion::NormalizedSeminorm, Criterion::Correlation, Criterion::MinEigenvalue] {
            let r = parametric_register(&x0, &x0, &ParametricOptions::new(ParametricFamily::Shift, c)).unwrap();
            assert!(shift_of(&r.warp).abs() < 1e-6, "{c:?}: {}", shift_of(&r.warp));
        }
    }

    #[test]
    fn recovers_known_shift() {
        let g = Grid::unit(201);
        let x0 = SampledFunction::from_fn(&g, bump(0.4)).unwrap();
        let y = SampledFunction::from_fn(&g, |t| bump(0.4)(t - 0.15)).unwrap();
        let r = parametric_register(&y, &x0, &ParametricOptions::new(ParametricFamily::Shift, Criterion::L2)).unwrap();
        assert!((shift_of(&r.warp) - 0.15).abs() < 1.0 / 200.0, "{}", shift_of(&r.warp));
        assert!(r.cost < 1e-6);
    }

    #[test]
    fn proportional_curves_at_the_optimum() {
        let g = Grid::unit(201);
        let x0 = SampledFunction::from_fn(&g, |t| bump(0.5)(t) + 0.2).unwrap();
        let y = x0.scale(3.0);
        let corr = parametric_register(&y, &x0, &ParametricOptions::new(ParametricFamily::Shift, Criterion::Correlation)).unwrap();
        assert!((corr.value - 1.0).abs() < 1e-9);
        let eig = parametric_register(&y, &x0, &ParametricOptions::new(ParametricFamily::Shift, Criterion::MinEigenvalue)).unwrap();
        assert!(eig.value.abs() < 1e-9, "{}", eig.value);
    }

    #[test]
    fn affine_and_one_param_recovery() {
        let g = Grid::unit(301);
        let x0 = SampledFunction::from_fn(&g, |t| bump(0.35)(t) + 0.6 * bump(0.65)(t)).unwrap();
        let h = make_warp(WarpFamily::Affine, &[0.05, 0.9], (0.0, 1.0)).unwrap();
        let hinv = h.invert().unwrap();
        let y = SampledFunction::from_fn(&g, |t| x0.eval(hinv.eval(t))).unwrap();
        let r = parametric_register(&y, &x0, &ParametricOptions::new(ParametricFamily::Affine, Criterion::L2)).unwrap();
        assert!(r.warp.sup_distance(&h, 101) < 2e-3, "{:?}", r.warp);

        let h = make_warp(WarpFamily::OneParam, &[1.5], (0.0, 1.0)).unwrap();
        let hinv = h.invert().unwrap();
        let y = SampledFunction::from_fn(&g, |t| x0.eval(hinv.eval(t))).unwrap();
        let mut opts = ParametricOptions::new(ParametricFamily::OneParam, Criterion::L2);
        opts.derivative_order = 1;
        let r = parametric_register(&y, &x0, &opts).unwrap();
        assert!(r.warp.sup_distance(&h, 101) < 5e-3);
    }

    #[test]
    fn impossible_overlap_is_reported() {
        let g = Grid::unit(51);
        let x0 = SampledFunction::from_fn(&g, bump(0.5)).unwrap();
        let mut opts = ParametricOptions::default();
        opts.min_overlap = 1.0;
        opts.max_shift = 0.0;
        // Zero shift keeps full overlap, so this still succeeds.
        assert!(parametric_register(&x0, &x0, &opts).is_ok());
        let y = SampledFunction::from_fn(&Grid::uniform(0.0, 0.4, 51).unwrap(), |t| t).unwrap();
        assert_eq!(parametric_register(&y, &x0, &opts), Err(Error::EmptyOverlap));
    }
}
