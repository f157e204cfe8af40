use super::{check_panel, iterate, AlignOptions, AlignmentResult};
use crate::error::Result;
use crate::function::{mean_function, Grid, SampledFunction};
use crate::register::{compose_function, elastic_align, DpOptions};
use crate::srvf::{srvf_inverse, srvf_transform, Srvf};
use crate::warp::{from_sqrt_slope, SqrtSlope, Warp};

#[derive(Clone, Debug, PartialEq)]
pub struct KarcherOptions {
    pub dp: DpOptions,
    pub align: AlignOptions,
    /// Rounds of phase re-centering after the iterations settle.
    pub centering_rounds: usize,
    /// Sup-norm distance of the mean warp from the identity that ends re-centering.
    pub centering_tol: f64,
    /// Points of the grid on which square-root slopes are averaged.
    pub centering_grid: usize,
}

impl Default for KarcherOptions {
    fn default() -> Self {
        KarcherOptions {
            dp: DpOptions::default(),
            align: AlignOptions::default(),
            centering_rounds: 10,
            centering_tol: 1e-4,
            centering_grid: 1025,
        }
    }
}

/// Template whose SRVF is the mean SRVF of `curves`, started at their mean initial value.
fn srvf_mean(curves: &[SampledFunction]) -> Result<SampledFunction> {
    let qs: Vec<SampledFunction> = curves
        .iter()
        .map(|c| srvf_transform(c).into_function())
        .collect();
    let start = curves.iter().map(|c| c.values()[0]).sum::<f64>() / curves.len() as f64;
    Ok(srvf_inverse(&Srvf::new(mean_function(&qs)?), start))
}

/// Mean of the warps on the square-root-slope sphere, as a warp of `domain`.
pub fn mean_warp(warps: &[Warp], domain: (f64, f64), grid_points: usize) -> Result<Warp> {
    let grid = Grid::unit(grid_points);
    let psis = warps
        .iter()
        .map(|w| w.to_sqrt_slope_on(&grid.rescaled(domain.0, domain.1)?))
        .collect::<Result<Vec<_>>>()?;
    let mean = SqrtSlope::chordal_mean(&psis, &grid)?;
    from_sqrt_slope(&mean, 0.0)?.rescaled(domain.0, domain.1)
}

/// Elastic mean of the panel under the amplitude distance.
///
/// Each pass aligns every curve to the template with the elastic engine and
/// replaces the template by the curve whose SRVF is the mean of the aligned
/// SRVFs. Afterwards the warps are re-centered so their mean on the
/// square-root-slope sphere is the identity, and the template follows.
pub fn karcher_mean(curves: &[SampledFunction], opts: &KarcherOptions) -> Result<AlignmentResult> {
    check_panel(curves, 2)?;
    let initial = match &opts.align.initial_template {
        Some(t) => t.clone(),
        None => srvf_mean(curves)?,
    };
    let dp = &opts.dp;
    let mut result = iterate(
        curves,
        initial,
        &opts.align,
        &|c, t| elastic_align(t, c, dp).map(|(r, _)| r),
        &srvf_mean,
    )?;
    let domain = curves[0].domain();
    let active: Vec<usize> = (0..curves.len())
        .filter(|i| !result.failed.contains(i))
        .collect();
    for _ in 0..opts.centering_rounds {
        let warps: Vec<Warp> = active.iter().map(|&i| result.warps[i].clone()).collect();
        let gamma = mean_warp(&warps, domain, opts.centering_grid)?;
        if gamma.deviation_from_identity(opts.centering_grid) <= opts.centering_tol {
            break;
        }
        let inv = gamma.invert()?;
        for &i in &active {
            let w = result.warps[i].compose(&inv)?;
            result.aligned[i] = compose_function(&curves[i], &w);
            result.warps[i] = w;
        }
    }
    let aligned: Vec<SampledFunction> = active.iter().map(|&i| result.aligned[i].clone()).collect();
    result.template = srvf_mean(&aligned)?;
    result.variance_after = crate::function::integrated_variance(&result.aligned)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn identical_curves() {
        let g = Grid::unit(101);
        let c = SampledFunction::from_fn(&g, fixtures::two_bump).unwrap();
        let opts = KarcherOptions {
            dp: DpOptions::default().with_grid_size(33),
            ..Default::default()
        };
        let r = karcher_mean(&[c.clone(), c.clone(), c.clone()], &opts).unwrap();
        for w in &r.warps {
            assert!(w.deviation_from_identity(101) < 1e-9);
        }
        let err = r.template.sub(&c).unwrap();
        assert!(err.values().iter().all(|v| v.abs() < 1e-2), "{:?}", err.values());
    }

    #[test]
    fn two_curves_are_centered() {
        let g = Grid::unit(257);
        let h = fixtures::smooth_warp(&mut fixtures::rng(4), 0.4).unwrap();
        let x = SampledFunction::from_fn(&g, fixtures::two_bump).unwrap();
        let xh = compose_function(&x, &h);
        let r = karcher_mean(&[x, xh], &KarcherOptions::default()).unwrap();
        let rel = r.warps[0].compose(&r.warps[1].invert().unwrap()).unwrap();
        assert!(rel.sup_distance(&h, 513) < 2.0 / 128.0, "{}", rel.sup_distance(&h, 513));
        let m = mean_warp(&r.warps, (0.0, 1.0), 1025).unwrap();
        assert!(m.deviation_from_identity(1025) < 1e-2);
    }
}
