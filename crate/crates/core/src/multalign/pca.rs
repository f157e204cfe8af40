use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{check_panel, AlignmentResult};
use crate::error::{Error, Result};
use crate::function::{integrated_variance, mean_function, SampledFunction};
use crate::register::{dtw_l2, DpOptions};
use crate::warp::Warp;

#[derive(Clone, Debug, PartialEq)]
pub struct PcaOptions {
    /// Lattice options of the penalized least-squares registration.
    pub dp: DpOptions,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            dp: DpOptions::default().with_penalty(0.1),
            max_iter: 20,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcaAlignment {
    /// `template` is the PCA mean; `objective_trace` holds the mean squared
    /// residual of the K-component fit, starting with the unregistered sample.
    pub result: AlignmentResult,
    /// L²-orthonormal eigenfunctions of the aligned sample.
    pub components: Vec<SampledFunction>,
    pub residual_before: f64,
    pub residual_after: f64,
    /// `1 − residual_after / residual_before`.
    pub r_squared: f64,
}

struct Fit {
    mean: SampledFunction,
    components: Vec<SampledFunction>,
    fits: Vec<SampledFunction>,
    residual: f64,
}

fn trapezoid_weights(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { p[i] - p[i - 1] } else { 0.0 };
            let right = if i + 1 < n { p[i + 1] - p[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Mean and top-`k` components of the sample in the trapezoidal L² geometry.
fn pca_fit(curves: &[SampledFunction], k: usize) -> Result<Fit> {
    let mean = mean_function(curves)?;
    let grid = mean.grid().clone();
    let w = trapezoid_weights(grid.points());
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let (n, m) = (curves.len(), grid.len());
    let a = DMatrix::from_fn(n, m, |i, j| (curves[i].values()[j] - mean.values()[j]) * sw[j]);
    let svd = a.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().expect("requested");
    let u = svd.u.as_ref().expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]).then(x.cmp(&y)));
    order.truncate(k);
    let components = order
        .iter()
        .map(|&c| {
            let vals = (0..m).map(|j| v_t[(c, j)] / sw[j].max(f64::MIN_POSITIVE)).collect();
            SampledFunction::new(grid.clone(), vals)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut fits = Vec::with_capacity(n);
    let mut residual = 0.0;
    for i in 0..n {
        let mut vals = mean.values().to_vec();
        for &c in &order {
            let score = u[(i, c)] * svd.singular_values[c];
            for (j, v) in vals.iter_mut().enumerate() {
                *v += score * v_t[(c, j)] / sw[j].max(f64::MIN_POSITIVE);
            }
        }
        let fit = SampledFunction::new(grid.clone(), vals)?;
        let d = curves[i].sub(&fit)?;
        residual += crate::function::inner_product(&d, &d)?;
        fits.push(fit);
    }
    Ok(Fit {
        mean,
        components,
        fits,
        residual: residual / n as f64,
    })
}

/// Registration of each curve onto its own K-component principal-component fit.
///
/// Alternates a PCA of the aligned sample with penalized least-squares lattice
/// registration of every original curve onto its fit. A pass that would raise
/// the mean squared residual is discarded.
pub fn register_to_pca(curves: &[SampledFunction], k: usize, opts: &PcaOptions) -> Result<PcaAlignment> {
    check_panel(curves, 2)?;
    if k == 0 {
        return Err(Error::BadParam("need at least one component".into()));
    }
    if curves.len() < k + 1 {
        return Err(Error::RankDeficient {
            curves: curves.len(),
            components: k,
        });
    }
    let identity = Warp::identity(curves[0].domain())?;
    let mut warps = vec![identity; curves.len()];
    let mut aligned = curves.to_vec();
    let mut fit = pca_fit(&aligned, k)?;
    let residual_before = fit.residual;
    let floor = 1e-14 * curves.iter().map(|c| crate::function::l2_norm(c).powi(2)).sum::<f64>() / curves.len() as f64;
    let mut trace = vec![residual_before];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iter.max(1) {
        if fit.residual <= floor {
            converged = true;
            break;
        }
        let regs = curves
            .par_iter()
            .zip(&fit.fits)
            .map(|(c, f)| dtw_l2(f, c, &opts.dp))
            .collect::<Result<Vec<_>>>()?;
        let next_aligned: Vec<SampledFunction> = regs.iter().map(|r| r.aligned.clone()).collect();
        let next_fit = pca_fit(&next_aligned, k)?;
        let prev = fit.residual;
        if next_fit.residual > prev {
            converged = true;
            break;
        }
        iterations += 1;
        warps = regs.into_iter().map(|r| r.warp).collect();
        aligned = next_aligned;
        fit = next_fit;
        trace.push(fit.residual);
        if (prev - fit.residual) / prev.max(floor) < opts.tol {
            converged = true;
            break;
        }
    }
    let residual_after = fit.residual;
    let r_squared = if residual_before > 0.0 {
        1.0 - residual_after / residual_before
    } else {
        0.0
    };
    let costs = aligned
        .iter()
        .zip(&fit.fits)
        .map(|(a, f)| a.sub(f).and_then(|d| crate::function::inner_product(&d, &d)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PcaAlignment {
        result: AlignmentResult {
            template: fit.mean,
            variance_before: integrated_variance(curves)?,
            variance_after: integrated_variance(&aligned)?,
            warps,
            aligned,
            costs,
            iterations,
            objective_trace: trace,
            converged,
            failed: Vec::new(),
        },
        components: fit.components,
        residual_before,
        residual_after,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::function::Grid;

    #[test]
    fn components_are_orthonormal() {
        let p = fixtures::pca_panel(12, 201, 0.0, 2).unwrap();
        let f = pca_fit(&p.curves, 3).unwrap();
        for (a, x) in f.components.iter().enumerate() {
            for (b, y) in f.components.iter().enumerate() {
                let ip = crate::function::inner_product(x, y).unwrap();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-9, "{a} {b} {ip}");
            }
        }
        // Three-component structure without warps is fitted exactly.
        assert!(f.residual < 1e-20);
    }

    #[test]
    fn span_without_phase_gives_identity() {
        let g = Grid::unit(101);
        let curves: Vec<SampledFunction> = (0..6)
            .map(|i| SampledFunction::from_fn(&g, |t| fixtures::two_bump(t) * (1.0 + 0.1 * i as f64)).unwrap())
            .collect();
        let r = register_to_pca(&curves, 1, &PcaOptions::default()).unwrap();
        assert!(r.residual_after < 1e-20);
        for w in &r.result.warps {
            assert!(w.deviation_from_identity(101) < 1e-12);
        }
    }

    #[test]
    fn saturated_and_rank_deficient() {
        let p = fixtures::pca_panel(5, 101, 0.3, 4).unwrap();
        let r = register_to_pca(&p.curves, 4, &PcaOptions::default()).unwrap();
        assert!(r.residual_after < 1e-20);
        assert_eq!(
            register_to_pca(&p.curves, 5, &PcaOptions::default()).err(),
            Some(Error::RankDeficient { curves: 5, components: 5 })
        );
    }

    #[test]
    fn registration_explains_phase() {
        let p = fixtures::pca_panel(15, 201, 0.4, 8).unwrap();
        let r = register_to_pca(&p.curves, 3, &PcaOptions::default()).unwrap();
        assert!(r.r_squared >= 0.3, "{}", r.r_squared);
        assert!(r.result.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
