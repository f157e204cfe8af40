//! Closed-form and synthetic-truth checks.

use std::f64::consts::PI;

use curvereg_core::fixtures::{self, gaussian};
use curvereg_core::multalign::{kmean_align, procrustes_align, register_to_pca, variance_decomposition, AlignOptions, Engine, PcaOptions};
use curvereg_core::register::{
    compose_function, criterion_value, detect_peaks, dtw_l2, elastic_align, landmark_register,
    parametric_register, Criterion, DpOptions, LandmarkInterp, ParametricFamily, ParametricOptions,
};
use curvereg_core::{
    fr_distance, from_log_derivative, from_sqrt_slope, group_action, inner_product,
    make_warp, srvf_inverse, srvf_transform, Grid, Interpolation, LogDerivativeRep,
    SampledFunction, WarpFamily,
};

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn interpolation_and_calculus_against_analytic_values() {
    let coarse = SampledFunction::from_fn(&Grid::unit(64), |t| (2.0 * PI * t).sin()).unwrap();
    let fine = Grid::unit(256);
    let up = coarse.resample(&fine, Interpolation::Cubic).unwrap();
    let exact: Vec<f64> = fine.points().iter().map(|t| (2.0 * PI * t).sin()).collect();
    assert!(sup(up.values(), &exact) < 1e-4);

    let g = Grid::uniform(0.0, PI, 512).unwrap();
    let d = SampledFunction::from_fn(&g, f64::sin).unwrap().derivative();
    let cos: Vec<f64> = g.points().iter().map(|t| t.cos()).collect();
    assert!(sup(&d.values()[1..511], &cos[1..511]) < 1e-4);

    let g = Grid::unit(1001);
    let s = SampledFunction::from_fn(&g, |t| (2.0 * PI * t).sin()).unwrap();
    let c = SampledFunction::from_fn(&g, |t| (2.0 * PI * t).cos()).unwrap();
    assert!(inner_product(&s, &c).unwrap().abs() < 1e-6);
}

#[test]
fn one_parameter_family_values() {
    let g = Grid::unit(101);
    let near_id = make_warp(WarpFamily::OneParam, &[1e-12], (0.0, 1.0)).unwrap();
    assert!(g.points().iter().all(|&t| (near_id.eval(t) - t).abs() < 1e-6));
    let h = make_warp(WarpFamily::OneParam, &[1.0], (0.0, 1.0)).unwrap();
    assert!((h.eval(0.5) - 0.37754).abs() < 1e-5);
    let expected = (0.5f64.exp() - 1.0) / (1f64.exp() - 1.0);
    assert!((h.eval(0.5) - expected).abs() < 1e-15);
    let inv = h.invert().unwrap();
    for &s in g.points() {
        let closed = (1.0 + s * (1f64.exp() - 1.0)).ln();
        assert!((inv.eval(s) - closed).abs() < 1e-12);
    }
}

#[test]
fn log_derivative_round_trip() {
    let g = Grid::unit(4097);
    let w = SampledFunction::from_fn(&g, |t| t).unwrap();
    let h = from_log_derivative(&LogDerivativeRep::anchored(w.clone(), 0.0, 1.0).unwrap()).unwrap();
    let target = make_warp(WarpFamily::OneParam, &[1.0], (0.0, 1.0)).unwrap();
    assert!(h.sup_distance(&target, 2001) < 1e-6);

    let back = h.to_log_derivative(1.0).unwrap();
    let probe = Grid::unit(513);
    // Piecewise-linear slopes are cell averages; compare after removing the constant.
    let diff: Vec<f64> = probe
        .points()
        .iter()
        .map(|&t| back.w.eval(t) - w.eval(t))
        .collect();
    let mean = diff.iter().sum::<f64>() / diff.len() as f64;
    assert!(diff.iter().all(|d| (d - mean).abs() < 1e-3));
}

#[test]
fn sqrt_slope_of_a_parabola() {
    let g = Grid::unit(2049);
    let h = curvereg_core::Warp::piecewise_linear(g.clone(), g.points().iter().map(|t| t * t).collect()).unwrap();
    let psi = h.to_sqrt_slope_on(&g).unwrap();
    assert!((psi.norm_squared() - 1.0).abs() < 1e-9);
    let exact: Vec<f64> = g.points().iter().map(|t| (2.0 * t).sqrt()).collect();
    // Interior agreement; node slopes average the two neighbouring cells.
    assert!(sup(&psi.psi().values()[8..], &exact[8..]) < 1e-2);
    let back = from_sqrt_slope(&psi, 0.0).unwrap();
    assert!(back.sup_distance(&h, 1001) < 1e-4);
}

#[test]
fn srvf_closed_forms() {
    let g = Grid::unit(1024);
    let x = SampledFunction::from_fn(&g, |t| (2.0 * PI * t).sin()).unwrap();
    let back = srvf_inverse(&srvf_transform(&x), 0.0);
    assert!(sup(back.values(), x.values()) < 1e-3);

    // d(t, t²)² = ∫ (1 − √(2t))² = 2 − 4√2/3.
    let g = Grid::unit(4001);
    let a = SampledFunction::from_fn(&g, |t| t).unwrap();
    let b = SampledFunction::from_fn(&g, |t| t * t).unwrap();
    let exact = (2.0 - 4.0 * 2f64.sqrt() / 3.0).sqrt();
    assert!((fr_distance(&a, &b).unwrap() - exact).abs() < 1e-3);

    let g = Grid::unit(1024);
    let bump = SampledFunction::from_fn(&g, gaussian(0.5, 0.1)).unwrap();
    let q = srvf_transform(&bump);
    let h = make_warp(WarpFamily::OneParam, &[1.0], (0.0, 1.0)).unwrap();
    let acted = group_action(&q, &h).unwrap();
    assert!((acted.norm() - q.norm()).abs() < 1e-3);
    let direct = srvf_transform(&compose_function(&bump, &h));
    let e = sup(acted.values(), direct.values());
    let i = acted.values().iter().zip(direct.values()).position(|(a, b)| (a - b).abs() == e).unwrap();
    assert!(e < 1e-2, "{e} at {i}");
}

#[test]
fn criteria_on_analytic_pairs() {
    let g = Grid::unit(1001);
    let s = SampledFunction::from_fn(&g, |t| (2.0 * PI * t).sin()).unwrap();
    let c = SampledFunction::from_fn(&g, |t| (2.0 * PI * t).cos()).unwrap();
    assert!((criterion_value(Criterion::MinEigenvalue, &s, &c).unwrap() - 0.5).abs() < 1e-3);
    let x = SampledFunction::from_fn(&g, gaussian(0.4, 0.1)).unwrap();
    let y = x.scale(3.5);
    assert!((criterion_value(Criterion::Correlation, &x, &y).unwrap() - 1.0).abs() < 1e-9);
    assert!(criterion_value(Criterion::MinEigenvalue, &x, &y).unwrap().abs() < 1e-9);
    assert!(criterion_value(Criterion::NormalizedSeminorm, &x, &y).unwrap().abs() < 1e-9);
}

#[test]
fn lattice_recovers_a_periodic_shift() {
    let g = Grid::unit(513);
    let y1 = SampledFunction::from_fn(&g, |t| (2.0 * PI * t).sin().powi(2)).unwrap();
    let y2 = SampledFunction::from_fn(&g, |t| (2.0 * PI * (t - 0.2)).sin().powi(2)).unwrap();
    // y2 ∘ h ≈ y1 with h(t) = t + 0.2.
    let opts = DpOptions::default();
    let r = dtw_l2(&y1, &y2, &opts).unwrap();
    for i in 0..=40 {
        let t = 0.2 + 0.4 * i as f64 / 40.0;
        assert!((r.warp.eval(t) - (t + 0.2)).abs() <= opts.cell() + 1e-12, "t = {t}");
    }
}

#[test]
fn elastic_recovers_a_known_warp() {
    let n = 513;
    let g = Grid::unit(n);
    let x1 = SampledFunction::from_fn(&g, fixtures::two_bump).unwrap();
    let h = fixtures::SineWarp { coef: vec![0.25, -0.1, 0.05] };
    let x2 = SampledFunction::from_fn(&g, |t| fixtures::two_bump(h.eval(t))).unwrap();
    let opts = DpOptions::default();
    // x2 ∘ γ ≈ x1, so γ ≈ h⁻¹.
    let (r, d) = elastic_align(&x1, &x2, &opts).unwrap();
    let truth = h.to_warp(fixtures::WARP_RESOLUTION).unwrap().invert().unwrap();
    assert!(r.warp.sup_distance(&truth, 1025) < 2.0 * opts.cell());
    assert!(d < 0.05 * srvf_transform(&x1).norm(), "{d}");
}

#[test]
fn landmarks_and_peaks() {
    let g = Grid::unit(1001);
    let f = SampledFunction::from_fn(&g, |t| gaussian(0.3, 0.05)(t) + gaussian(0.7, 0.05)(t)).unwrap();
    let peaks = detect_peaks(&f, 0.1);
    assert_eq!(peaks.len(), 2);
    assert!((peaks[0] - 0.3).abs() < 1e-3 && (peaks[1] - 0.7).abs() < 1e-3);

    let (panel, _) = fixtures::growth_panel(8, 1001, 3).unwrap();
    let found: Vec<f64> = panel.curves.iter().map(|c| *detect_peaks(c, 0.2).last().unwrap()).collect();
    let target = found.iter().sum::<f64>() / found.len() as f64;
    for (c, &p) in panel.curves.iter().zip(&found) {
        let h = landmark_register(&[p], &[target], (0.0, 1.0), LandmarkInterp::Polygonal).unwrap();
        let aligned = compose_function(c, &h);
        let peak = *detect_peaks(&aligned, 0.2).last().unwrap();
        assert!((peak - target).abs() <= 1e-3, "{peak} vs {target}");
    }
}

#[test]
fn parametric_shift_cases() {
    let g = Grid::unit(401);
    let x0 = SampledFunction::from_fn(&g, gaussian(0.4, 0.07)).unwrap();
    for crit in [Criterion::L2, Criterion::NormalizedSeminorm, Criterion::Correlation, Criterion::MinEigenvalue] {
        let r = parametric_register(&x0, &x0, &ParametricOptions::new(ParametricFamily::Shift, crit)).unwrap();
        assert!(r.warp.eval(0.3) - 0.3 < 1e-6, "{crit:?}");
    }
    let y = SampledFunction::from_fn(&g, |t| gaussian(0.4, 0.07)(t - 0.15)).unwrap();
    let r = parametric_register(&y, &x0, &ParametricOptions::new(ParametricFamily::Shift, Criterion::L2)).unwrap();
    assert!((r.warp.eval(0.0) - 0.15).abs() <= 1.0 / 400.0);
}

#[test]
fn shift_populations_separate() {
    let p = fixtures::shift_cluster_panel(5, 257, (0.0, 0.1), 11).unwrap();
    let mut opts = ParametricOptions::new(ParametricFamily::Shift, Criterion::L2);
    opts.max_shift = 0.04;
    let c = kmean_align(&p.curves, 2, &Engine::Parametric(opts), &AlignOptions::default(), 11).unwrap();
    let same = c.labels.iter().zip(&p.labels).all(|(a, b)| a == b);
    let flipped = c.labels.iter().zip(&p.labels).all(|(a, b)| a != b);
    assert!(same || flipped, "{:?}", c.labels);
    // Template peak positions differ by the population offset.
    let peak = |f: &SampledFunction| detect_peaks(f, 0.3)[0];
    let sep = (peak(&c.per_cluster[0].template) - peak(&c.per_cluster[1].template)).abs();
    assert!((sep - 0.1).abs() <= 1.5 / 256.0, "{sep}");
}

#[test]
fn pca_registration_explains_variance() {
    let p = fixtures::pca_panel(12, 129, 0.3, 5).unwrap();
    let opts = PcaOptions { dp: DpOptions::default().with_grid_size(65).with_penalty(0.1), ..PcaOptions::default() };
    let r = register_to_pca(&p.curves, 3, &opts).unwrap();
    assert!(r.r_squared >= 0.3, "{}", r.r_squared);
}

#[test]
fn variance_splits_by_panel_type() {
    let phase = fixtures::warped_panel(fixtures::two_bump, 8, 129, 0.4, 8).unwrap();
    let dp = DpOptions::default().with_grid_size(65);
    let r = procrustes_align(&phase.curves, &Engine::Elastic(dp.clone()), &AlignOptions::default()).unwrap();
    let v = variance_decomposition(&r).unwrap();
    assert!(v.amplitude_variance < 0.05 * r.variance_before);

    let g = Grid::unit(129);
    let amp: Vec<SampledFunction> = [0.8, 0.9, 1.0, 1.1, 1.2]
        .iter()
        .map(|a| SampledFunction::from_fn(&g, |t| a * fixtures::two_bump(t)).unwrap())
        .collect();
    let r = procrustes_align(&amp, &Engine::DtwL2(dp.clone().with_penalty(1.0)), &AlignOptions::default()).unwrap();
    let v = variance_decomposition(&r).unwrap();
    assert!(v.phase_deviation.iter().all(|&d| d < 2.0 * dp.cell()), "{:?}", v.phase_deviation);
}
