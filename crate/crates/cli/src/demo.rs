//! `curvereg demo`: reproductions of classic registration pathologies.

use std::path::Path;

use clap::ValueEnum;
use curvereg_core::fixtures::{self, SineWarp};
use curvereg_core::register::{
    dtw_l2, elastic_align, parametric_register, Criterion, DpOptions,
    ParametricFamily, ParametricOptions,
};
use curvereg_core::{make_warp, Grid, Warp, WarpFamily};
use serde::Serialize;
use serde_json::Value;

use crate::align::pretty;
use crate::csvio::write_atomic;
use crate::error::CliResult;
use crate::svg::{self, Series};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    Pinching,
    InverseConsistency,
    WarpFamilies,
}

impl Demo {
    pub fn file_stem(self) -> &'static str {
        match self {
            Demo::Pinching => "pinching",
            Demo::InverseConsistency => "inverse_consistency",
            Demo::WarpFamilies => "warp_families",
        }
    }
}

const POINTS: usize = 257;
/// Resolution at which warp deviations are measured.
const PROBE: usize = 1025;

#[derive(Clone, Debug, Serialize)]
pub struct PinchingReport {
    /// L2 cost of the best pure shift.
    pub cost_shift: f64,
    pub shift: f64,
    /// L2 cost of the unpenalized flexible lattice alignment.
    pub cost_flexible: f64,
    pub ratio: f64,
    pub max_slope_flexible: f64,
    pub penalty: f64,
    pub penalized_cost: f64,
    /// Sup distance of the penalized warp from the identity, in lattice cells.
    pub penalized_deviation_cells: f64,
}

/// A bump and its double: a flexible lattice squeezes the larger one into
/// the smaller, while a roughness penalty keeps the warp near the identity.
pub fn pinching() -> CliResult<(PinchingReport, String)> {
    let (bump, big) = fixtures::pinching_pair(POINTS)?;
    let shift = parametric_register(&big, &bump, &ParametricOptions::new(ParametricFamily::Shift, Criterion::L2))?;
    let flex_opts = DpOptions::flexible(8);
    let flex = dtw_l2(&bump, &big, &flex_opts)?;
    let penalty = 10.0;
    let pen = dtw_l2(&bump, &big, &flex_opts.clone().with_penalty(penalty))?;
    let grid = bump.grid();
    let max_slope = grid
        .points()
        .iter()
        .map(|&t| flex.warp.slope(t))
        .fold(0.0, f64::max);
    let report = PinchingReport {
        cost_shift: shift.cost,
        shift: shift.warp.eval(0.0),
        cost_flexible: flex.cost,
        ratio: flex.cost / shift.cost,
        max_slope_flexible: max_slope,
        penalty,
        penalized_cost: pen.cost,
        penalized_deviation_cells: pen.warp.deviation_from_identity(PROBE) / flex_opts.cell(),
    };
    let t = grid.points();
    let mut p1 = svg::Panel::new("bump and its double");
    p1.push(Series::new(t, bump.values(), Some(0)));
    p1.push(Series::new(t, big.values(), Some(1)));
    let mut p2 = svg::Panel::new("flexible lattice alignment");
    p2.push(Series::new(t, bump.values(), Some(0)));
    p2.push(Series::new(t, flex.aligned.values(), Some(1)).bold());
    let mut p3 = svg::Panel::new("warps: flexible vs penalized");
    p3.push(Series::new(t, &flex.warp.sample(grid), Some(1)));
    p3.push(Series::new(t, &pen.warp.sample(grid), Some(2)));
    p3.push(Series::new(t, t, None));
    Ok((report, svg::render(&[p1, p2, p3])))
}

#[derive(Clone, Debug, Serialize)]
pub struct InverseReport {
    /// L2 cost with the half step moving onto the unit step.
    pub l2_cost_first_fixed: f64,
    /// L2 cost with the unit step moving onto the half step.
    pub l2_cost_second_fixed: f64,
    /// `|a − b| / max(a, b)` of the two one-sided costs.
    pub l2_relative_gap: f64,
    pub elastic_distance_12: f64,
    pub elastic_distance_21: f64,
    /// Sup distance of `h₁₂ ∘ h₂₁` from the identity, in lattice cells.
    pub elastic_inconsistency_cells: f64,
}

/// A unit step against a half step: the one-sided L2 costs disagree while
/// the elastic distance is symmetric.
pub fn inverse_consistency() -> CliResult<(InverseReport, String)> {
    let (x1, x2) = fixtures::step_pair(POINTS)?;
    let opts = DpOptions::default();
    let a = dtw_l2(&x1, &x2, &opts)?;
    let b = dtw_l2(&x2, &x1, &opts)?;
    let (e12, d12) = elastic_align(&x1, &x2, &opts)?;
    let (e21, d21) = elastic_align(&x2, &x1, &opts)?;
    let loop_warp = e12.warp.compose(&e21.warp)?;
    let report = InverseReport {
        l2_cost_first_fixed: a.cost,
        l2_cost_second_fixed: b.cost,
        l2_relative_gap: (a.cost - b.cost).abs() / a.cost.max(b.cost),
        elastic_distance_12: d12,
        elastic_distance_21: d21,
        elastic_inconsistency_cells: loop_warp.deviation_from_identity(PROBE) / opts.cell(),
    };
    let t = x1.grid().points();
    let mut p1 = svg::Panel::new("half step onto unit step (L2)");
    p1.push(Series::new(t, x1.values(), Some(0)));
    p1.push(Series::new(t, a.aligned.values(), Some(1)).bold());
    let mut p2 = svg::Panel::new("unit step onto half step (L2)");
    p2.push(Series::new(t, x2.values(), Some(1)));
    p2.push(Series::new(t, b.aligned.values(), Some(0)).bold());
    let mut p3 = svg::Panel::new("elastic warps both ways");
    p3.push(Series::new(t, &e12.warp.sample(x1.grid()), Some(1)));
    p3.push(Series::new(t, &e21.warp.sample(x1.grid()), Some(0)));
    p3.push(Series::new(t, t, None));
    Ok((report, svg::render(&[p1, p2, p3])))
}

/// Four warp families on [0, 1] side by side.
pub fn warp_families() -> CliResult<(Value, String)> {
    let grid = Grid::unit(POINTS);
    let t = grid.points();
    let d = (0.0, 1.0);
    let families: Vec<(&str, Vec<Warp>)> = vec![
        ("scale", [0.7, 0.85, 1.15, 1.3].iter().map(|&a| make_warp(WarpFamily::Scale, &[a], d)).collect::<Result<_, _>>()?),
        ("shift", [-0.2, -0.1, 0.1, 0.2].iter().map(|&c| make_warp(WarpFamily::Shift, &[c], d)).collect::<Result<_, _>>()?),
        (
            "affine",
            [(-0.1, 1.2), (0.1, 0.8), (0.05, 1.1), (-0.05, 0.9)]
                .iter()
                .map(|&(c, a)| make_warp(WarpFamily::Affine, &[c, a], d))
                .collect::<Result<_, _>>()?,
        ),
        (
            "diffeomorphism",
            [[0.5, 0.0, 0.0], [-0.5, 0.0, 0.0], [0.3, -0.3, 0.2], [-0.2, 0.4, 0.2]]
                .iter()
                .map(|c| SineWarp { coef: c.to_vec() }.to_warp(POINTS))
                .collect::<Result<_, _>>()?,
        ),
    ];
    let mut panels = Vec::new();
    for (name, warps) in &families {
        let mut p = svg::Panel::new(*name);
        for (i, w) in warps.iter().enumerate() {
            p.push(Series::new(t, &w.sample(&grid), Some(i)));
        }
        p.push(Series::new(t, t, None));
        panels.push(p);
    }
    let summary = serde_json::json!({
        "panels": families.iter().map(|(n, _)| *n).collect::<Vec<_>>(),
    });
    Ok((summary, svg::render(&panels)))
}

/// Run a demo, writing `<name>.json` and `<name>.svg` into `out`.
pub fn cmd_demo(demo: Demo, out: &Path) -> CliResult<Value> {
    let (json, svg) = match demo {
        Demo::Pinching => {
            let (r, s) = pinching()?;
            (serde_json::to_value(r).expect("serializable"), s)
        }
        Demo::InverseConsistency => {
            let (r, s) = inverse_consistency()?;
            (serde_json::to_value(r).expect("serializable"), s)
        }
        Demo::WarpFamilies => warp_families()?,
    };
    let stem = demo.file_stem();
    write_atomic(&out.join(format!("{stem}.json")), &pretty(&json))?;
    write_atomic(&out.join(format!("{stem}.svg")), svg.as_bytes())?;
    Ok(json)
}
