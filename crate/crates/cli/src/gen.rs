//! `curvereg gen`: write a synthetic fixture panel as CSV.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use curvereg_core::fixtures::{self, Panel};
use curvereg_core::{Grid, SampledFunction, Warp};

use crate::csvio::{to_csv, write_atomic};
use crate::error::CliResult;

/// Sample count of every generated grid.
pub const FIXTURE_POINTS: usize = 257;

/// Offsets of the two populations in `shift-clusters`.
pub const SHIFT_OFFSETS: (f64, f64) = (-0.06, 0.06);

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    /// 20 warped copies of a two-bump curve.
    TwoBumpWarped,
    /// Warped one-bump and two-bump curves, 10 of each.
    TwoCluster,
    /// Two populations of a five-peak spectrum at different shifts.
    ShiftClusters,
    /// 10 copies of the same curve.
    Identical,
    /// Warped curves with three amplitude modes.
    PcaPanel,
    /// Growth-velocity analogs with varying pubertal peak.
    Growth,
    /// A unit step and a half step at different times.
    StepPair,
    /// A bump and its twofold scaling.
    PinchingPair,
}

pub struct Generated {
    pub grid: Grid,
    pub curves: Vec<SampledFunction>,
    /// Generating warps, when the fixture has any.
    pub warps: Option<Vec<Warp>>,
    /// Generating population labels, when the fixture has more than one.
    pub labels: Option<Vec<usize>>,
}

fn from_panel(p: Panel, labelled: bool) -> Generated {
    Generated {
        grid: p.grid,
        curves: p.curves,
        warps: Some(p.warps),
        labels: labelled.then_some(p.labels),
    }
}

fn pair(p: (SampledFunction, SampledFunction)) -> Generated {
    Generated {
        grid: p.0.grid().clone(),
        curves: vec![p.0, p.1],
        warps: None,
        labels: None,
    }
}

pub fn generate(fixture: Fixture, seed: u64) -> CliResult<Generated> {
    let n = FIXTURE_POINTS;
    Ok(match fixture {
        Fixture::TwoBumpWarped => from_panel(fixtures::warped_panel(fixtures::two_bump, 20, n, 0.4, seed)?, false),
        Fixture::TwoCluster => from_panel(fixtures::two_cluster_panel(10, n, seed)?, true),
        Fixture::ShiftClusters => from_panel(fixtures::shift_cluster_panel(10, n, SHIFT_OFFSETS, seed)?, true),
        Fixture::Identical => {
            let grid = Grid::unit(n);
            let c = SampledFunction::from_fn(&grid, fixtures::two_bump)?;
            Generated {
                grid,
                curves: vec![c; 10],
                warps: None,
                labels: None,
            }
        }
        Fixture::PcaPanel => from_panel(fixtures::pca_panel(20, n, 0.3, seed)?, false),
        Fixture::Growth => from_panel(fixtures::growth_panel(20, n, seed)?.0, false),
        Fixture::StepPair => pair(fixtures::step_pair(n)?),
        Fixture::PinchingPair => pair(fixtures::pinching_pair(n)?),
    })
}

pub fn curve_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i:02}")).collect()
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("fixture");
    out.with_file_name(format!("{stem}.{suffix}.csv"))
}

/// Write the panel to `out`; labels and generating warps go to
/// `<stem>.labels.csv` and `<stem>.warps.csv` beside it.
pub fn cmd_gen(fixture: Fixture, out: &Path, seed: u64) -> CliResult<Vec<PathBuf>> {
    let g = generate(fixture, seed)?;
    let names = curve_names(g.curves.len());
    let t = g.grid.points();
    let cols: Vec<Vec<f64>> = g.curves.iter().map(|c| c.values().to_vec()).collect();
    write_atomic(out, &to_csv("t", t, &names, &cols)?)?;
    let mut written = vec![out.to_path_buf()];
    if let Some(warps) = &g.warps {
        let cols: Vec<Vec<f64>> = warps.iter().map(|w| w.sample(&g.grid)).collect();
        let path = sidecar(out, "warps");
        write_atomic(&path, &to_csv("t", t, &names, &cols)?)?;
        written.push(path);
    }
    if let Some(labels) = &g.labels {
        let mut s = String::from("curve,label\n");
        for (id, l) in names.iter().zip(labels) {
            s.push_str(&format!("{id},{l}\n"));
        }
        let path = sidecar(out, "labels");
        write_atomic(&path, s.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
