//! `curvereg align`: run one configured registration over a CSV panel.

use std::path::Path;

use curvereg_core::function::{integrated_variance, mean_function};
use curvereg_core::multalign::{
    karcher_mean, kmean_align, procrustes_align, register_to_pca, variance_decomposition,
    AlignOptions, AlignmentResult, KarcherOptions, PcaOptions,
};
use curvereg_core::register::{
    compose_function, detect_peaks, dtw_l2, elastic_align, landmark_register, parametric_register,
    ParametricFamily,
};
use curvereg_core::{Grid, Interpolation, SampledFunction, ValidateOptions, Warp};
use serde_json::{json, Map, Value};

use crate::config::{Config, MethodName};
use crate::csvio::{ingest_csv, to_csv, write_atomic, CurvePanel};
use crate::error::{CliError, CliResult};
use crate::svg;

/// Registration output on the unit interval, before conversion to input units.
struct Outcome {
    template_names: Vec<String>,
    templates: Vec<SampledFunction>,
    warps: Vec<Warp>,
    aligned: Vec<SampledFunction>,
    iterations: usize,
    labels: Option<Vec<usize>>,
    extra: Map<String, Value>,
}

fn from_result(r: AlignmentResult, extra: Map<String, Value>) -> Outcome {
    let mut extra = extra;
    extra.insert("objective_trace".into(), json!(r.objective_trace));
    extra.insert("converged".into(), json!(r.converged));
    extra.insert("failed".into(), json!(r.failed));
    Outcome {
        template_names: vec!["template".into()],
        templates: vec![r.template],
        iterations: r.iterations,
        warps: r.warps,
        aligned: r.aligned,
        labels: None,
        extra,
    }
}

fn pick(curves: &[SampledFunction], index: Option<usize>, what: &str) -> CliResult<Option<SampledFunction>> {
    match index {
        None => Ok(None),
        Some(i) if i < curves.len() => Ok(Some(curves[i].clone())),
        Some(i) => Err(CliError::config(format!(
            "{what} index {i} is out of range for {} curves",
            curves.len()
        ))),
    }
}

/// Register every curve once onto a fixed reference.
fn single_pass(
    cfg: &Config,
    curves: &[SampledFunction],
    register: impl Fn(&SampledFunction, &SampledFunction) -> CliResult<(Warp, SampledFunction, Option<f64>)>,
) -> CliResult<Outcome> {
    let reference = match pick(curves, cfg.reference, "reference")? {
        Some(r) => r,
        None => mean_function(curves)?,
    };
    let mut warps = Vec::with_capacity(curves.len());
    let mut aligned = Vec::with_capacity(curves.len());
    let mut distances = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        let (w, a, d) = register(c, &reference).map_err(|e| e.context(format!("curve {i}")))?;
        warps.push(w);
        aligned.push(a);
        distances.extend(d);
    }
    let mut extra = Map::new();
    if !distances.is_empty() {
        extra.insert("amplitude_distance".into(), json!(distances));
    }
    Ok(Outcome {
        template_names: vec!["template".into()],
        templates: vec![reference],
        warps,
        aligned,
        iterations: 1,
        labels: None,
        extra,
    })
}

fn landmark_method(cfg: &Config, curves: &[SampledFunction]) -> CliResult<Outcome> {
    let frac = cfg.landmarks.min_prominence.unwrap_or(0.1);
    let interp = cfg.landmarks.interp.unwrap_or_default();
    let mut marks: Vec<Vec<f64>> = Vec::with_capacity(curves.len());
    for c in curves {
        let (lo, hi) = c
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        marks.push(detect_peaks(c, frac * (hi - lo)));
    }
    let count = marks[0].len();
    if count == 0 {
        return Err(CliError::data("curve 0 has no peak landmarks at this prominence"));
    }
    if let Some(i) = marks.iter().position(|m| m.len() != count) {
        return Err(CliError::data(format!(
            "curve {i} has {} peak landmarks, curve 0 has {count}",
            marks[i].len()
        )));
    }
    let target: Vec<f64> = (0..count)
        .map(|l| marks.iter().map(|m| m[l]).sum::<f64>() / marks.len() as f64)
        .collect();
    let mut warps = Vec::with_capacity(curves.len());
    let mut aligned = Vec::with_capacity(curves.len());
    for (i, (c, m)) in curves.iter().zip(&marks).enumerate() {
        let w = landmark_register(m, &target, (0.0, 1.0), interp)
            .map_err(|e| CliError::from(e).context(format!("curve {i}")))?;
        aligned.push(compose_function(c, &w));
        warps.push(w);
    }
    let mut extra = Map::new();
    extra.insert("landmarks".into(), json!(marks));
    extra.insert("target_landmarks".into(), json!(target));
    Ok(Outcome {
        template_names: vec!["template".into()],
        templates: vec![mean_function(&aligned)?],
        warps,
        aligned,
        iterations: 1,
        labels: None,
        extra,
    })
}

fn run_method(cfg: &Config, curves: &[SampledFunction]) -> CliResult<Outcome> {
    let align_opts = |initial: Option<SampledFunction>| AlignOptions {
        max_iter: cfg.max_iter(),
        tol: cfg.tol(),
        initial_template: initial,
    };
    match cfg.method {
        MethodName::Landmark => landmark_method(cfg, curves),
        MethodName::Shift | MethodName::Affine => {
            let family = if cfg.method == MethodName::Shift {
                ParametricFamily::Shift
            } else {
                ParametricFamily::Affine
            };
            let opts = cfg.parametric_options(family)?;
            single_pass(cfg, curves, |c, r| {
                let reg = parametric_register(c, r, &opts)?;
                Ok((reg.warp, reg.aligned, None))
            })
        }
        MethodName::Dtw => {
            let opts = cfg.dp_options(0.0)?;
            single_pass(cfg, curves, |c, r| {
                let reg = dtw_l2(r, c, &opts)?;
                Ok((reg.warp, reg.aligned, None))
            })
        }
        MethodName::Elastic => {
            let opts = cfg.dp_options(0.0)?;
            single_pass(cfg, curves, |c, r| {
                let (reg, d) = elastic_align(r, c, &opts)?;
                Ok((reg.warp, reg.aligned, Some(d)))
            })
        }
        MethodName::Procrustes => {
            let init = pick(curves, cfg.initial_template, "initial_template")?;
            let r = procrustes_align(curves, &cfg.engine()?, &align_opts(init))?;
            let mut extra = Map::new();
            extra.insert("engine".into(), json!(cfg.engine.map_or("elastic".into(), |e| format!("{e:?}").to_lowercase())));
            Ok(from_result(r, extra))
        }
        MethodName::Karcher => {
            let init = pick(curves, cfg.initial_template, "initial_template")?;
            let opts = KarcherOptions {
                dp: cfg.dp_options(0.0)?,
                align: align_opts(init),
                ..Default::default()
            };
            Ok(from_result(karcher_mean(curves, &opts)?, Map::new()))
        }
        MethodName::Kmeans => {
            let k = cfg.k.unwrap_or(2);
            if k > curves.len() {
                return Err(CliError::data(format!("k = {k} exceeds the {} curves", curves.len())));
            }
            let c = kmean_align(curves, k, &cfg.engine()?, &align_opts(None), cfg.seed)?;
            let mut warps = vec![None; curves.len()];
            let mut aligned = vec![None; curves.len()];
            for (members, r) in c.members.iter().zip(&c.per_cluster) {
                for (slot, &i) in members.iter().enumerate() {
                    warps[i] = Some(r.warps[slot].clone());
                    aligned[i] = Some(r.aligned[slot].clone());
                }
            }
            let mut extra = Map::new();
            extra.insert("converged".into(), json!(c.converged));
            extra.insert("cluster_sizes".into(), json!(c.members.iter().map(Vec::len).collect::<Vec<_>>()));
            Ok(Outcome {
                template_names: (0..k).map(|j| format!("cluster{j}")).collect(),
                templates: c.per_cluster.iter().map(|r| r.template.clone()).collect(),
                warps: warps.into_iter().map(|w| w.expect("assigned")).collect(),
                aligned: aligned.into_iter().map(|a| a.expect("assigned")).collect(),
                iterations: c.iterations,
                labels: Some(c.labels),
                extra,
            })
        }
        MethodName::Pca => {
            let k = cfg.components.unwrap_or(2);
            let opts = PcaOptions {
                dp: cfg.dp_options(0.1)?,
                max_iter: cfg.max_iter(),
                tol: cfg.tol(),
            };
            let p = register_to_pca(curves, k, &opts)?;
            let mut extra = Map::new();
            extra.insert("residual_before".into(), json!(p.residual_before));
            extra.insert("residual_after".into(), json!(p.residual_after));
            extra.insert("r_squared".into(), json!(p.r_squared));
            let comps = p.components.clone();
            let mut out = from_result(p.result, extra);
            out.template_names = std::iter::once("mean".to_string())
                .chain((1..=comps.len()).map(|j| format!("pc{j}")))
                .collect();
            out.templates.extend(comps);
            Ok(out)
        }
    }
}

fn prepare(panel: &CurvePanel, working_grid: Option<usize>) -> CliResult<(Grid, Vec<SampledFunction>)> {
    match working_grid {
        None => Ok((panel.grid.clone(), panel.curves.clone())),
        Some(n) => {
            let g = Grid::uniform(panel.grid.lo(), panel.grid.hi(), n)?;
            let curves = panel
                .curves
                .iter()
                .map(|c| c.resample(&g, Interpolation::Linear))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((g, curves))
        }
    }
}

/// Run `cfg` and write every output file; returns the diagnostics.
pub fn cmd_align(cfg: &Config) -> CliResult<Value> {
    let panel = ingest_csv(&cfg.input)?;
    if panel.curves.len() < 2 && cfg.method != MethodName::Landmark {
        return Err(CliError::data("need at least two curves"));
    }
    let (grid, curves) = prepare(&panel, cfg.working_grid)?;
    let (lo, hi) = (grid.lo(), grid.hi());
    let span = hi - lo;
    let unit: Vec<SampledFunction> = curves
        .iter()
        .map(|c| c.with_domain(0.0, 1.0))
        .collect::<Result<_, _>>()?;
    let out = run_method(cfg, &unit)?;

    let t = grid.points();
    let u = unit[0].grid().points();
    let warp_cols: Vec<Vec<f64>> = out
        .warps
        .iter()
        .map(|w| u.iter().map(|&s| lo + span * w.eval(s)).collect())
        .collect();
    let aligned_cols: Vec<Vec<f64>> = out.aligned.iter().map(|a| a.values().to_vec()).collect();
    let template_cols: Vec<Vec<f64>> = out.templates.iter().map(|a| a.values().to_vec()).collect();

    let back = |cols: &[Vec<f64>]| -> CliResult<Vec<SampledFunction>> {
        cols.iter()
            .map(|v| SampledFunction::new(grid.clone(), v.clone()).map_err(CliError::from))
            .collect()
    };
    let variance_before = integrated_variance(&curves)?;
    let variance_after = integrated_variance(&back(&aligned_cols)?)?;
    let phase = variance_decomposition(&AlignmentResult {
        template: out.templates[0].clone(),
        warps: out.warps.clone(),
        aligned: out.aligned.clone(),
        costs: Vec::new(),
        iterations: out.iterations,
        objective_trace: Vec::new(),
        variance_before,
        variance_after,
        converged: true,
        failed: Vec::new(),
    })?;
    let warps_valid = warp_cols
        .iter()
        .all(|v| validate_samples(&grid, v).unwrap_or(false));

    let mut diag = Map::new();
    diag.insert("method".into(), json!(cfg.method));
    diag.insert("curves".into(), json!(panel.ids));
    diag.insert("iterations".into(), json!(out.iterations));
    diag.insert("variance_before".into(), json!(variance_before));
    diag.insert("variance_after".into(), json!(variance_after));
    diag.insert(
        "variance_ratio".into(),
        json!(if variance_before > 0.0 { variance_after / variance_before } else { 0.0 }),
    );
    diag.insert(
        "phase_deviation".into(),
        json!(phase.phase_deviation.iter().map(|d| d * span).collect::<Vec<_>>()),
    );
    diag.insert("mean_phase_deviation".into(), json!(phase.mean_phase_deviation * span));
    diag.insert("warps_valid".into(), json!(warps_valid));
    if let Some(l) = &out.labels {
        diag.insert("labels".into(), json!(l));
    }
    for (k, v) in out.extra {
        diag.insert(k, v);
    }
    let diag = Value::Object(diag);

    let dir = &cfg.output;
    let ab = panel.abscissa.as_str();
    let files: Vec<(&str, Vec<u8>)> = vec![
        ("aligned.csv", to_csv(ab, t, &panel.ids, &aligned_cols)?),
        ("warps.csv", to_csv(ab, t, &panel.ids, &warp_cols)?),
        ("template.csv", to_csv(ab, t, &out.template_names, &template_cols)?),
        ("diagnostics.json", pretty(&diag)),
        (
            "overview.svg",
            overview(t, &curves, &aligned_cols, &template_cols[0], &warp_cols, out.labels.as_deref()).into_bytes(),
        ),
    ];
    let mut files = files;
    if let Some(l) = &out.labels {
        let mut w = String::from("curve,label\n");
        for (id, l) in panel.ids.iter().zip(l) {
            w.push_str(&format!("{id},{l}\n"));
        }
        files.push(("labels.csv", w.into_bytes()));
    }
    for (name, bytes) in files {
        write_atomic(&dir.join(name), &bytes)?;
    }
    Ok(diag)
}

pub(crate) fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

/// Piecewise-linear warp through sampled values passes validation.
pub fn validate_samples(grid: &Grid, values: &[f64]) -> CliResult<bool> {
    let w = Warp::piecewise_linear(grid.clone(), values.to_vec())?;
    let opts = ValidateOptions {
        min_slope: 0.0,
        ..ValidateOptions::default()
    };
    Ok(w.validate(&opts).pass)
}

/// Re-ingest a `warps.csv` and validate every column.
pub fn validate_warps_file(path: &Path) -> CliResult<Vec<bool>> {
    let p = ingest_csv(path)?;
    p.curves
        .iter()
        .map(|c| validate_samples(&p.grid, c.values()))
        .collect()
}

fn overview(
    t: &[f64],
    before: &[SampledFunction],
    after: &[Vec<f64>],
    template: &[f64],
    warps: &[Vec<f64>],
    labels: Option<&[usize]>,
) -> String {
    let color = |i: usize| Some(labels.map_or(i, |l| l[i]));
    let mut p1 = svg::Panel::new("before registration");
    for (i, c) in before.iter().enumerate() {
        p1.push(svg::Series::new(t, c.values(), color(i)));
    }
    let mut p2 = svg::Panel::new("after registration");
    for (i, c) in after.iter().enumerate() {
        p2.push(svg::Series::new(t, c, color(i)));
    }
    p2.push(svg::Series::new(t, template, None).bold());
    let mut p3 = svg::Panel::new("warping functions");
    for (i, w) in warps.iter().enumerate() {
        p3.push(svg::Series::new(t, w, color(i)));
    }
    p3.push(svg::Series::new(t, t, None));
    svg::render(&[p1, p2, p3])
}
