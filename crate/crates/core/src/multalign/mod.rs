//! Multiple-curve alignment.
//!
//! All routines take curves sampled on one shared grid and register each curve
//! onto a template: `aligned[i] = curves[i] ∘ warps[i] ≈ template`.

mod karcher;
mod kmeans;
mod pca;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use karcher::{karcher_mean, mean_warp, KarcherOptions};
pub use kmeans::{kmean_align, ClusterAlignment};
pub use pca::{register_to_pca, PcaAlignment, PcaOptions};

use crate::error::{Error, Result};
use crate::function::{integrated_variance, l2_norm, mean_function, SampledFunction};
use crate::register::{
    dtw_l2, elastic_align, parametric_register, DpOptions, PairRegistration, ParametricOptions,
};
use crate::warp::Warp;

/// Pairwise registration used inside the multiple-alignment loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Engine {
    DtwL2(DpOptions),
    Elastic(DpOptions),
    Parametric(ParametricOptions),
}

impl Engine {
    /// Register `curve` onto `template`; the curve is the moving argument.
    pub fn register(&self, curve: &SampledFunction, template: &SampledFunction) -> Result<PairRegistration> {
        match self {
            Engine::DtwL2(o) => dtw_l2(template, curve, o),
            Engine::Elastic(o) => elastic_align(template, curve, o).map(|(r, _)| r),
            Engine::Parametric(o) => parametric_register(curve, template, o),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignOptions {
    pub max_iter: usize,
    /// Relative change of the objective that ends the iterations.
    pub tol: f64,
    /// Starting template; the cross-sectional mean of the inputs when absent.
    pub initial_template: Option<SampledFunction>,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            max_iter: 20,
            tol: 1e-6,
            initial_template: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentResult {
    pub template: SampledFunction,
    pub warps: Vec<Warp>,
    pub aligned: Vec<SampledFunction>,
    /// Final registration loss of each curve against `template`'s predecessor.
    pub costs: Vec<f64>,
    /// Registration passes kept in the result.
    pub iterations: usize,
    /// Objective after each kept pass; never increases.
    pub objective_trace: Vec<f64>,
    pub variance_before: f64,
    pub variance_after: f64,
    pub converged: bool,
    /// Curves whose registration failed; they keep the identity warp.
    pub failed: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceDecomposition {
    pub amplitude_variance: f64,
    /// Sup-norm distance of each warp from the identity.
    pub phase_deviation: Vec<f64>,
    pub mean_phase_deviation: f64,
}

pub fn variance_decomposition(result: &AlignmentResult) -> Result<VarianceDecomposition> {
    let amplitude_variance = integrated_variance(&result.aligned)?;
    let n = result.template.len();
    let phase_deviation: Vec<f64> = result
        .warps
        .iter()
        .map(|w| w.deviation_from_identity(n))
        .collect();
    let mean_phase_deviation = if phase_deviation.is_empty() {
        0.0
    } else {
        phase_deviation.iter().sum::<f64>() / phase_deviation.len() as f64
    };
    Ok(VarianceDecomposition {
        amplitude_variance,
        phase_deviation,
        mean_phase_deviation,
    })
}

pub(crate) fn check_panel(curves: &[SampledFunction], needed: usize) -> Result<()> {
    if curves.len() < needed {
        return Err(Error::TooFewCurves {
            needed,
            got: curves.len(),
        });
    }
    let g = curves[0].grid();
    if curves.iter().any(|c| !c.grid().same_as(g)) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Registrations of one pass, in curve order.
pub(crate) struct Pass {
    pub regs: Vec<Option<PairRegistration>>,
    pub objective: f64,
    pub first_error: Option<Error>,
}

pub(crate) fn register_all(
    curves: &[SampledFunction],
    template: &SampledFunction,
    register: &(impl Fn(&SampledFunction, &SampledFunction) -> Result<PairRegistration> + Sync),
) -> Pass {
    let out: Vec<Result<PairRegistration>> =
        curves.par_iter().map(|c| register(c, template)).collect();
    let mut first_error = None;
    let mut objective = 0.0;
    let regs = out
        .into_iter()
        .map(|r| match r {
            Ok(r) => {
                objective += r.cost;
                Some(r)
            }
            Err(e) => {
                first_error.get_or_insert(e);
                None
            }
        })
        .collect();
    Pass {
        regs,
        objective,
        first_error,
    }
}

/// Identity-warped stand-in for a curve whose registration failed.
fn unregistered(curve: &SampledFunction) -> Result<PairRegistration> {
    Ok(PairRegistration {
        warp: Warp::identity(curve.domain())?,
        aligned: curve.clone(),
        cost: 0.0,
        value: 0.0,
        method: crate::register::Method::Landmark,
        converged: false,
    })
}

/// Alternate registration onto the template with a template update until the
/// objective settles. The pass that would raise the objective is discarded.
pub(crate) fn iterate(
    curves: &[SampledFunction],
    initial: SampledFunction,
    opts: &AlignOptions,
    register: &(impl Fn(&SampledFunction, &SampledFunction) -> Result<PairRegistration> + Sync),
    update: &impl Fn(&[SampledFunction]) -> Result<SampledFunction>,
) -> Result<AlignmentResult> {
    check_panel(curves, 2)?;
    if !initial.grid().same_as(curves[0].grid()) {
        return Err(Error::GridMismatch);
    }
    // Objectives at this level are indistinguishable from zero.
    let floor = 1e-12 * curves.iter().map(|c| l2_norm(c).powi(2)).sum::<f64>();
    let mut template = initial;
    let mut kept: Option<(Pass, SampledFunction)> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter.max(1) {
        let pass = register_all(curves, &template, register);
        let active = pass.regs.iter().filter(|r| r.is_some()).count();
        if active < 2 {
            return Err(pass.first_error.unwrap_or(Error::TooFewCurves { needed: 2, got: active }));
        }
        if let Some(&prev) = trace.last() {
            if pass.objective > prev {
                converged = true;
                break;
            }
        }
        let aligned: Vec<SampledFunction> = pass
            .regs
            .iter()
            .flatten()
            .map(|r| r.aligned.clone())
            .collect();
        let next = update(&aligned)?;
        let change = trace
            .last()
            .map(|&prev: &f64| (prev - pass.objective).abs() / prev.max(floor));
        trace.push(pass.objective);
        kept = Some((pass, next.clone()));
        if pass_settled(change, *trace.last().unwrap(), floor, opts.tol) {
            converged = true;
            break;
        }
        template = next;
    }
    let (pass, template) = kept.expect("at least one pass");
    let mut warps = Vec::with_capacity(curves.len());
    let mut aligned = Vec::with_capacity(curves.len());
    let mut costs = Vec::with_capacity(curves.len());
    let mut failed = Vec::new();
    for (i, (reg, curve)) in pass.regs.into_iter().zip(curves).enumerate() {
        let reg = match reg {
            Some(r) => r,
            None => {
                failed.push(i);
                unregistered(curve)?
            }
        };
        costs.push(reg.cost);
        warps.push(reg.warp);
        aligned.push(reg.aligned);
    }
    Ok(AlignmentResult {
        template,
        variance_before: integrated_variance(curves)?,
        variance_after: integrated_variance(&aligned)?,
        warps,
        aligned,
        costs,
        iterations: trace.len(),
        objective_trace: trace,
        converged,
        failed,
    })
}

fn pass_settled(change: Option<f64>, objective: f64, floor: f64, tol: f64) -> bool {
    objective <= floor || change.is_some_and(|c| c < tol)
}

/// Procrustes iterations: register every curve onto the template, replace the
/// template by the cross-sectional mean of the aligned curves, repeat.
pub fn procrustes_align(
    curves: &[SampledFunction],
    engine: &Engine,
    opts: &AlignOptions,
) -> Result<AlignmentResult> {
    check_panel(curves, 2)?;
    let initial = match &opts.initial_template {
        Some(t) => t.clone(),
        None => mean_function(curves)?,
    };
    iterate(
        curves,
        initial,
        opts,
        &|c, t| engine.register(c, t),
        &|a| mean_function(a),
    )
}
