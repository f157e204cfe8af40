use rand::Rng;
use rayon::prelude::*;

use super::{check_panel, procrustes_align, AlignOptions, AlignmentResult, Engine};
use crate::error::{Error, Result};
use crate::fixtures::rng;
use crate::function::{mean_function, SampledFunction};
use crate::warp::Warp;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAlignment {
    pub labels: Vec<usize>,
    /// Alignment of each cluster's members, in the order of `members`.
    pub per_cluster: Vec<AlignmentResult>,
    pub members: Vec<Vec<usize>>,
    /// Assignment passes performed.
    pub iterations: usize,
    pub converged: bool,
}

/// Loss of registering each curve onto each template, `costs[i][j]`.
fn cost_table(curves: &[SampledFunction], templates: &[SampledFunction], engine: &Engine) -> Vec<Vec<f64>> {
    curves
        .par_iter()
        .map(|c| {
            templates
                .iter()
                .map(|t| engine.register(c, t).map(|r| r.cost).unwrap_or(f64::INFINITY))
                .collect()
        })
        .collect()
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = j;
        }
    }
    best
}

/// Farthest-point seeding: a random first center, then repeatedly the curve
/// whose best registration onto the chosen centers is worst.
fn seed_centers(curves: &[SampledFunction], k: usize, engine: &Engine, seed: u64) -> Vec<usize> {
    let mut centers = vec![rng(seed).random_range(0..curves.len())];
    let mut nearest = vec![f64::INFINITY; curves.len()];
    while centers.len() < k {
        let last = &curves[*centers.last().unwrap()];
        let d = cost_table(curves, std::slice::from_ref(last), engine);
        for (n, d) in nearest.iter_mut().zip(&d) {
            *n = n.min(d[0]);
        }
        for &c in &centers {
            nearest[c] = f64::NEG_INFINITY;
        }
        let mut far = 0;
        for (i, v) in nearest.iter().enumerate() {
            if *v > nearest[far] {
                far = i;
            }
        }
        centers.push(far);
    }
    centers
}

fn singleton(curve: &SampledFunction) -> Result<AlignmentResult> {
    Ok(AlignmentResult {
        template: curve.clone(),
        warps: vec![Warp::identity(curve.domain())?],
        aligned: vec![curve.clone()],
        costs: vec![0.0],
        iterations: 0,
        objective_trace: vec![0.0],
        variance_before: 0.0,
        variance_after: 0.0,
        converged: true,
        failed: Vec::new(),
    })
}

/// Joint clustering and alignment into `k` groups.
///
/// Assignment sends each curve to the template it registers onto with the
/// lowest loss; each template is then replaced by the mean of its members
/// registered onto it. Iterates until the labels stop changing. The reported
/// per-cluster alignments are full Procrustes runs on the final clusters.
pub fn kmean_align(
    curves: &[SampledFunction],
    k: usize,
    engine: &Engine,
    opts: &AlignOptions,
    seed: u64,
) -> Result<ClusterAlignment> {
    check_panel(curves, 1)?;
    let n = curves.len();
    if k == 0 || k > n {
        return Err(Error::BadParam(format!("k must lie in 1..={n}, got {k}")));
    }
    if k == 1 {
        return Ok(ClusterAlignment {
            labels: vec![0; n],
            per_cluster: vec![procrustes_align(curves, engine, opts)?],
            members: vec![(0..n).collect()],
            iterations: 0,
            converged: true,
        });
    }
    let mut templates: Vec<SampledFunction> = seed_centers(curves, k, engine, seed)
        .into_iter()
        .map(|i| curves[i].clone())
        .collect();
    let mut labels: Vec<usize> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iter.max(1) {
        iterations += 1;
        let costs = cost_table(curves, &templates, engine);
        let mut next: Vec<usize> = costs.iter().map(|c| argmin(c)).collect();
        reseed_empty(&mut next, &costs, k);
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
        for (j, t) in templates.iter_mut().enumerate() {
            let members: Vec<SampledFunction> = (0..n)
                .filter(|&i| labels[i] == j)
                .map(|i| curves[i].clone())
                .collect();
            let regs: Vec<SampledFunction> = members
                .par_iter()
                .map(|c| engine.register(c, t).map(|r| r.aligned).unwrap_or_else(|_| c.clone()))
                .collect();
            *t = mean_function(&regs)?;
        }
    }
    let members: Vec<Vec<usize>> = (0..k)
        .map(|j| (0..n).filter(|&i| labels[i] == j).collect())
        .collect();
    let per_cluster = members
        .iter()
        .map(|m| {
            let group: Vec<SampledFunction> = m.iter().map(|&i| curves[i].clone()).collect();
            if group.len() == 1 {
                singleton(&group[0])
            } else {
                procrustes_align(&group, engine, opts)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterAlignment {
        labels,
        per_cluster,
        members,
        iterations,
        converged,
    })
}

/// Give every empty cluster the worst-fitting curve of a cluster that can spare one.
fn reseed_empty(labels: &mut [usize], costs: &[Vec<f64>], k: usize) {
    for j in 0..k {
        if labels.contains(&j) {
            continue;
        }
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let worst = (0..labels.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .max_by(|&a, &b| costs[a][labels[a]].total_cmp(&costs[b][labels[b]]).then(b.cmp(&a)));
        if let Some(i) = worst {
            labels[i] = j;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::register::{Criterion, DpOptions, ParametricFamily, ParametricOptions};

    #[test]
    fn one_cluster_is_procrustes() {
        let p = fixtures::warped_panel(fixtures::two_bump, 5, 101, 0.3, 9).unwrap();
        let e = Engine::DtwL2(DpOptions::default().with_grid_size(33));
        let opts = AlignOptions::default();
        let c = kmean_align(&p.curves, 1, &e, &opts, 3).unwrap();
        assert_eq!(c.per_cluster[0], procrustes_align(&p.curves, &e, &opts).unwrap());
        assert!(c.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn separates_shift_populations() {
        let p = fixtures::shift_cluster_panel(5, 201, (0.0, 0.1), 11).unwrap();
        let mut po = ParametricOptions::new(ParametricFamily::Shift, Criterion::L2);
        po.max_shift = 0.04;
        let e = Engine::Parametric(po);
        let a = kmean_align(&p.curves, 2, &e, &AlignOptions::default(), 5).unwrap();
        let same = a.labels.iter().zip(&p.labels).filter(|(a, b)| a == b).count();
        assert!(same == 10 || same == 0, "{:?}", a.labels);
        let b = kmean_align(&p.curves, 2, &e, &AlignOptions::default(), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_clusters_are_refilled() {
        let mut labels = vec![0, 0, 0];
        let costs = vec![vec![1.0, 9.0], vec![5.0, 9.0], vec![2.0, 9.0]];
        reseed_empty(&mut labels, &costs, 2);
        assert_eq!(labels, vec![0, 1, 0]);
    }
}
