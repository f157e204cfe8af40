//! Small derivative-free minimizers used by the parametric registration search.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search on `[lo, hi]`. Returns `(argmin, min, converged)`.
pub(crate) fn golden_section(
    f: &mut impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64, bool) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while hi - lo > tol {
        if iter == max_iter {
            break;
        }
        iter += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let converged = hi - lo <= tol;
    if f1 <= f2 {
        (x1, f1, converged)
    } else {
        (x2, f2, converged)
    }
}

/// Nelder–Mead on two parameters from `start` with initial simplex edge `step`.
pub(crate) fn nelder_mead_2d(
    f: &mut impl FnMut([f64; 2]) -> f64,
    start: [f64; 2],
    step: [f64; 2],
    tol: f64,
    max_iter: usize,
) -> ([f64; 2], f64, bool) {
    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut vals = simplex.map(|p| f(p));
    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.map(|i| simplex[i]);
        vals = order.map(|i| vals[i]);
        let spread = (vals[2] - vals[0]).abs();
        let size = (0..2)
            .map(|k| (simplex[1][k] - simplex[0][k]).abs().max((simplex[2][k] - simplex[0][k]).abs()))
            .fold(0.0, f64::max);
        if spread <= tol && size <= tol.sqrt() {
            return (simplex[0], vals[0], true);
        }
        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |c: f64| {
            [
                centroid[0] + c * (simplex[2][0] - centroid[0]),
                centroid[1] + c * (simplex[2][1] - centroid[1]),
            ]
        };
        let reflected = along(-1.0);
        let fr = f(reflected);
        if fr < vals[0] {
            let expanded = along(-2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                vals[2] = fe;
            } else {
                simplex[2] = reflected;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = reflected;
            vals[2] = fr;
        } else {
            let contracted = if fr < vals[2] { along(-0.5) } else { along(0.5) };
            let fc = f(contracted);
            if fc < vals[2].min(fr) {
                simplex[2] = contracted;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        0.5 * (simplex[0][0] + simplex[i][0]),
                        0.5 * (simplex[0][1] + simplex[i][1]),
                    ];
                    vals[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (simplex[best], vals[best], false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx, ok) = golden_section(&mut |x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10, 200);
        assert!(ok);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let mut rosen = |p: [f64; 2]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let (x, _, ok) = nelder_mead_2d(&mut rosen, [-1.0, 1.0], [0.5, 0.5], 1e-14, 5000);
        assert!(ok);
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4, "{x:?}");
    }
}
