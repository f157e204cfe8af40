use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{Grid, SampledFunction};
use crate::warp::{Warp, DEFAULT_MIN_SLOPE};
use crate::DEFAULT_WORKING_GRID;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LandmarkInterp {
    #[default]
    Polygonal,
    /// Fritsch–Carlson monotone cubic Hermite, sampled onto the working grid.
    MonotoneCubic,
}

/// Warp of `domain` onto itself with `h(dst[l]) = src[l]` and fixed endpoints.
///
/// `dst` are the template's landmark times and `src` the observed curve's, so
/// `curve ∘ h` carries each feature to its template time.
pub fn landmark_register(
    src: &[f64],
    dst: &[f64],
    domain: (f64, f64),
    interp: LandmarkInterp,
) -> Result<Warp> {
    if src.len() != dst.len() {
        return Err(Error::CountMismatch {
            src: src.len(),
            dst: dst.len(),
        });
    }
    let (a, b) = domain;
    let ordered = |v: &[f64]| {
        v.iter().all(|&x| x > a && x < b) && v.windows(2).all(|w| w[1] > w[0])
    };
    if !(b > a) || !ordered(src) || !ordered(dst) {
        return Err(Error::LandmarkOrder);
    }
    let mut knots = vec![a];
    knots.extend_from_slice(dst);
    knots.push(b);
    let mut values = vec![a];
    values.extend_from_slice(src);
    values.push(b);

    let warp = match interp {
        LandmarkInterp::Polygonal => Warp::piecewise_linear(Grid::new(knots)?, values)?,
        LandmarkInterp::MonotoneCubic => {
            let slopes = pchip_slopes(&knots, &values);
            let mut pts = Grid::uniform(a, b, DEFAULT_WORKING_GRID)?.points().to_vec();
            pts.extend_from_slice(dst);
            pts.sort_by(|x, y| x.total_cmp(y));
            pts.dedup_by(|x, y| (*x - *y).abs() <= crate::function::GRID_TOL);
            let grid = Grid::new(pts)?;
            let v = grid
                .points()
                .iter()
                .map(|&t| hermite(&knots, &values, &slopes, t))
                .collect();
            Warp::piecewise_linear(grid, v)?
        }
    };
    let (_, v) = warp.nodes().expect("sampled warp");
    let p = warp.nodes().unwrap().0.points();
    let min = p
        .windows(2)
        .zip(v.windows(2))
        .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
        .fold(f64::INFINITY, f64::min);
    if min < DEFAULT_MIN_SLOPE {
        warp.project_min_slope(DEFAULT_MIN_SLOPE)
    } else {
        Ok(warp)
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        return vec![delta[0]; 2];
    }
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.5 * d0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn hermite(x: &[f64], y: &[f64], d: &[f64], t: f64) -> f64 {
    let n = x.len();
    let i = x.partition_point(|&p| p <= t).saturating_sub(1).min(n - 2);
    let h = x[i + 1] - x[i];
    let s = (t - x[i]) / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * y[i]
        + (s3 - 2.0 * s2 + s) * h * d[i]
        + (-2.0 * s3 + 3.0 * s2) * y[i + 1]
        + (s3 - s2) * h * d[i + 1]
}

/// Interior local maxima, found as sign changes of the first difference from
/// positive to negative, kept when their topographic prominence reaches
/// `min_prominence`. Locations are refined by a parabola through the three
/// samples around the maximum.
pub fn detect_peaks(f: &SampledFunction, min_prominence: f64) -> Vec<f64> {
    let v = f.values();
    let p = f.grid().points();
    let n = v.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if v[i] > v[i - 1] {
            // Walk across a plateau to the next differing sample.
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[i] {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
        .into_iter()
        .filter(|&k| prominence(v, k) >= min_prominence)
        .map(|k| refine(p, v, k))
        .collect()
}

fn prominence(v: &[f64], k: usize) -> f64 {
    let h = v[k];
    let mut left_min = h;
    for i in (0..k).rev() {
        if v[i] > h {
            break;
        }
        left_min = left_min.min(v[i]);
    }
    let mut right_min = h;
    for &x in &v[k + 1..] {
        if x > h {
            break;
        }
        right_min = right_min.min(x);
    }
    h - left_min.max(right_min)
}

fn refine(p: &[f64], v: &[f64], k: usize) -> f64 {
    let (x0, x1, x2) = (p[k - 1], p[k], p[k + 1]);
    let (y0, y1, y2) = (v[k - 1], v[k], v[k + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if a < 0.0 {
        (-b / (2.0 * a)).clamp(x0, x2)
    } else {
        x1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warp::ValidateOptions;

    fn bump(c: f64, w: f64) -> impl Fn(f64) -> f64 {
        move |t| (-(t - c).powi(2) / (2.0 * w * w)).exp()
    }

    #[test]
    fn identical_landmarks_give_identity() {
        for interp in [LandmarkInterp::Polygonal, LandmarkInterp::MonotoneCubic] {
            let h = landmark_register(&[0.2, 0.6], &[0.2, 0.6], (0.0, 1.0), interp).unwrap();
            assert!(h.deviation_from_identity(513) < 1e-12);
        }
    }

    #[test]
    fn single_polygonal_landmark() {
        let h = landmark_register(&[0.3], &[0.5], (0.0, 1.0), LandmarkInterp::Polygonal).unwrap();
        assert!((h.eval(0.5) - 0.3).abs() < 1e-15);
        assert!((h.slope(0.25) - 0.6).abs() < 1e-12);
        assert!((h.slope(0.75) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn landmark_errors() {
        let d = (0.0, 1.0);
        let p = LandmarkInterp::Polygonal;
        assert_eq!(
            landmark_register(&[0.3], &[0.5, 0.6], d, p),
            Err(Error::CountMismatch { src: 1, dst: 2 })
        );
        assert_eq!(landmark_register(&[0.6, 0.3], &[0.2, 0.5], d, p), Err(Error::LandmarkOrder));
        assert_eq!(landmark_register(&[1.3], &[0.5], d, p), Err(Error::LandmarkOrder));
    }

    #[test]
    fn cubic_landmarks_are_monotone() {
        let h = landmark_register(
            &[0.05, 0.1, 0.9],
            &[0.3, 0.7, 0.75],
            (0.0, 1.0),
            LandmarkInterp::MonotoneCubic,
        )
        .unwrap();
        assert!(h.validate(&ValidateOptions::default()).pass);
        for (s, t) in [(0.05, 0.3), (0.1, 0.7), (0.9, 0.75)] {
            assert!((h.eval(t) - s).abs() < 1e-12);
        }
    }

    #[test]
    fn peaks() {
        let g = Grid::unit(501);
        let mono = SampledFunction::from_fn(&g, |t| t * t).unwrap();
        assert!(detect_peaks(&mono, 0.0).is_empty());
        assert!(detect_peaks(&SampledFunction::constant(&g, 2.0), 0.0).is_empty());
        let (b1, b2) = (bump(0.3, 0.05), bump(0.7, 0.05));
        let two = SampledFunction::from_fn(&g, |t| b1(t) + b2(t)).unwrap();
        let found = detect_peaks(&two, 0.1);
        assert_eq!(found.len(), 2);
        assert!((found[0] - 0.3).abs() < 1.0 / 500.0);
        assert!((found[1] - 0.7).abs() < 1.0 / 500.0);
        // A small ripple is filtered by prominence.
        let rippled = SampledFunction::from_fn(&g, |t| b1(t) + 0.01 * (60.0 * t).sin()).unwrap();
        assert_eq!(detect_peaks(&rippled, 0.2).len(), 1);
    }
}
