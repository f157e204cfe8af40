use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{inner_product, SampledFunction};

/// Similarity criteria for parametric registration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `∫ (x1 − x2)²`
    L2,
    /// `‖x1/‖x1‖ − x2/‖x2‖‖`
    NormalizedSeminorm,
    /// `⟨x1, x2⟩ / √(⟨x1, x1⟩ ⟨x2, x2⟩)`
    Correlation,
    /// Smallest eigenvalue of the 2×2 cross-product matrix.
    MinEigenvalue,
}

impl Criterion {
    /// Map a criterion value to a non-negative loss to minimize.
    pub fn loss(&self, value: f64) -> f64 {
        match self {
            Criterion::Correlation => 1.0 - value,
            _ => value,
        }
    }
}

struct Gram {
    aa: f64,
    ab: f64,
    bb: f64,
}

fn gram(x1: &SampledFunction, x2: &SampledFunction) -> Result<Gram> {
    Ok(Gram {
        aa: inner_product(x1, x1)?,
        ab: inner_product(x1, x2)?,
        bb: inner_product(x2, x2)?,
    })
}

/// Evaluate `criterion` for two functions on a shared grid.
pub fn criterion_value(criterion: Criterion, x1: &SampledFunction, x2: &SampledFunction) -> Result<f64> {
    if !x1.grid().same_as(x2.grid()) {
        return Err(Error::GridMismatch);
    }
    let g = gram(x1, x2)?;
    match criterion {
        Criterion::L2 => inner_product(&x1.sub(x2)?, &x1.sub(x2)?),
        Criterion::NormalizedSeminorm => {
            if g.aa <= 0.0 || g.bb <= 0.0 {
                return Err(Error::ZeroNorm);
            }
            let u = x1.scale(1.0 / g.aa.sqrt());
            let v = x2.scale(1.0 / g.bb.sqrt());
            let d = u.sub(&v)?;
            Ok(inner_product(&d, &d)?.max(0.0).sqrt())
        }
        Criterion::Correlation => {
            if g.aa <= 0.0 || g.bb <= 0.0 {
                return Err(Error::ZeroNorm);
            }
            Ok(g.ab / (g.aa * g.bb).sqrt())
        }
        Criterion::MinEigenvalue => {
            let half_trace = 0.5 * (g.aa + g.bb);
            let disc = (0.25 * (g.aa - g.bb).powi(2) + g.ab * g.ab).sqrt();
            let max = half_trace + disc;
            if max <= 0.0 {
                return Ok(0.0);
            }
            // det / λmax keeps precision when λmin is tiny.
            Ok(((g.aa * g.bb - g.ab * g.ab) / max).max(0.0))
        }
    }
}
