//! Window length as a function of the particle count.

use crate::error::{Error, Result};

/// Case boundaries closer than this are treated as hitting the boundary.
const BOUNDARY_TOL: f64 = 1e-9;

/// `delta = N^-eta` and the error exponent it is predicted to achieve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaChoice {
    pub delta: f64,
    pub eta: f64,
    pub predicted_rate_exponent: f64,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() < BOUNDARY_TOL
}

/// Rate constant `C` of the regime `(alpha, gamma)`. An infinite `gamma`
/// stands for an exactly stable collateral law, whose normalized sums carry
/// no second-order error.
fn rate_constant(alpha: f64, gamma: f64) -> Result<f64> {
    let uncovered = || Error::UncoveredCase { alpha, gamma };
    if !(alpha > 0.0 && alpha < 2.0) || near(alpha, 1.0) || !(gamma > 0.0) {
        return Err(uncovered());
    }
    if near(alpha + gamma, 1.0) || near(alpha + gamma, 2.0) {
        return Err(uncovered());
    }
    if alpha < 1.0 {
        return Ok((gamma / alpha).min((1.0 - alpha) / alpha).min(alpha / 2.0));
    }
    let half = alpha / 2.0;
    let gap = 2.0 - alpha;
    if gamma < half.min(gap) {
        Ok(gamma / alpha)
    } else if (gamma > half && gamma < gap) || (gamma > gap && alpha < 4.0 / 3.0 && !near(alpha, 4.0 / 3.0)) {
        Ok(0.5)
    } else if gamma > gap && alpha > 4.0 / 3.0 && !near(alpha, 4.0 / 3.0) {
        Ok(gap / alpha)
    } else {
        Err(uncovered())
    }
}

/// Choose `delta = N^-eta` balancing the discretization error against the
/// stable-CLT error, for collateral index `alpha` and second-order index
/// `gamma`.
pub fn choose_delta(alpha: f64, gamma: f64, n: usize) -> Result<DeltaChoice> {
    let c = rate_constant(alpha, gamma)?;
    let (eta, exponent) = if alpha < 1.0 {
        (c / (1.0 + c), -c / (1.0 + c))
    } else {
        let d = 1.0 - alpha + c * alpha * alpha + alpha * alpha;
        (c * alpha * alpha / d, -c / (d * alpha))
    };
    Ok(DeltaChoice {
        delta: (n as f64).powf(-eta),
        eta,
        predicted_rate_exponent: exponent,
    })
}
