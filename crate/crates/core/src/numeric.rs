//! Small numerical helpers shared by the samplers and the flow integrator.

use crate::error::{Error, Result};

/// Newton iteration safeguarded by bisection on a sign-changing bracket.
///
/// `f_df` returns the function value and its derivative. The bracket
/// `[lo, hi]` must satisfy `f(lo) * f(hi) <= 0`; iterates that leave the
/// bracket are replaced by the midpoint. Converges when a step is below
/// `tol` in absolute terms.
pub fn safeguarded_newton<F>(f_df: F, mut lo: f64, mut hi: f64, x0: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (f_lo, _) = f_df(lo);
    let (f_hi, _) = f_df(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::RootFindFailure(format!(
            "bracket [{lo}, {hi}] does not change sign ({f_lo}, {f_hi})"
        )));
    }
    let lo_positive = f_lo > 0.0;
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let (fx, dfx) = f_df(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == lo_positive {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= tol || (hi - lo) <= tol {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::RootFindFailure(format!(
        "no convergence within 200 iterations on [{lo}, {hi}]"
    )))
}

/// Hyperbolic tangent through a single `exp`, about twice as fast as the
/// libm routine and within a few ulps of it in absolute terms.
#[inline]
pub fn tanh(x: f64) -> f64 {
    let e = (2.0 * x.abs()).exp();
    (1.0 - 2.0 / (e + 1.0)).copysign(x)
}

/// Mean of values known to lie in `[-bound, bound]`, accumulated in fixed
/// point so the result does not depend on summation order.
///
/// Values are quantized to `bound * 2^-52`, far below the resolution that
/// matters for the coefficients built from these means.
pub fn order_free_mean<I>(values: I, bound: f64) -> f64
where
    I: IntoIterator<Item = f64>,
{
    const SCALE: f64 = (1u64 << 52) as f64;
    let mut acc: i128 = 0;
    let mut n: u64 = 0;
    for v in values {
        // Truncation is as order-independent as rounding and much cheaper.
        acc += ((v / bound) * SCALE) as i64 as i128;
        n += 1;
    }
    if n == 0 {
        return f64::NAN;
    }
    (acc as f64 / SCALE) * bound / n as f64
}
