//! Coefficient families for the particle dynamics and a numerical audit of
//! their regularity.
//!
//! A particle at `x` in a population with empirical law `mu` drifts with
//! speed `b(x, mu)`, fires at rate `f(x)` and, when it fires and the index is
//! below one, jumps by `psi(x, mu)`. The measure enters `b` only through
//! `<tanh, mu>`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{wdq_upper, EmpiricalSample};
use crate::numeric::{order_free_mean, tanh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriftFamily {
    Zero,
    /// `b(x, mu) = -beta0 tanh(x) + beta1 tanh(<tanh, mu>)`.
    Tanh {
        beta0: f64,
        beta1: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RateFamily {
    Constant {
        c: f64,
    },
    /// `f(x) = lo + (hi - lo) / (1 + e^-x)`.
    Logistic {
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KickFamily {
    Zero,
    /// `psi = -c`.
    Constant {
        c: f64,
    },
    /// `psi(x) = -c tanh(x)`.
    Tanh {
        c: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialLaw {
    PointMass { x0: f64 },
    Gaussian { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl InitialLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InitialLaw::PointMass { x0 } => x0,
            InitialLaw::Gaussian { mean, sd } => Normal::new(mean, sd).expect("validated sd").sample(rng),
            InitialLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

/// Which coefficient to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Drift,
    Rate,
    Kick,
}

/// The coefficient interface consumed by the simulators and the audit. The
/// measure is summarized by `m = <tanh, mu>`.
pub trait Coefficients {
    fn drift(&self, x: f64, m: f64) -> f64;
    fn rate(&self, x: f64) -> f64;
    fn kick(&self, x: f64, m: f64) -> f64;
    /// Whether the drift reads the measure at all.
    fn drift_uses_measure(&self) -> bool {
        true
    }
}

/// Coefficients and initial law of one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub drift: DriftFamily,
    pub rate: RateFamily,
    pub kick: KickFamily,
    pub initial: InitialLaw,
}

impl ModelSpec {
    /// Check the parameters and the compatibility with the index `alpha`:
    /// firing particles only jump themselves when `alpha < 1`.
    pub fn validate(&self, alpha: f64) -> Result<()> {
        match self.rate {
            RateFamily::Constant { c } if !(c > 0.0 && c.is_finite()) => {
                return Err(Error::RangeError(format!("constant rate {c} must be positive")));
            }
            RateFamily::Logistic { lo, hi } if !(lo > 0.0 && hi >= lo && hi.is_finite()) => {
                return Err(Error::RangeError(format!(
                    "logistic rate needs 0 < lo <= hi, got lo = {lo}, hi = {hi}"
                )));
            }
            _ => {}
        }
        match self.initial {
            InitialLaw::Gaussian { sd, .. } if !(sd > 0.0 && sd.is_finite()) => {
                return Err(Error::RangeError(format!("initial sd {sd} must be positive")));
            }
            InitialLaw::Uniform { lo, hi } if !(lo < hi) => {
                return Err(Error::RangeError(format!("initial range [{lo}, {hi}] is empty")));
            }
            _ => {}
        }
        if alpha > 1.0 && self.kick != KickFamily::Zero {
            return Err(Error::RegimeError(format!(
                "alpha = {alpha} > 1 admits no jump of the firing particle"
            )));
        }
        Ok(())
    }

    pub fn rate_bounds(&self) -> (f64, f64) {
        match self.rate {
            RateFamily::Constant { c } => (c, c),
            RateFamily::Logistic { lo, hi } => (lo, hi),
        }
    }

    pub fn f_hi(&self) -> f64 {
        self.rate_bounds().1
    }

    pub fn f_lo(&self) -> f64 {
        self.rate_bounds().0
    }

    pub fn rate_is_constant(&self) -> bool {
        matches!(self.rate, RateFamily::Constant { .. })
    }

    pub fn drift_is_zero(&self) -> bool {
        self.drift == DriftFamily::Zero
    }

    pub fn has_kick(&self) -> bool {
        self.kick != KickFamily::Zero
    }

    /// Evaluate one coefficient at `x` against the empirical law of `mu`.
    pub fn eval_component(&self, which: Component, x: f64, mu: &[f64]) -> Result<f64> {
        let needs_measure = match which {
            Component::Drift => self.drift_uses_measure(),
            Component::Rate | Component::Kick => false,
        };
        let m = if needs_measure {
            if mu.is_empty() {
                return Err(Error::EmptyMeasure);
            }
            mean_tanh(mu)
        } else {
            0.0
        };
        Ok(match which {
            Component::Drift => self.drift(x, m),
            Component::Rate => self.rate(x),
            Component::Kick => self.kick(x, m),
        })
    }
}

impl Coefficients for ModelSpec {
    #[inline]
    fn drift(&self, x: f64, m: f64) -> f64 {
        match self.drift {
            DriftFamily::Zero => 0.0,
            DriftFamily::Tanh { beta0, beta1 } => -beta0 * tanh(x) + beta1 * tanh(m),
        }
    }

    #[inline]
    fn rate(&self, x: f64) -> f64 {
        match self.rate {
            RateFamily::Constant { c } => c,
            RateFamily::Logistic { lo, hi } => (lo + (hi - lo) / (1.0 + (-x).exp())).clamp(lo, hi),
        }
    }

    #[inline]
    fn kick(&self, x: f64, _m: f64) -> f64 {
        match self.kick {
            KickFamily::Zero => 0.0,
            KickFamily::Constant { c } => -c,
            KickFamily::Tanh { c } => -c * tanh(x),
        }
    }

    fn drift_uses_measure(&self) -> bool {
        matches!(self.drift, DriftFamily::Tanh { beta1, .. } if beta1 != 0.0)
    }
}

/// `<tanh, mu>` for the empirical law of `xs`, independent of the order of
/// `xs`.
pub fn mean_tanh(xs: &[f64]) -> f64 {
    order_free_mean(xs.iter().map(|x| tanh(*x)), 1.0)
}

/// One line of an [`AuditReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuditCheck {
    pub name: String,
    pub value: f64,
    pub passed: bool,
}

/// Measured regularity constants of a coefficient set.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Half-width of the audited state range.
const AUDIT_RANGE: f64 = 20.0;
const AUDIT_POINTS: usize = 10_000;
const AUDIT_MEASURES: usize = 100;

fn grid(range: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| -range + 2.0 * range * i as f64 / (points - 1) as f64)
        .collect()
}

fn sup_abs<F: Fn(f64) -> f64>(g: &[f64], f: F) -> f64 {
    g.iter().map(|&x| f(x).abs()).fold(0.0, f64::max)
}

fn lipschitz<F: Fn(f64) -> f64>(g: &[f64], f: F) -> f64 {
    g.windows(2)
        .map(|w| ((f(w[1]) - f(w[0])) / (w[1] - w[0])).abs())
        .fold(0.0, f64::max)
}

/// Largest jump of the finite-difference derivative between neighbouring
/// cells, a proxy for continuity of `f'`.
fn derivative_jump<F: Fn(f64) -> f64>(g: &[f64], f: F) -> f64 {
    let slopes: Vec<f64> = g.windows(2).map(|w| (f(w[1]) - f(w[0])) / (w[1] - w[0])).collect();
    slopes.windows(2).map(|s| (s[1] - s[0]).abs()).fold(0.0, f64::max)
}

fn within(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-12
}

/// Numerically check boundedness, Lipschitz continuity, the lower bound and
/// smoothness of the rate, and the `d_{alpha_-}` Lipschitz property of the
/// drift and kick in both arguments.
///
/// Suprema are taken on a 10^4-point grid over `[-20, 20]` and compared with a
/// grid ten times wider (boundedness) and one twice finer (stability of the
/// Lipschitz constants). The measure argument is probed with 10^2 random
/// pairs of empirical measures.
pub fn assumption_audit<C: Coefficients>(model: &C, alpha_minus: f64) -> AuditReport {
    let g = grid(AUDIT_RANGE, AUDIT_POINTS);
    let wide = grid(10.0 * AUDIT_RANGE, AUDIT_POINTS);
    let fine = grid(AUDIT_RANGE, 2 * AUDIT_POINTS - 1);
    let mut checks = Vec::new();
    let mut push = |name: &str, value: f64, passed: bool| {
        checks.push(AuditCheck {
            name: name.to_string(),
            value,
            passed,
        })
    };

    let probes = [-0.9, 0.0, 0.9];
    let b = |m: f64| move |x: f64| model.drift(x, m);
    let psi = |m: f64| move |x: f64| model.kick(x, m);
    let f = |x: f64| model.rate(x);

    let mut sup_b: f64 = 0.0;
    let mut sup_psi: f64 = 0.0;
    let mut lip_b: f64 = 0.0;
    let mut lip_psi: f64 = 0.0;
    let mut bounded = true;
    let mut stable = true;
    for &m in &probes {
        let (s_b, s_psi) = (sup_abs(&g, b(m)), sup_abs(&g, psi(m)));
        bounded &= within(s_b, sup_abs(&wide, b(m)), 0.05) && within(s_psi, sup_abs(&wide, psi(m)), 0.05);
        let (l_b, l_psi) = (lipschitz(&g, b(m)), lipschitz(&g, psi(m)));
        stable &= within(l_b, lipschitz(&fine, b(m)), 0.05) && within(l_psi, lipschitz(&fine, psi(m)), 0.05);
        sup_b = sup_b.max(s_b);
        sup_psi = sup_psi.max(s_psi);
        lip_b = lip_b.max(l_b);
        lip_psi = lip_psi.max(l_psi);
    }
    let sup_f = sup_abs(&g, f);
    let f_bounded = within(sup_f, sup_abs(&wide, f), 0.05);
    let lip_f = lipschitz(&g, f);
    let f_stable = within(lip_f, lipschitz(&fine, f), 0.05);
    let f_min = g.iter().map(|&x| model.rate(x)).fold(f64::INFINITY, f64::min);
    let f_jump = derivative_jump(&fine, f);

    push("drift_sup", sup_b, bounded);
    push("kick_sup", sup_psi, bounded);
    push("rate_sup", sup_f, f_bounded);
    push("drift_lipschitz", lip_b, stable);
    push("kick_lipschitz", lip_psi, stable);
    push("rate_lipschitz", lip_f, f_stable);
    push("rate_lower_bound", f_min, f_min > 0.0);
    // On a grid of spacing h the difference quotient of a C^1 function moves
    // by O(h) between neighbouring cells.
    push("rate_derivative_jump", f_jump, f_jump < 1e-2);

    // d_{alpha_-}(x, y) = |x - y| when |x - y| <= 1 and exceeds 1 otherwise,
    // so |g(x) - g(y)| <= max(Lip, 2 sup) d_{alpha_-}(x, y).
    let c_state = lip_b.max(2.0 * sup_b).max(lip_psi.max(2.0 * sup_psi));
    push("state_dq_constant", c_state, c_state.is_finite() && bounded);

    // Measure argument: ratio of coefficient changes to the (upper bound on
    // the) transport distance between random empirical measures.
    let mut rng = crate::rng::stream(0, crate::rng::Role::Sample, 0, 0);
    let mut ratio: f64 = 0.0;
    for _ in 0..AUDIT_MEASURES {
        let n = 50;
        let shift = 4.0 * (rng.random::<f64>() - 0.5);
        let spread = 0.1 + 3.0 * rng.random::<f64>();
        let mu: Vec<f64> = (0..n).map(|_| 4.0 * (rng.random::<f64>() - 0.5)).collect();
        let nu: Vec<f64> = (0..n).map(|_| shift + spread * (rng.random::<f64>() - 0.5)).collect();
        let (m_mu, m_nu) = (mean_tanh(&mu), mean_tanh(&nu));
        let dist = wdq_upper(
            &EmpiricalSample::new(mu).expect("nonempty"),
            &EmpiricalSample::new(nu).expect("nonempty"),
            alpha_minus.min(1.0),
        )
        .expect("valid exponent");
        let x = AUDIT_RANGE * (2.0 * rng.random::<f64>() - 1.0);
        let diff =
            (model.drift(x, m_mu) - model.drift(x, m_nu)).abs() + (model.kick(x, m_mu) - model.kick(x, m_nu)).abs();
        if dist > 0.0 {
            ratio = ratio.max(diff / dist);
        }
    }
    push("measure_dq_ratio", ratio, ratio.is_finite());
    AuditReport { checks }
}
