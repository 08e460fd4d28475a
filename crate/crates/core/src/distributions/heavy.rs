//! Heavy-tailed laws with a two-term power tail.
//!
//! The distribution function `G` is prescribed outside `(-L, L)`:
//!
//! ```text
//! 1 - G(x) = (1 + beta) (A x^-alpha + A~ x^-(alpha + gamma)),   x >= L
//!     G(x) = (1 - beta) (A |x|^-alpha + A~ |x|^-(alpha + gamma)), x <= -L
//! ```
//!
//! and left free on the middle interval, which is filled according to
//! [`MiddleFill`]. Such a law lies in the domain of attraction of a strictly
//! alpha-stable law with Lévy intensities `a_± = (1 ± beta) alpha A`.

use rand::Rng;
use rand_distr::{Distribution, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::safeguarded_newton;

const INDEX_EPS: f64 = 1e-12;

/// How the mass not carried by the tails is placed on `(-L, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiddleFill {
    /// All remaining mass sits in an atom at zero.
    #[default]
    AtomAtZero,
    /// Remaining mass is spread uniformly over `(-L, L)`.
    UniformOnMiddle,
}

/// Unchecked parameters, as read from a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyTailParams {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub a: f64,
    pub a_tilde: f64,
    pub l: f64,
    #[serde(default)]
    pub middle_fill: MiddleFill,
    /// Requested centering. Ignored (forced on) when `alpha > 1`.
    #[serde(default)]
    pub centered: bool,
}

/// A validated heavy-tailed law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTailSpec {
    alpha: f64,
    gamma: f64,
    beta: f64,
    a: f64,
    a_tilde: f64,
    l: f64,
    middle_fill: MiddleFill,
    centered: bool,
    shift: f64,
}

impl HeavyTailSpec {
    /// Check every constraint on the parameters and build the law.
    pub fn validate(raw: HeavyTailParams) -> Result<Self> {
        let HeavyTailParams {
            alpha,
            gamma,
            beta,
            a,
            a_tilde,
            l,
            middle_fill,
            centered,
        } = raw;
        let finite = [alpha, gamma, beta, a, a_tilde, l].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::RangeError("all parameters must be finite".into()));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::RangeError(format!("alpha = {alpha} outside (0, 2)")));
        }
        if (alpha - 1.0).abs() < INDEX_EPS {
            return Err(Error::ForbiddenIndex("alpha = 1".into()));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::RangeError(format!("beta = {beta} outside [-1, 1]")));
        }
        for (name, v) in [("gamma", gamma), ("A", a), ("A~", a_tilde), ("L", l)] {
            if v <= 0.0 {
                return Err(Error::RangeError(format!("{name} = {v} must be positive")));
            }
        }
        let s = alpha + gamma;
        if (s - 1.0).abs() < INDEX_EPS || (s - 2.0).abs() < INDEX_EPS {
            return Err(Error::ForbiddenIndex(format!("alpha + gamma = {s}")));
        }
        let mass = l.powf(-alpha) * (a + l.powf(-gamma) * a_tilde);
        if mass > 0.5 + 1e-15 {
            return Err(Error::MassConstraintViolated { value: mass });
        }
        if centered && alpha < 1.0 {
            return Err(Error::RangeError("centering is only defined for alpha > 1".into()));
        }
        let mut spec = Self {
            alpha,
            gamma,
            beta,
            a,
            a_tilde,
            l,
            middle_fill,
            centered: alpha > 1.0,
            shift: 0.0,
        };
        if spec.centered {
            spec.shift = spec.mean()?;
        }
        Ok(spec)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn a_tilde(&self) -> f64 {
        self.a_tilde
    }
    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn middle_fill(&self) -> MiddleFill {
        self.middle_fill
    }
    pub fn centered(&self) -> bool {
        self.centered
    }

    pub fn params(&self) -> HeavyTailParams {
        HeavyTailParams {
            alpha: self.alpha,
            gamma: self.gamma,
            beta: self.beta,
            a: self.a,
            a_tilde: self.a_tilde,
            l: self.l,
            middle_fill: self.middle_fill,
            centered: self.centered,
        }
    }

    /// Survival-type tail function `A y^-alpha + A~ y^-(alpha+gamma)` for `y >= L`.
    fn tail_shape(&self, y: f64) -> f64 {
        self.a * y.powf(-self.alpha) + self.a_tilde * y.powf(-self.alpha - self.gamma)
    }

    /// `P(xi >= L)`.
    pub fn p_plus(&self) -> f64 {
        (1.0 + self.beta) * self.tail_shape(self.l)
    }

    /// `P(xi <= -L)`.
    pub fn p_minus(&self) -> f64 {
        (1.0 - self.beta) * self.tail_shape(self.l)
    }

    /// Mass placed on the open middle interval `(-L, L)`.
    pub fn middle_mass(&self) -> f64 {
        1.0 - self.p_plus() - self.p_minus()
    }

    /// Distribution function of the uncentered law.
    pub fn cdf(&self, x: f64) -> f64 {
        if x >= self.l {
            1.0 - (1.0 + self.beta) * self.tail_shape(x)
        } else if x <= -self.l {
            (1.0 - self.beta) * self.tail_shape(-x)
        } else {
            let p_minus = self.p_minus();
            match self.middle_fill {
                MiddleFill::AtomAtZero => {
                    if x < 0.0 {
                        p_minus
                    } else {
                        1.0 - self.p_plus()
                    }
                }
                MiddleFill::UniformOnMiddle => p_minus + self.middle_mass() * (x + self.l) / (2.0 * self.l),
            }
        }
    }

    /// Mean of the uncentered law. Needs `alpha > 1`.
    pub fn mean(&self) -> Result<f64> {
        if self.alpha < 1.0 {
            return Err(Error::MomentUndefined(format!(
                "first moment is infinite for alpha = {}",
                self.alpha
            )));
        }
        let (al, g, l) = (self.alpha, self.gamma, self.l);
        let t = al * self.a / (al - 1.0) * l.powf(1.0 - al)
            + (al + g) * self.a_tilde / (al + g - 1.0) * l.powf(1.0 - al - g);
        // Both middle fills are symmetric about zero.
        Ok((1.0 + self.beta) * t - (1.0 - self.beta) * t)
    }

    /// Solve `c (A y^-alpha + A~ y^-(alpha+gamma)) = v` for `y >= L`.
    fn invert_tail(&self, c: f64, v: f64) -> Result<f64> {
        let (al, g) = (self.alpha, self.gamma);
        let (a, at) = (self.a, self.a_tilde);
        let y_lo = self.l.max((c * a / v).powf(1.0 / al));
        let y_hi = (c * (a + at * self.l.powf(-g)) / v).powf(1.0 / al);
        if y_hi <= y_lo {
            return Ok(y_lo);
        }
        // Work in s = ln y where the equation is convex and well scaled.
        let ln_v = v.ln();
        let h = |s: f64| {
            let p = a * (-al * s).exp();
            let q = at * (-(al + g) * s).exp();
            let val = (c * (p + q)).ln() - ln_v;
            let der = -(al * p + (al + g) * q) / (p + q);
            (val, der)
        };
        let (s_lo, s_hi) = (y_lo.ln(), y_hi.ln());
        let s = safeguarded_newton(h, s_lo, s_hi, s_lo, 1e-13)?;
        Ok(s.exp())
    }

    /// Generalized inverse of the uncentered distribution function.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::RangeError(format!("quantile level {u} outside (0, 1)")));
        }
        let p_minus = self.p_minus();
        let p_plus = self.p_plus();
        if u <= p_minus {
            Ok(-self.invert_tail(1.0 - self.beta, u)?)
        } else if u > 1.0 - p_plus {
            self.invert_tail(1.0 + self.beta, 1.0 - u)
        } else {
            Ok(self.middle_value(u - p_minus))
        }
    }

    fn middle_value(&self, offset: f64) -> f64 {
        match self.middle_fill {
            MiddleFill::AtomAtZero => 0.0,
            MiddleFill::UniformOnMiddle => -self.l + 2.0 * self.l * (offset / self.middle_mass()).clamp(0.0, 1.0),
        }
    }

    /// One draw before centering.
    pub fn sample_uncentered<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let u: f64 = rng.sample(Open01);
        let p_minus = self.p_minus();
        let p_plus = self.p_plus();
        if u < p_minus {
            Ok(-self.invert_tail(1.0 - self.beta, u)?)
        } else if u >= 1.0 - p_plus {
            // Survival level; exact when u >= 1/2.
            self.invert_tail(1.0 + self.beta, 1.0 - u)
        } else {
            Ok(self.middle_value(u - p_minus))
        }
    }

    /// One draw of the (possibly centered) law.
    pub fn try_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.sample_uncentered(rng)? - self.shift)
    }

    /// Shift subtracted from every draw (the mean when centered, else 0).
    pub fn shift(&self) -> f64 {
        self.shift
    }
}

impl Distribution<f64> for HeavyTailSpec {
    /// Panics on a root-finding failure, which cannot happen for a validated
    /// spec.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.try_sample(rng)
            .expect("tail inversion failed on a validated heavy-tail spec")
    }
}
