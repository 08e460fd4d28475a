//! Strictly alpha-stable laws parametrized by their Lévy measure
//! `a_+ z^{-1-alpha} dz` on `z > 0` and `a_- |z|^{-1-alpha} dz` on `z < 0`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};
use statrs::function::gamma::gamma;

use crate::distributions::heavy::HeavyTailSpec;
use crate::error::{Error, Result};

/// `C_alpha = (1 - alpha) / (Gamma(2 - alpha) cos(pi alpha / 2))`, the tail
/// constant of the `S_alpha(sigma, beta, 0)` parametrization.
pub fn c_alpha(alpha: f64) -> f64 {
    (1.0 - alpha) / (gamma(2.0 - alpha) * (PI * alpha / 2.0).cos())
}

/// A strictly stable law with index `alpha != 1`.
///
/// Derived quantities follow the `S_alpha(sigma, beta, 0)` convention:
/// `beta = (a_+ - a_-)/(a_+ + a_-)` and `alpha C_alpha sigma^alpha = a_+ + a_-`,
/// so that `P(S > x) ~ a_+ x^-alpha / alpha`. For `alpha > 1` the law has
/// mean zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableSpec {
    alpha: f64,
    a_plus: f64,
    a_minus: f64,
    sigma: f64,
    beta: f64,
    cms_shift: f64,
    cms_scale: f64,
}

impl StableSpec {
    pub fn new(alpha: f64, a_plus: f64, a_minus: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::RangeError(format!("alpha = {alpha} outside (0, 2)")));
        }
        if (alpha - 1.0).abs() < 1e-12 {
            return Err(Error::ForbiddenIndex("alpha = 1".into()));
        }
        if !(a_plus >= 0.0 && a_minus >= 0.0) || a_plus + a_minus <= 0.0 {
            return Err(Error::RangeError(format!(
                "intensities a+ = {a_plus}, a- = {a_minus} must be nonnegative and not both zero"
            )));
        }
        let total = a_plus + a_minus;
        let beta = (a_plus - a_minus) / total;
        let sigma = (total / (alpha * c_alpha(alpha))).powf(1.0 / alpha);
        let t = beta * (PI * alpha / 2.0).tan();
        Ok(Self {
            alpha,
            a_plus,
            a_minus,
            sigma,
            beta,
            cms_shift: t.atan() / alpha,
            cms_scale: (1.0 + t * t).powf(1.0 / (2.0 * alpha)),
        })
    }

    /// The stable limit of normalized sums of i.i.d. draws from `heavy`:
    /// `a_± = (1 ± beta) alpha A`.
    pub fn from_heavy(heavy: &HeavyTailSpec) -> Self {
        let alpha = heavy.alpha();
        let scale = alpha * heavy.a();
        Self::new(alpha, (1.0 + heavy.beta()) * scale, (1.0 - heavy.beta()) * scale)
            .expect("a validated heavy-tail spec maps to valid stable intensities")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn a_plus(&self) -> f64 {
        self.a_plus
    }
    pub fn a_minus(&self) -> f64 {
        self.a_minus
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn total_intensity(&self) -> f64 {
        self.a_plus + self.a_minus
    }

    /// Standardized Chambers–Mallows–Stuck draw from `S_alpha(1, beta, 0)`.
    fn standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        let v = PI * (u - 0.5);
        let w: f64 = rng.sample(Exp1);
        let a = self.alpha;
        let arg = a * (v + self.cms_shift);
        self.cms_scale * arg.sin() / v.cos().powf(1.0 / a) * ((v - arg).cos() / w).powf((1.0 - a) / a)
    }
}

impl Distribution<f64> for StableSpec {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sigma * self.standard(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::heavy::{HeavyTailParams, MiddleFill};
    use approx::assert_abs_diff_eq;

    #[test]
    fn c_alpha_at_three_halves() {
        assert_abs_diff_eq!(c_alpha(1.5), 0.398942, epsilon = 1e-6);
    }

    #[test]
    fn params_from_heavy() {
        let h = HeavyTailSpec::validate(HeavyTailParams {
            alpha: 1.5,
            gamma: 0.3,
            beta: 0.0,
            a: 0.2,
            a_tilde: 0.05,
            l: 1.0,
            middle_fill: MiddleFill::AtomAtZero,
            centered: true,
        })
        .unwrap();
        let s = StableSpec::from_heavy(&h);
        assert_abs_diff_eq!(s.a_plus(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(s.a_minus(), 0.3, epsilon = 1e-15);
        assert_eq!(s.beta(), 0.0);
        // alpha C_alpha sigma^alpha = 0.6  =>  sigma^1.5 = 0.6 / (1.5 * 0.398942)
        assert_abs_diff_eq!(s.sigma().powf(1.5), 1.002652, epsilon = 1e-6);
    }

    #[test]
    fn rejects_bad_intensities() {
        assert!(StableSpec::new(1.5, 0.0, 0.0).is_err());
        assert!(StableSpec::new(1.5, -0.1, 0.3).is_err());
        assert!(matches!(StableSpec::new(1.0, 0.1, 0.3), Err(Error::ForbiddenIndex(_))));
    }

    #[test]
    fn totally_skewed_below_one_is_positive() {
        let s = StableSpec::new(0.6, 1.0, 0.0).unwrap();
        let mut rng = crate::rng::stream(1, crate::rng::Role::Sample, 0, 0);
        for _ in 0..10_000 {
            assert!(s.sample(&mut rng) > 0.0);
        }
    }

    #[test]
    fn characteristic_modulus_matches_levy_measure() {
        // For the density a_+- |z|^{-1-alpha} on each half-line,
        // -log |E e^{itX}| = (a_+ + a_-) Gamma(1 - alpha) cos(pi alpha / 2) |t|^alpha / alpha.
        for (alpha, a_plus, a_minus, seed) in [(1.5, 0.15, 0.15, 2), (0.8, 0.3, 0.1, 3), (1.2, 0.4, 0.0, 4)] {
            let s = StableSpec::new(alpha, a_plus, a_minus).unwrap();
            let scale = (a_plus + a_minus)
                * statrs::function::gamma::gamma(1.0 - alpha)
                * (std::f64::consts::FRAC_PI_2 * alpha).cos()
                / alpha;
            let mut rng = crate::rng::stream(seed, crate::rng::Role::Sample, 0, 0);
            let n = 200_000;
            let (mut re, mut im) = (0.0, 0.0);
            for _ in 0..n {
                let x = s.sample(&mut rng);
                re += x.cos();
                im += x.sin();
            }
            let modulus = (re * re + im * im).sqrt() / n as f64;
            assert_abs_diff_eq!(modulus, (-scale).exp(), epsilon = 0.01);
        }
    }
}
