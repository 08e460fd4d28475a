//! Samplers for the collateral-jump law and for strictly stable laws.

pub mod heavy;
pub mod stable;

pub use heavy::{HeavyTailParams, HeavyTailSpec, MiddleFill};
pub use stable::{c_alpha, StableSpec};

use rand::Rng;
use rand_distr::Distribution;

use crate::error::Result;

/// Law of the collateral jump sizes `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollateralLaw {
    /// A heavy-tailed law in the domain of attraction of a stable law.
    Heavy(HeavyTailSpec),
    /// A strictly stable law. Random sums normalized by `P^{1/alpha}` are
    /// then exactly stable.
    ExactStable(StableSpec),
}

impl CollateralLaw {
    pub fn alpha(&self) -> f64 {
        match self {
            CollateralLaw::Heavy(h) => h.alpha(),
            CollateralLaw::ExactStable(s) => s.alpha(),
        }
    }

    /// The stable law attracting normalized sums of this law.
    pub fn stable_limit(&self) -> StableSpec {
        match self {
            CollateralLaw::Heavy(h) => StableSpec::from_heavy(h),
            CollateralLaw::ExactStable(s) => *s,
        }
    }

    /// Second-order index, when the law has one.
    pub fn gamma(&self) -> Option<f64> {
        match self {
            CollateralLaw::Heavy(h) => Some(h.gamma()),
            CollateralLaw::ExactStable(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, CollateralLaw::ExactStable(_))
    }

    pub fn try_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            CollateralLaw::Heavy(h) => h.try_sample(rng),
            CollateralLaw::ExactStable(s) => Ok(s.sample(rng)),
        }
    }
}

impl Distribution<f64> for CollateralLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            CollateralLaw::Heavy(h) => h.sample(rng),
            CollateralLaw::ExactStable(s) => s.sample(rng),
        }
    }
}
