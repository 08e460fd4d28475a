//! Fixtures shared by the criterion benchmarks.

use stablechaos::distributions::{CollateralLaw, HeavyTailParams, HeavyTailSpec, MiddleFill, StableSpec};
use stablechaos::models::{DriftFamily, InitialLaw, KickFamily, ModelSpec, RateFamily};

/// Totally skewed law with index 0.8.
pub fn small_index_law() -> HeavyTailSpec {
    HeavyTailSpec::validate(HeavyTailParams {
        alpha: 0.8,
        gamma: 0.5,
        beta: 1.0,
        a: 0.2,
        a_tilde: 0.1,
        l: 3.0,
        middle_fill: MiddleFill::AtomAtZero,
        centered: false,
    })
    .expect("valid fixture")
}

/// Symmetric law with index 1.5.
pub fn large_index_law() -> HeavyTailSpec {
    HeavyTailSpec::validate(HeavyTailParams {
        alpha: 1.5,
        gamma: 0.3,
        beta: 0.0,
        a: 0.1,
        a_tilde: 0.4,
        l: 1.0,
        middle_fill: MiddleFill::AtomAtZero,
        centered: true,
    })
    .expect("valid fixture")
}

pub fn stable_limit(law: &HeavyTailSpec) -> StableSpec {
    CollateralLaw::Heavy(*law).stable_limit()
}

/// Tanh drift, logistic rate; kicks only when firing particles jump.
pub fn tanh_model(kick: bool) -> ModelSpec {
    ModelSpec {
        drift: DriftFamily::Tanh { beta0: 5.0, beta1: 0.5 },
        rate: RateFamily::Logistic { lo: 0.4, hi: 0.6 },
        kick: if kick {
            KickFamily::Tanh { c: 0.5 }
        } else {
            KickFamily::Zero
        },
        initial: InitialLaw::Gaussian { mean: 0.0, sd: 1.0 },
    }
}
