//! Monte Carlo machinery for mean-field particle systems whose collateral
//! jumps are heavy-tailed, their conditional McKean–Vlasov limit driven by
//! a common alpha-stable process, and the coupling between the two.

// Parameter checks are written as `!(x > 0.0)` on purpose so that NaN fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod limit_system;
pub mod metrics;
pub mod models;
pub mod numeric;
pub mod particle_system;
pub mod rng;
pub mod stable_process;

pub use coupling::{CouplingConfig, CouplingReport};
pub use distributions::{CollateralLaw, HeavyTailParams, HeavyTailSpec, MiddleFill, StableSpec};
pub use error::{Error, Result};
pub use harness::{choose_delta, run_experiment, ExperimentConfig, ExperimentKind, LawConfig, ValidatedConfig};
pub use models::{DriftFamily, InitialLaw, KickFamily, ModelSpec, RateFamily};
pub use particle_system::{JumpLedger, TrajectoryBundle};
pub use stable_process::DrivingPath;
