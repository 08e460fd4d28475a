//! Experiment configuration: TOML schema and validation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::{CollateralLaw, HeavyTailParams, HeavyTailSpec, StableSpec};
use crate::error::{Error, Result};
use crate::harness::delta::choose_delta;
use crate::models::{assumption_audit, ModelSpec};
use crate::stable_process::{level_for_censoring_probability, window_count};

/// Largest default RK4 step.
pub const DEFAULT_FLOW_STEP: f64 = 0.01;
/// Default probability that the driving path has a jump above `K` on the
/// horizon.
pub const DEFAULT_CENSOR_PROB: f64 = 0.0099;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Selfsim,
    CltRate,
    CouplingSweep,
    ChaosTest,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Selfsim => "selfsim",
            ExperimentKind::CltRate => "clt-rate",
            ExperimentKind::CouplingSweep => "coupling-sweep",
            ExperimentKind::ChaosTest => "chaos-test",
        }
    }

    fn uses_particles(self) -> bool {
        matches!(self, ExperimentKind::CouplingSweep | ExperimentKind::ChaosTest)
    }
}

/// The collateral law as written in a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LawConfig {
    Heavy(HeavyTailParams),
    ExactStable { alpha: f64, a_plus: f64, a_minus: f64 },
}

impl LawConfig {
    pub fn build(&self) -> Result<CollateralLaw> {
        Ok(match *self {
            LawConfig::Heavy(p) => CollateralLaw::Heavy(HeavyTailSpec::validate(p)?),
            LawConfig::ExactStable { alpha, a_plus, a_minus } => {
                CollateralLaw::ExactStable(StableSpec::new(alpha, a_plus, a_minus)?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfSimOptions {
    /// Number of windows `k`.
    pub windows: usize,
    /// Mean of the Poisson window counts.
    pub poisson_mean: f64,
    /// Quantile bins per axis of the independence table.
    pub grid: usize,
}

impl Default for SelfSimOptions {
    fn default() -> Self {
        Self {
            windows: 100_000,
            poisson_mean: 50.0,
            grid: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltOptions {
    /// Size of the stable reference sample.
    pub reference_size: usize,
}

impl Default for CltOptions {
    fn default() -> Self {
        Self {
            reference_size: 1_000_000,
        }
    }
}

fn default_horizon() -> f64 {
    1.0
}

fn default_censor_prob() -> f64 {
    DEFAULT_CENSOR_PROB
}

/// One experiment as read from TOML.
///
/// `n_list` holds particle counts for the coupling and chaos experiments and
/// summand counts for the CLT experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    pub law: LawConfig,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Truncation level; derived from `censor_prob` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_level: Option<f64>,
    #[serde(default = "default_censor_prob")]
    pub censor_prob: f64,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    /// Overrides the exponent in `delta = N^-eta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_step: Option<f64>,
    #[serde(default)]
    pub selfsim: SelfSimOptions,
    #[serde(default)]
    pub clt: CltOptions,
}

/// Window choice for one particle count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    /// Requested window length `N^-eta`.
    pub delta: f64,
    pub eta: f64,
    pub flow_step: f64,
}

/// A configuration that passed validation, with every derived quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    pub kind: ExperimentKind,
    pub raw: ExperimentConfig,
    pub law: CollateralLaw,
    pub model: Option<ModelSpec>,
    pub k_level: f64,
    pub points: Vec<SweepPoint>,
    /// Rate exponent predicted for the chosen windows, when the rate table
    /// covers the law.
    pub predicted_exponent: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigError(e.to_string()))
    }

    /// Canonical TOML rendering. Two configurations that parse to the same
    /// value render identically.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigError(e.to_string()))
    }

    /// Hex SHA-256 of the canonical rendering.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Check every invariant for experiment `kind` and derive windows and
    /// the truncation level.
    pub fn validate(&self, kind: ExperimentKind) -> Result<ValidatedConfig> {
        if let Some(own) = self.experiment {
            if own != kind {
                return Err(Error::ConfigError(format!(
                    "configuration is for {}, not {}",
                    own.name(),
                    kind.name()
                )));
            }
        }
        let law = self.law.build()?;
        let alpha = law.alpha();
        self.check_indices(alpha)?;
        if self.replications == 0 {
            return Err(Error::ConfigError("replications must be positive".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::ConfigError(format!("horizon {} must be positive", self.horizon)));
        }
        if !(self.censor_prob > 0.0 && self.censor_prob < 1.0) {
            return Err(Error::ConfigError(format!(
                "censor_prob {} must lie in (0, 1)",
                self.censor_prob
            )));
        }
        let k_level = match self.k_level {
            Some(k) if k > 0.0 => k,
            Some(k) => return Err(Error::ConfigError(format!("k_level {k} must be positive"))),
            None => level_for_censoring_probability(&law.stable_limit(), self.horizon, self.censor_prob),
        };
        if let Some(step) = self.flow_step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::ConfigError(format!("flow_step {step} must be positive")));
            }
        }

        let mut points = Vec::new();
        let mut predicted_exponent = None;
        match kind {
            ExperimentKind::Selfsim => {
                let o = self.selfsim;
                if o.windows == 0 || !(o.poisson_mean > 0.0) || o.grid < 2 {
                    return Err(Error::ConfigError(
                        "selfsim needs windows > 0, poisson_mean > 0 and grid >= 2".into(),
                    ));
                }
            }
            ExperimentKind::CltRate => {
                if self.n_list.is_empty() || self.n_list.contains(&0) {
                    return Err(Error::ConfigError("n_list must hold positive summand counts".into()));
                }
                if self.clt.reference_size == 0 {
                    return Err(Error::ConfigError("reference_size must be positive".into()));
                }
            }
            ExperimentKind::CouplingSweep | ExperimentKind::ChaosTest => {
                let model = self
                    .model
                    .ok_or_else(|| Error::ConfigError(format!("{} needs a model", kind.name())))?;
                model.validate(alpha)?;
                let audit = assumption_audit(&model, self.alpha_minus);
                if !audit.passed() {
                    let failed: Vec<&str> = audit
                        .checks
                        .iter()
                        .filter(|c| !c.passed)
                        .map(|c| c.name.as_str())
                        .collect();
                    return Err(Error::ConfigError(format!(
                        "model fails the assumption audit: {}",
                        failed.join(", ")
                    )));
                }
                if self.n_list.is_empty() || self.n_list.iter().any(|&n| n < 2) {
                    return Err(Error::ConfigError("n_list must hold particle counts >= 2".into()));
                }
                let gamma = law.gamma().unwrap_or(f64::INFINITY);
                if let Some(eta) = self.eta {
                    if !(eta > 0.0 && eta < 1.0) {
                        return Err(Error::ConfigError(format!("eta {eta} must lie in (0, 1)")));
                    }
                }
                predicted_exponent = choose_delta(alpha, gamma, 2).ok().map(|t| t.predicted_rate_exponent);
                for &n in &self.n_list {
                    let (delta, eta) = match self.eta {
                        Some(eta) => ((n as f64).powf(-eta), eta),
                        None => {
                            let t = choose_delta(alpha, gamma, n)?;
                            (t.delta, t.eta)
                        }
                    };
                    let window = self.horizon / window_count(self.horizon, delta) as f64;
                    if 2.0 * window * model.f_hi() >= 1.0 {
                        return Err(Error::ConfigError(format!(
                            "N = {n}: window {window} and rate bound {} violate 2 delta f_hi < 1",
                            model.f_hi()
                        )));
                    }
                    points.push(SweepPoint {
                        n,
                        delta,
                        eta,
                        flow_step: self.flow_step.unwrap_or(delta.min(DEFAULT_FLOW_STEP)),
                    });
                }
            }
        }
        Ok(ValidatedConfig {
            kind,
            raw: self.clone(),
            law,
            model: if kind.uses_particles() { self.model } else { None },
            k_level,
            points,
            predicted_exponent,
        })
    }

    fn check_indices(&self, alpha: f64) -> Result<()> {
        let (lo, hi) = (self.alpha_minus, self.alpha_plus);
        if !(lo > 0.0 && lo < alpha && alpha < hi && hi < 2.0) {
            return Err(Error::ConfigError(format!(
                "need 0 < alpha_minus < alpha < alpha_plus < 2, got {lo}, {alpha}, {hi}"
            )));
        }
        if alpha > 1.0 && lo <= 1.0 {
            return Err(Error::ConfigError(format!(
                "alpha = {alpha} > 1 needs alpha_minus > 1, got {lo}"
            )));
        }
        Ok(())
    }
}

impl ValidatedConfig {
    pub fn alpha(&self) -> f64 {
        self.law.alpha()
    }
}
