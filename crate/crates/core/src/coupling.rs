//! Coupling the finite system with its limit.
//!
//! The collateral jumps accepted in each window of length `delta` are summed
//! and normalized by `P^{1/alpha}`, with `P` the number of accepted jumps.
//! When the collateral law is strictly stable this random-sum variable is
//! exactly stable and independent of `P`; otherwise it is close to stable,
//! with an error that shrinks as `P` grows. The normalized variables, scaled
//! by `delta^{1/alpha}`, are the increments of the common driver of the
//! limit system, which then shares initial positions and proposal clocks
//! with the finite system.

use rand::Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::distributions::{CollateralLaw, StableSpec};
use crate::error::{Error, Result};
use crate::limit_system::{simulate_limit, LimitConfig};
use crate::metrics::{d_q, mean_and_se};
use crate::models::ModelSpec;
use crate::particle_system::{simulate_finite, FiniteSystemConfig, JumpLedger, SharedNoise};
use crate::rng::{Role, StreamFamily};
use crate::stable_process::{path_from_window_sums, window_count, DrivingPath};

/// Per-window accepted-jump counts and collateral sums.
pub fn window_aggregate(ledger: &JumpLedger) -> Vec<(u64, f64)> {
    ledger.windows().iter().map(|w| (w.count, w.sum_u)).collect()
}

/// A window's normalized collateral sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowVariable {
    pub k: usize,
    pub count: u64,
    pub w: f64,
    /// The window had no accepted jump and `w` is a fresh stable draw.
    pub fresh: bool,
}

/// `W = sum_u / P^{1/alpha}` when `P > 0`, otherwise a fresh draw from `spec`.
pub fn normalized_window_variable<R: Rng + ?Sized>(
    k: usize,
    count: u64,
    sum_u: f64,
    spec: &StableSpec,
    rng: &mut R,
) -> WindowVariable {
    if count == 0 {
        WindowVariable {
            k,
            count,
            w: spec.sample(rng),
            fresh: true,
        }
    } else {
        WindowVariable {
            k,
            count,
            w: sum_u / (count as f64).powf(1.0 / spec.alpha()),
            fresh: false,
        }
    }
}

/// Assemble the coupled driver from a finite-system ledger.
pub fn build_coupled_driver<R: Rng + ?Sized>(
    ledger: &JumpLedger,
    law: &CollateralLaw,
    k_level: f64,
    rng: &mut R,
) -> (DrivingPath, Vec<WindowVariable>) {
    let spec = law.stable_limit();
    let vars: Vec<WindowVariable> = window_aggregate(ledger)
        .into_iter()
        .enumerate()
        .map(|(k, (count, sum_u))| normalized_window_variable(k, count, sum_u, &spec, rng))
        .collect();
    let ws: Vec<f64> = vars.iter().map(|v| v.w).collect();
    (path_from_window_sums(&ws, ledger.delta(), &spec, k_level), vars)
}

/// Settings of the coupled finite-versus-limit experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig {
    pub model: ModelSpec,
    pub law: CollateralLaw,
    pub n: usize,
    pub delta: f64,
    pub horizon: f64,
    pub k_level: f64,
    pub flow_step: f64,
    pub replications: usize,
    pub master_seed: u64,
    /// Exponent of the error metric `d_{alpha_-}` used when `alpha < 1`.
    pub alpha_minus: f64,
}

/// Aggregated coupling error at one grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingRow {
    pub t: f64,
    /// Mean over replications of the particle-averaged gap.
    pub err_mean: f64,
    pub err_se: f64,
    /// Mean of the gap times the indicator that no big window has occurred
    /// by `t`.
    pub err_censored_mean: f64,
    pub censor_frac: f64,
}

/// Result of [`coupled_error_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub rows: Vec<CouplingRow>,
    pub n: usize,
    /// Effective window length (divides the horizon).
    pub delta: f64,
    pub k_level: f64,
    pub alpha: f64,
    pub gamma: Option<f64>,
    pub master_seed: u64,
    pub replications: usize,
    /// Terminal positions of all finite-system particles, pooled over
    /// replications. Particles are exchangeable, so this is a sample from the
    /// law of a single tagged particle.
    pub terminal_finite: Vec<f64>,
    /// Terminal positions of the coupled limit particles, pooled the same way.
    pub terminal_limit: Vec<f64>,
}

struct ReplicationOutcome {
    errors: Vec<f64>,
    censored: Vec<bool>,
    terminal: (Vec<f64>, Vec<f64>),
}

/// Gap between coupled positions: `|x - y|` above one, `d_{alpha_-}` below.
fn gap(alpha: f64, alpha_minus: f64, x: f64, y: f64) -> f64 {
    if alpha > 1.0 {
        (x - y).abs()
    } else {
        d_q(x, y, alpha_minus)
    }
}

/// Run one coupled replication: finite system, coupled driver, limit system.
fn replicate(cfg: &CouplingConfig, obs: &[f64], r: u64) -> Result<ReplicationOutcome> {
    let family = StreamFamily::new(cfg.master_seed, r);
    let noise = SharedNoise::draw(&cfg.model, cfg.n, cfg.horizon, &family);
    let fin_cfg = FiniteSystemConfig {
        n: cfg.n,
        horizon: cfg.horizon,
        delta: cfg.delta,
        flow_step: cfg.flow_step,
        obs_times: obs.to_vec(),
    };
    let (finite, ledger) = simulate_finite(
        &cfg.model,
        &cfg.law,
        &fin_cfg,
        &noise,
        &mut family.stream(Role::Collateral, 0),
    )?;
    let (path, _) = build_coupled_driver(&ledger, &cfg.law, cfg.k_level, &mut family.stream(Role::FreshStable, 0));
    let lim_cfg = LimitConfig {
        m: cfg.n,
        flow_step: cfg.flow_step,
        picard_iters: 0,
        truncated: false,
    };
    let limit = simulate_limit(&cfg.model, &lim_cfg, &path, &noise.initials, &noise.proposals, obs)?;
    let alpha = cfg.law.alpha();
    let errors = finite
        .positions
        .iter()
        .zip(&limit.positions)
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(x, y)| gap(alpha, cfg.alpha_minus, *x, *y))
                .sum::<f64>()
                / a.len() as f64
        })
        .collect();
    let tol = 1e-9 * ledger.delta();
    let censored = obs.iter().map(|t| *t >= path.t_k() - tol).collect();
    Ok(ReplicationOutcome {
        errors,
        censored,
        terminal: (finite.terminal().to_vec(), limit.terminal().to_vec()),
    })
}

/// Grid times `0, delta, ..., horizon` of the window grid.
pub fn window_grid(horizon: f64, delta: f64) -> (f64, Vec<f64>) {
    let n = window_count(horizon, delta);
    let d = horizon / n as f64;
    let mut times: Vec<f64> = (0..n).map(|k| k as f64 * d).collect();
    times.push(horizon);
    (d, times)
}

/// Run the coupled experiment over `replications` independent replications
/// (in parallel on the current rayon pool) and aggregate the gaps at every
/// window boundary. The error is averaged over all particles of a
/// replication; particles are exchangeable, so this estimates the same
/// quantity as following a single particle.
pub fn coupled_error_experiment(cfg: &CouplingConfig) -> Result<CouplingReport> {
    if cfg.replications == 0 {
        return Err(Error::ConfigError("replications must be positive".into()));
    }
    if !(cfg.alpha_minus > 0.0 && cfg.alpha_minus < cfg.law.alpha()) {
        return Err(Error::ConfigError(format!(
            "alpha_minus = {} must lie in (0, alpha)",
            cfg.alpha_minus
        )));
    }
    let (delta, obs) = window_grid(cfg.horizon, cfg.delta);
    let outcomes: Vec<ReplicationOutcome> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| replicate(cfg, &obs, r))
        .collect::<Result<_>>()?;

    let rows = obs
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let errs: Vec<f64> = outcomes.iter().map(|o| o.errors[i]).collect();
            let (err_mean, err_se) = mean_and_se(&errs);
            let reps = outcomes.len() as f64;
            let censored_sum: f64 = outcomes.iter().filter(|o| !o.censored[i]).map(|o| o.errors[i]).sum();
            CouplingRow {
                t,
                err_mean,
                err_se,
                err_censored_mean: censored_sum / reps,
                censor_frac: outcomes.iter().filter(|o| o.censored[i]).count() as f64 / reps,
            }
        })
        .collect();
    Ok(CouplingReport {
        rows,
        n: cfg.n,
        delta,
        k_level: cfg.k_level,
        alpha: cfg.law.alpha(),
        gamma: cfg.law.gamma(),
        master_seed: cfg.master_seed,
        replications: cfg.replications,
        terminal_finite: outcomes.iter().flat_map(|o| o.terminal.0.iter().copied()).collect(),
        terminal_limit: outcomes.iter().flat_map(|o| o.terminal.1.iter().copied()).collect(),
    })
}
