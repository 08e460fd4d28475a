//! The conditional McKean–Vlasov limit system, with its conditional law
//! replaced by the empirical measure of `M` particles driven by one common
//! stable path.
//!
//! Over each grid cell of the path the integrand `mu(f)^{1/alpha}` is frozen
//! at the cell start. Particles drift with RK4, fire main jumps from the
//! shared proposals (index below one), receive the common increment at the
//! end of the cell and jump together at the exact times of recorded big
//! jumps.

use crate::error::{Error, Result};
use crate::models::{Coefficients, ModelSpec};
use crate::particle_system::{check_obs_times, MeasureInput, Population, Proposal, Provenance, TrajectoryBundle};
use crate::stable_process::{compensator_mk, DrivingPath};

/// Settings of a limit-system run.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitConfig {
    /// Number of particles standing in for the conditional law.
    pub m: usize,
    /// Largest RK4 step.
    pub flow_step: f64,
    /// Number of Picard distances to compute (0 when unused).
    pub picard_iters: usize,
    /// Drive with jumps up to `K` only, compensated by `-M_K mu(f)^{1/alpha}`.
    pub truncated: bool,
}

fn check(model: &ModelSpec, cfg: &LimitConfig, path: &DrivingPath, initials: &[f64]) -> Result<()> {
    if cfg.m < 2 || initials.len() != cfg.m {
        return Err(Error::ConfigError(format!(
            "need M >= 2 particles with matching initials, got M = {}, {} initials",
            cfg.m,
            initials.len()
        )));
    }
    if !(cfg.flow_step > 0.0) {
        return Err(Error::ConfigError("flow step must be positive".into()));
    }
    model.validate(path.spec().alpha())
}

/// `mu(f)^{1/alpha}` for the current population.
fn integrand(model: &ModelSpec, pop: &Population, alpha: f64) -> f64 {
    let mean = if model.rate_is_constant() {
        model.f_lo()
    } else {
        pop.mean_rate(model)
    };
    mean.powf(1.0 / alpha)
}

enum Item {
    Proposal(Proposal),
    BigJump(f64),
    Observe,
}

/// Simulate the limit system along `path` from `initials`, with main jumps
/// proposed by `proposals` (ignored unless the index is below one and the
/// model has a kick). Observation times must lie within the path horizon.
pub fn simulate_limit(
    model: &ModelSpec,
    cfg: &LimitConfig,
    path: &DrivingPath,
    initials: &[f64],
    proposals: &[Proposal],
    obs_times: &[f64],
) -> Result<TrajectoryBundle> {
    check(model, cfg, path, initials)?;
    let alpha = path.spec().alpha();
    let tol = 1e-9 * path.grid_step();
    check_obs_times(obs_times, path.horizon() + tol)?;
    let (increments, m_k) = if cfg.truncated {
        (path.truncated_increments()?, compensator_mk(path.spec(), path.k())?)
    } else {
        (path.increments().to_vec(), 0.0)
    };
    let kicks = alpha < 1.0 && model.has_kick();
    let f_hi = model.f_hi();

    let mut pop = Population::new(initials);
    let mut now = 0.0;
    let mut positions = Vec::with_capacity(obs_times.len());
    let mut obs = obs_times.iter().copied().peekable();
    let mut props = proposals.iter().filter(|_| kicks).peekable();
    let mut jumps = path.big_jumps().iter().filter(|_| !cfg.truncated).peekable();

    for (k, inc) in increments.iter().enumerate() {
        let end = path.cell_end(k);
        let c = integrand(model, &pop, alpha);
        let extra = -m_k * c;
        loop {
            let candidates = [
                props.peek().filter(|p| p.time <= end).map(|p| p.time),
                jumps.peek().filter(|j| j.time <= end).map(|j| j.time),
                obs.peek().filter(|t| **t < end - tol).copied(),
            ];
            let Some((which, t)) = candidates
                .iter()
                .enumerate()
                .filter_map(|(i, t)| t.map(|t| (i, t)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
            else {
                break;
            };
            let item = match which {
                0 => Item::Proposal(*props.next().expect("peeked")),
                1 => Item::BigJump(jumps.next().expect("peeked").size),
                _ => {
                    obs.next();
                    Item::Observe
                }
            };
            pop.flow(model, t - now, cfg.flow_step, extra, MeasureInput::Own);
            now = t;
            match item {
                Item::Proposal(p) => {
                    let x = pop.get(p.particle);
                    if p.v * f_hi <= model.rate(x) {
                        pop.bump(p.particle, model.kick(x, 0.0));
                    }
                }
                Item::BigJump(size) => pop.shift_all(c * size),
                Item::Observe => positions.push(pop.positions()),
            }
        }
        pop.flow(model, end - now, cfg.flow_step, extra, MeasureInput::Own);
        now = end;
        pop.shift_all(c * inc);
        while obs.next_if(|t| *t <= end + tol).is_some() {
            positions.push(pop.positions());
        }
    }
    Ok(TrajectoryBundle {
        times: obs_times.to_vec(),
        positions,
        provenance: Provenance::default(),
    })
}

/// Output of [`picard_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    /// Last iterate at the path grid times (time 0 included).
    pub bundle: TrajectoryBundle,
    /// `distances[n - 1]` is the largest mean gap over grid times between
    /// iterates `n + 1` and `n`.
    pub distances: Vec<f64>,
}

/// Everything iterate `n + 1` needs from iterate `n`.
struct Iterate {
    m_tanh: Vec<f64>,
    integrand: Vec<f64>,
    grid_positions: Vec<Vec<f64>>,
}

/// Solve the truncated limit equation by Picard iteration.
///
/// Iterate 0 is constant in time at the initial positions. Iterate `n`
/// solves the particle dynamics with the measure arguments (`<tanh, mu>` per
/// RK4 step and `mu(f)^{1/alpha}` per cell) taken from iterate `n - 1`, on
/// the same path and initials. The time grid is shared by all iterates, so
/// the iteration is exactly a fixed-point iteration of one discrete scheme.
pub fn picard_solve(
    model: &ModelSpec,
    cfg: &LimitConfig,
    path: &DrivingPath,
    initials: &[f64],
) -> Result<PicardOutcome> {
    check(model, cfg, path, initials)?;
    let alpha = path.spec().alpha();
    if alpha < 1.0 {
        return Err(Error::RegimeError(format!(
            "Picard iteration needs alpha > 1, got {alpha}"
        )));
    }
    if cfg.picard_iters < 1 || !path.k().is_finite() {
        return Err(Error::ConfigError(
            "Picard iteration needs at least one iterate and a finite K".into(),
        ));
    }
    let increments = path.truncated_increments()?;
    let m_k = compensator_mk(path.spec(), path.k())?;
    let cells = path.cells();
    let sub = (path.grid_step() / cfg.flow_step).ceil().max(1.0) as usize;
    let h = path.grid_step() / sub as f64;

    let start = Population::new(initials);
    let mut prev = Iterate {
        m_tanh: vec![start.mean_tanh(); cells * sub],
        integrand: vec![integrand(model, &start, alpha); cells],
        grid_positions: vec![initials.to_vec(); cells + 1],
    };
    let mut distances = Vec::with_capacity(cfg.picard_iters);
    let mut last_positions = Vec::new();
    for n in 1..=cfg.picard_iters + 1 {
        let mut pop = Population::new(initials);
        let mut next = Iterate {
            m_tanh: Vec::with_capacity(cells * sub),
            integrand: Vec::with_capacity(cells),
            grid_positions: vec![initials.to_vec()],
        };
        for (k, inc) in increments.iter().enumerate() {
            let c = prev.integrand[k];
            next.integrand.push(integrand(model, &pop, alpha));
            for s in 0..sub {
                next.m_tanh.push(pop.mean_tanh());
                let frozen = MeasureInput::Frozen(prev.m_tanh[k * sub + s]);
                pop.flow(model, h, h, -m_k * c, frozen);
            }
            pop.shift_all(c * inc);
            next.grid_positions.push(pop.positions());
        }
        if n >= 2 {
            distances.push(max_mean_gap(&next.grid_positions, &prev.grid_positions));
        }
        last_positions = next.grid_positions.clone();
        prev = next;
    }
    let times = (0..=cells)
        .map(|k| if k == 0 { 0.0 } else { path.cell_end(k - 1) })
        .collect();
    Ok(PicardOutcome {
        bundle: TrajectoryBundle {
            times,
            positions: last_positions,
            provenance: Provenance::default(),
        },
        distances,
    })
}

fn max_mean_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs()).sum::<f64>() / ra.len() as f64)
        .fold(0.0, f64::max)
}
