//! Event-driven simulation of the finite particle system.
//!
//! Each particle carries its own proposal clock of rate `f_hi` with a
//! thinning mark per proposal. Merging the N clocks gives the global clock of
//! rate `N f_hi`. A proposal by particle `i` at time `t` is accepted when
//! `v f_hi <= f(X^i_t-)`; on acceptance particle `i` jumps by `psi` (index
//! below one only) and every other particle receives `u / N^{1/alpha}` with
//! `u` drawn from the collateral law. Between proposals all particles follow
//! `dx/dt = b(x, mu^N)`, integrated with RK4.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::distributions::CollateralLaw;
use crate::error::{Error, Result};
use crate::models::{Coefficients, DriftFamily, ModelSpec};
use crate::numeric::{order_free_mean, tanh};
use crate::rng::{Role, Stream, StreamFamily};
use crate::stable_process::window_count;

/// One proposal of a particle clock with its thinning mark `v` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub time: f64,
    pub particle: usize,
    pub v: f64,
}

/// Randomness shared by a finite system and its coupled limit system:
/// initial positions and the per-particle proposal clocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedNoise {
    pub initials: Vec<f64>,
    /// Proposals of every particle, merged and sorted by time.
    pub proposals: Vec<Proposal>,
}

impl SharedNoise {
    /// Draw initials and clocks for `n` particles on `[0, horizon]` from the
    /// per-particle streams of `family`. Particle `i` only reads the streams
    /// with index `i`.
    pub fn draw(model: &ModelSpec, n: usize, horizon: f64, family: &StreamFamily) -> Self {
        let initials = (0..n)
            .map(|i| model.initial.sample(&mut family.stream(Role::Initial, i as u64)))
            .collect();
        let clocks: Vec<Vec<Proposal>> = (0..n)
            .map(|i| particle_clock(model.f_hi(), horizon, i, &mut family.stream(Role::Thinning, i as u64)))
            .collect();
        Self {
            initials,
            proposals: merge_clocks(clocks),
        }
    }

    /// Initials only, for systems without firing (no kicks and no proposals).
    pub fn initials_only(model: &ModelSpec, n: usize, family: &StreamFamily) -> Self {
        Self {
            initials: (0..n)
                .map(|i| model.initial.sample(&mut family.stream(Role::Initial, i as u64)))
                .collect(),
            proposals: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.initials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initials.is_empty()
    }

    /// Relabel particles: particle `perm[i]` of the result carries what
    /// particle `i` carries here.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut initials = vec![0.0; self.len()];
        for (i, &p) in perm.iter().enumerate() {
            initials[p] = self.initials[i];
        }
        let mut proposals: Vec<Proposal> = self
            .proposals
            .iter()
            .map(|p| Proposal {
                particle: perm[p.particle],
                ..*p
            })
            .collect();
        sort_proposals(&mut proposals);
        Self { initials, proposals }
    }
}

fn particle_clock(rate: f64, horizon: f64, particle: usize, rng: &mut Stream) -> Vec<Proposal> {
    let gap = Exp::new(rate).expect("positive rate");
    let mut out = Vec::new();
    let mut t = gap.sample(rng);
    while t <= horizon {
        out.push(Proposal {
            time: t,
            particle,
            v: rng.random(),
        });
        t += gap.sample(rng);
    }
    out
}

fn sort_proposals(p: &mut [Proposal]) {
    p.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.particle.cmp(&b.particle)));
}

fn merge_clocks(clocks: Vec<Vec<Proposal>>) -> Vec<Proposal> {
    let mut all: Vec<Proposal> = clocks.into_iter().flatten().collect();
    sort_proposals(&mut all);
    all
}

/// Particle positions stored as `x_j = y_j + offset`, so that a common shift
/// costs O(1).
#[derive(Debug, Clone)]
pub(crate) struct Population {
    y: Vec<f64>,
    offset: f64,
    k: [Vec<f64>; 4],
}

/// Source of `<tanh, mu>` inside the flow.
#[derive(Debug, Clone, Copy)]
pub(crate) enum MeasureInput {
    /// The population's own empirical measure at each RK4 stage.
    Own,
    /// A value fixed for the whole step.
    Frozen(f64),
}

impl Population {
    pub(crate) fn new(initials: &[f64]) -> Self {
        let n = initials.len();
        Self {
            y: initials.to_vec(),
            offset: 0.0,
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    #[inline]
    pub(crate) fn get(&self, j: usize) -> f64 {
        self.y[j] + self.offset
    }

    /// Add `dx` to particle `j` only.
    #[inline]
    pub(crate) fn bump(&mut self, j: usize, dx: f64) {
        self.y[j] += dx;
    }

    /// Add `dx` to every particle.
    #[inline]
    pub(crate) fn shift_all(&mut self, dx: f64) {
        self.offset += dx;
    }

    pub(crate) fn positions(&self) -> Vec<f64> {
        self.y.iter().map(|y| y + self.offset).collect()
    }

    /// Empirical mean of the rate, independent of particle order.
    pub(crate) fn mean_rate(&self, model: &ModelSpec) -> f64 {
        let (_, hi) = model.rate_bounds();
        order_free_mean(self.y.iter().map(|y| model.rate(y + self.offset)), hi)
    }

    pub(crate) fn mean_tanh(&self) -> f64 {
        order_free_mean(self.y.iter().map(|y| tanh(y + self.offset)), 1.0)
    }

    /// Follow `dx/dt = b(x, mu) + extra` for a time `dt`, in equal RK4 steps
    /// no longer than `h_max`.
    pub(crate) fn flow(&mut self, model: &ModelSpec, dt: f64, h_max: f64, extra: f64, measure: MeasureInput) {
        if dt <= 0.0 {
            return;
        }
        let (beta0, beta1) = match model.drift {
            DriftFamily::Zero => {
                self.offset += extra * dt;
                return;
            }
            DriftFamily::Tanh { beta0, beta1 } => (beta0, beta1),
        };
        let steps = (dt / h_max).ceil().max(1.0) as usize;
        let h = dt / steps as f64;
        for _ in 0..steps {
            self.rk4_step(beta0, beta1, h, extra, measure);
        }
    }

    fn rk4_step(&mut self, beta0: f64, beta1: f64, h: f64, extra: f64, measure: MeasureInput) {
        let [k1, k2, k3, k4] = &mut self.k;
        let y = &self.y;
        let off = self.offset;
        let stage = |prev: Option<(&[f64], f64)>, out: &mut [f64]| {
            match prev {
                None => out.iter_mut().zip(y).for_each(|(o, y)| *o = tanh(y + off)),
                Some((kp, c)) => out
                    .iter_mut()
                    .zip(y.iter().zip(kp))
                    .for_each(|(o, (y, k))| *o = tanh(y + off + c * k)),
            }
            let common = if beta1 == 0.0 {
                0.0
            } else {
                let m = match measure {
                    MeasureInput::Own => order_free_mean(out.iter().copied(), 1.0),
                    MeasureInput::Frozen(m) => m,
                };
                beta1 * tanh(m)
            } + extra;
            out.iter_mut().for_each(|o| *o = -beta0 * *o + common);
        };
        stage(None, k1);
        stage(Some((k1, 0.5 * h)), k2);
        stage(Some((k2, 0.5 * h)), k3);
        stage(Some((k3, h)), k4);
        let w = h / 6.0;
        for (j, y) in self.y.iter_mut().enumerate() {
            *y += w * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
}

/// Who, when and what: one proposal as seen by the finite system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEvent {
    pub time: f64,
    pub particle: usize,
    pub accepted: bool,
    /// Collateral size, present on acceptance only.
    pub u: Option<f64>,
    /// Whether the firing particle itself jumped.
    pub main_jump: bool,
}

/// Accepted-event count and collateral sum over `(k delta, (k+1) delta]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRecord {
    pub k: usize,
    pub count: u64,
    pub sum_u: f64,
}

/// Record of every proposal of a finite-system run and its per-window
/// aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpLedger {
    delta: f64,
    horizon: f64,
    events: Vec<LedgerEvent>,
    windows: Vec<WindowRecord>,
}

impl JumpLedger {
    /// Build a ledger over `[0, horizon]` with windows of length close to
    /// `delta` (the effective length divides the horizon exactly).
    pub fn from_events(delta: f64, horizon: f64, events: Vec<LedgerEvent>) -> Self {
        let n = window_count(horizon, delta);
        let delta = horizon / n as f64;
        let mut windows: Vec<WindowRecord> = (0..n)
            .map(|k| WindowRecord {
                k,
                count: 0,
                sum_u: 0.0,
            })
            .collect();
        for e in &events {
            if let Some(u) = e.u {
                let k = window_of(e.time, delta, n);
                windows[k].count += 1;
                windows[k].sum_u += u;
            }
        }
        Self {
            delta,
            horizon,
            events,
            windows,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }
    pub fn windows(&self) -> &[WindowRecord] {
        &self.windows
    }

    pub fn accepted(&self) -> usize {
        self.events.iter().filter(|e| e.accepted).count()
    }

    /// Write `time,particle,accepted,u` rows; `u` is empty for rejections.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "time,particle,accepted,u")?;
        for e in &self.events {
            match e.u {
                Some(u) => writeln!(out, "{},{},1,{}", e.time, e.particle, u)?,
                None => writeln!(out, "{},{},0,", e.time, e.particle)?,
            }
        }
        Ok(())
    }
}

/// Index of the window `(k delta, (k+1) delta]` containing `t`.
pub fn window_of(t: f64, delta: f64, windows: usize) -> usize {
    ((t / delta).ceil() as usize).saturating_sub(1).min(windows - 1)
}

/// Where a bundle's randomness came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub master_seed: u64,
    pub replicate: u64,
    pub config_hash: String,
}

/// Positions of all particles at the observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBundle {
    pub times: Vec<f64>,
    /// `positions[t][i]`: particle `i` at `times[t]`.
    pub positions: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl TrajectoryBundle {
    /// Write `t,i,x` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,i,x")?;
        for (t, row) in self.times.iter().zip(&self.positions) {
            for (i, x) in row.iter().enumerate() {
                writeln!(out, "{t},{i},{x}")?;
            }
        }
        Ok(())
    }

    /// Positions at the last observation time.
    pub fn terminal(&self) -> &[f64] {
        self.positions.last().map_or(&[], Vec::as_slice)
    }
}

/// Settings of a finite-system run.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSystemConfig {
    pub n: usize,
    pub horizon: f64,
    pub delta: f64,
    pub flow_step: f64,
    pub obs_times: Vec<f64>,
}

pub(crate) fn check_obs_times(obs: &[f64], horizon: f64) -> Result<()> {
    if obs.windows(2).any(|w| w[1] < w[0]) || obs.iter().any(|t| !(*t >= 0.0 && *t <= horizon)) {
        return Err(Error::ConfigError(format!(
            "observation times must be sorted within [0, {horizon}]"
        )));
    }
    Ok(())
}

/// Simulate the finite system with the shared noise `noise` and collateral
/// sizes from `collateral_rng`.
pub fn simulate_finite(
    model: &ModelSpec,
    law: &CollateralLaw,
    cfg: &FiniteSystemConfig,
    noise: &SharedNoise,
    collateral_rng: &mut Stream,
) -> Result<(TrajectoryBundle, JumpLedger)> {
    let n = cfg.n;
    let alpha = law.alpha();
    if n < 2 || noise.len() != n {
        return Err(Error::ConfigError(format!(
            "need N >= 2 particles with matching noise, got N = {n}, noise for {}",
            noise.len()
        )));
    }
    if !(cfg.flow_step > 0.0 && cfg.horizon > 0.0 && cfg.delta > 0.0) {
        return Err(Error::ConfigError(
            "flow step, window and horizon must be positive".into(),
        ));
    }
    let window = cfg.horizon / window_count(cfg.horizon, cfg.delta) as f64;
    if 2.0 * window * model.f_hi() >= 1.0 {
        return Err(Error::ConfigError(format!(
            "window {window} and rate bound {} violate 2 delta f_hi < 1",
            model.f_hi()
        )));
    }
    check_obs_times(&cfg.obs_times, cfg.horizon)?;
    model.validate(alpha)?;

    let f_hi = model.f_hi();
    let scale = (n as f64).powf(-1.0 / alpha);
    let kicks = alpha < 1.0 && model.has_kick();
    let mut pop = Population::new(&noise.initials);
    let mut now = 0.0;
    let mut events = Vec::with_capacity(noise.proposals.len());
    let mut obs = cfg.obs_times.iter().copied().peekable();
    let mut positions = Vec::with_capacity(cfg.obs_times.len());

    for p in noise.proposals.iter().filter(|p| p.time <= cfg.horizon) {
        while let Some(t) = obs.next_if(|t| *t < p.time) {
            pop.flow(model, t - now, cfg.flow_step, 0.0, MeasureInput::Own);
            now = t;
            positions.push(pop.positions());
        }
        pop.flow(model, p.time - now, cfg.flow_step, 0.0, MeasureInput::Own);
        now = p.time;
        let x = pop.get(p.particle);
        let accepted = p.v * f_hi <= model.rate(x);
        let mut event = LedgerEvent {
            time: p.time,
            particle: p.particle,
            accepted,
            u: None,
            main_jump: false,
        };
        if accepted {
            let u = law.try_sample(collateral_rng)?;
            if kicks {
                pop.bump(p.particle, model.kick(x, 0.0));
                event.main_jump = true;
            }
            pop.shift_all(u * scale);
            pop.bump(p.particle, -u * scale);
            event.u = Some(u);
        }
        events.push(event);
    }
    for t in obs {
        pop.flow(model, t - now, cfg.flow_step, 0.0, MeasureInput::Own);
        now = t;
        positions.push(pop.positions());
    }

    let bundle = TrajectoryBundle {
        times: cfg.obs_times.clone(),
        positions,
        provenance: Provenance::default(),
    };
    Ok((bundle, JumpLedger::from_events(cfg.delta, cfg.horizon, events)))
}

/// `A_t = N^{-1/alpha} * sum of u over accepted events up to t`.
pub fn interaction_term(ledger: &JumpLedger, alpha: f64, n: usize, t: f64) -> f64 {
    let sum: f64 = ledger.events().iter().filter(|e| e.time <= t).filter_map(|e| e.u).sum();
    sum * (n as f64).powf(-1.0 / alpha)
}
