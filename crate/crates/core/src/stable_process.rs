//! Paths of the driving stable process.
//!
//! A path is stored as per-cell increments on a regular grid plus an explicit
//! list of jumps larger than a truncation level `K`. Sampled paths use the
//! Asmussen–Rosiński scheme for the small jumps; coupled paths are built from
//! window variables produced by the coupling module and only live on the grid.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

use crate::distributions::StableSpec;
use crate::error::{Error, Result};

/// Rate of jumps with `|z| > K`: `(a_+ + a_-) K^-alpha / alpha`.
pub fn big_jump_rate(spec: &StableSpec, k: f64) -> f64 {
    if k.is_infinite() {
        return 0.0;
    }
    spec.total_intensity() * k.powf(-spec.alpha()) / spec.alpha()
}

/// Mean of the jumps beyond `K` per unit time, `(a_+ - a_-) K^{1-alpha}/(alpha-1)`.
pub fn compensator_mk(spec: &StableSpec, k: f64) -> Result<f64> {
    let alpha = spec.alpha();
    if alpha < 1.0 {
        return Err(Error::MomentUndefined(format!(
            "jumps beyond K have no mean when alpha = {alpha} < 1"
        )));
    }
    if k.is_infinite() {
        return Ok(0.0);
    }
    Ok((spec.a_plus() - spec.a_minus()) * k.powf(1.0 - alpha) / (alpha - 1.0))
}

/// The level `K` for which a path on `[0, T]` has a jump beyond `K` with
/// probability `prob`.
pub fn level_for_censoring_probability(spec: &StableSpec, horizon: f64, prob: f64) -> f64 {
    let rate = -(1.0 - prob).ln() / horizon;
    (spec.total_intensity() / (spec.alpha() * rate)).powf(1.0 / spec.alpha())
}

/// Number of grid cells covering `[0, horizon]` with cells no longer than
/// `step`; the effective step is `horizon / cells`.
pub fn grid_cells(horizon: f64, step: f64) -> usize {
    ((horizon / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Number of coupling windows on `[0, horizon]`: the integer nearest to
/// `horizon / delta`, at least one, so the effective window length
/// `horizon / count` is as close to `delta` as a uniform grid allows.
pub fn window_count(horizon: f64, delta: f64) -> usize {
    (horizon / delta).round().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMode {
    /// Sampled from the Lévy–Itô decomposition.
    Sampled,
    /// Assembled from coupled window variables.
    CoupledFromLedger,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigJump {
    pub time: f64,
    pub size: f64,
}

/// A stable path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingPath {
    spec: StableSpec,
    horizon: f64,
    grid_step: f64,
    increments: Vec<f64>,
    big_jumps: Vec<BigJump>,
    censored: Vec<bool>,
    k: f64,
    t_k: f64,
    mode: PathMode,
    approximated_small_mass: f64,
}

impl DrivingPath {
    pub fn spec(&self) -> &StableSpec {
        &self.spec
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }
    pub fn cells(&self) -> usize {
        self.increments.len()
    }
    /// Per-cell increments, big jumps excluded.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }
    pub fn big_jumps(&self) -> &[BigJump] {
        &self.big_jumps
    }
    /// Whether each cell was flagged as containing a jump beyond `K`. Only
    /// coupled paths flag cells; sampled paths record the jumps instead.
    pub fn censored(&self) -> &[bool] {
        &self.censored
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    /// First time a jump beyond `K` occurs, `+inf` if none.
    pub fn t_k(&self) -> f64 {
        self.t_k
    }
    pub fn mode(&self) -> PathMode {
        self.mode
    }
    /// Expected absolute mass of the jumps below the cutoff that a sampled
    /// path replaces by their mean and a Gaussian (`alpha < 1` only; above one
    /// this mass is infinite and only the compensated part matters).
    pub fn approximated_small_mass(&self) -> f64 {
        self.approximated_small_mass
    }

    /// Grid time at the end of cell `k`.
    pub fn cell_end(&self, k: usize) -> f64 {
        if k + 1 == self.cells() {
            self.horizon
        } else {
            (k + 1) as f64 * self.grid_step
        }
    }

    /// Path value at `t`: increments of cells ending by `t` plus big jumps up
    /// to `t`. Exact at grid times.
    pub fn value_at(&self, t: f64) -> f64 {
        let tol = 1e-9 * self.grid_step;
        let cells = (0..self.cells()).take_while(|&k| self.cell_end(k) <= t + tol).count();
        let small: f64 = self.increments[..cells].iter().sum();
        let big: f64 = self.big_jumps.iter().filter(|j| j.time <= t).map(|j| j.size).sum();
        small + big
    }

    /// Increments of the part of the path with jumps of size at most `K`,
    /// compensated when `alpha > 1`. Flagged cells are zeroed.
    pub fn truncated_increments(&self) -> Result<Vec<f64>> {
        let drift = if self.spec.alpha() > 1.0 {
            compensator_mk(&self.spec, self.k)? * self.grid_step
        } else {
            0.0
        };
        Ok(self
            .increments
            .iter()
            .zip(&self.censored)
            .map(|(inc, &c)| if c { 0.0 } else { inc + drift })
            .collect())
    }

    /// Write `t,value,is_big_jump` rows: one per grid time and one after
    /// each big jump.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,value,is_big_jump")?;
        let mut value = 0.0;
        let mut jumps = self.big_jumps.iter().peekable();
        writeln!(out, "0,0,0")?;
        for k in 0..self.cells() {
            let end = self.cell_end(k);
            while let Some(j) = jumps.next_if(|j| j.time <= end) {
                value += j.size;
                writeln!(out, "{},{},1", j.time, value)?;
            }
            value += self.increments[k];
            writeln!(out, "{},{},{}", end, value, u8::from(self.censored[k]))?;
        }
        Ok(())
    }
}

/// Sample a path of the strictly stable process with law `spec` at time 1.
///
/// Jumps beyond `K` are explicit. Jumps in `(eps, K]` are simulated per
/// cell, and jumps below `eps` are replaced by their mean plus a Gaussian of
/// matching variance. For `alpha > 1` the cell increments are compensated
/// and the mean `M_K` of the big jumps is subtracted, so the total is the
/// compensated process.
pub fn sample_driving_path<R: Rng + ?Sized>(
    spec: &StableSpec,
    horizon: f64,
    step: f64,
    k: f64,
    eps: f64,
    rng: &mut R,
) -> Result<DrivingPath> {
    if !(horizon > 0.0 && step > 0.0 && step <= horizon) {
        return Err(Error::ConfigError(format!(
            "need 0 < step <= horizon, got step = {step}, horizon = {horizon}"
        )));
    }
    if !(eps > 0.0 && eps < k) {
        return Err(Error::ConfigError(format!(
            "small-jump cutoff eps = {eps} must lie in (0, K = {k})"
        )));
    }
    let alpha = spec.alpha();
    let total = spec.total_intensity();
    let p_plus = spec.a_plus() / total;
    let cells = grid_cells(horizon, step);
    let h = horizon / cells as f64;

    let mut big_jumps = Vec::new();
    let rate_k = big_jump_rate(spec, k);
    if rate_k > 0.0 {
        let gap = Exp::new(rate_k).expect("positive rate");
        let mut t = gap.sample(rng);
        while t <= horizon {
            let u: f64 = rng.random();
            let size = k * (1.0 - u).powf(-1.0 / alpha);
            let sign = if rng.random::<f64>() < p_plus { 1.0 } else { -1.0 };
            big_jumps.push(BigJump {
                time: t,
                size: sign * size,
            });
            t += gap.sample(rng);
        }
    }
    let t_k = big_jumps.first().map_or(f64::INFINITY, |j| j.time);

    // Compound Poisson part on eps < |z| <= K.
    let e_lo = eps.powf(-alpha);
    let e_hi = if k.is_infinite() { 0.0 } else { k.powf(-alpha) };
    let mid_rate = total * (e_lo - e_hi) / alpha;
    let counts = Poisson::new(mid_rate * h).ok();
    // Jumps below eps are replaced by their mean and a Gaussian of matching
    // variance. Above one the small jumps are compensated, so only the mean
    // of the jumps in (eps, K] and beyond K is removed.
    let var = total * eps.powf(2.0 - alpha) / (2.0 - alpha);
    let gauss = Normal::new(0.0, (var * h).sqrt()).expect("finite variance");
    let skew = spec.a_plus() - spec.a_minus();
    let drift = if alpha > 1.0 {
        let k_term = if k.is_infinite() { 0.0 } else { k.powf(1.0 - alpha) };
        let mid_mean = skew * (eps.powf(1.0 - alpha) - k_term) / (alpha - 1.0);
        -(mid_mean + compensator_mk(spec, k)?) * h
    } else {
        skew * eps.powf(1.0 - alpha) / (1.0 - alpha) * h
    };
    let approximated = if alpha < 1.0 {
        horizon * total * eps.powf(1.0 - alpha) / (1.0 - alpha)
    } else {
        0.0
    };

    let mut increments = Vec::with_capacity(cells);
    for _ in 0..cells {
        let mut inc = drift + gauss.sample(rng);
        if let Some(c) = &counts {
            let n = c.sample(rng) as u64;
            for _ in 0..n {
                let u: f64 = rng.random();
                let size = (e_lo - u * (e_lo - e_hi)).powf(-1.0 / alpha);
                inc += if rng.random::<f64>() < p_plus { size } else { -size };
            }
        }
        increments.push(inc);
    }

    Ok(DrivingPath {
        spec: *spec,
        horizon,
        grid_step: h,
        censored: vec![false; cells],
        increments,
        big_jumps,
        k,
        t_k,
        mode: PathMode::Sampled,
        approximated_small_mass: approximated,
    })
}

/// Assemble a grid-only path from window variables: the increment over
/// window `k` is `delta^{1/alpha} W_k`. A window increment cannot be split
/// into jumps, so a window with `|W_k| > K`, that is an increment above
/// `K delta^{1/alpha}`, is flagged as containing a big jump, and `t_K` is the
/// end of the first flagged window.
pub fn path_from_window_sums(window_vars: &[f64], delta: f64, spec: &StableSpec, k: f64) -> DrivingPath {
    let scale = delta.powf(1.0 / spec.alpha());
    let increments: Vec<f64> = window_vars.iter().map(|w| scale * w).collect();
    let censored: Vec<bool> = window_vars.iter().map(|w| w.abs() > k).collect();
    let t_k = censored
        .iter()
        .position(|&c| c)
        .map_or(f64::INFINITY, |i| (i + 1) as f64 * delta);
    DrivingPath {
        spec: *spec,
        horizon: delta * window_vars.len() as f64,
        grid_step: delta,
        increments,
        big_jumps: Vec::new(),
        censored,
        k,
        t_k,
        mode: PathMode::CoupledFromLedger,
        approximated_small_mass: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ks_one_sample, ks_p_value, ks_two_sample, EmpiricalSample};
    use crate::rng::{stream, Role};
    use approx::assert_abs_diff_eq;

    fn sym(alpha: f64, a: f64) -> StableSpec {
        StableSpec::new(alpha, a, a).unwrap()
    }

    /// Midpoint-rule quadrature of `z nu(dz)` over `|z| > K` after the
    /// substitution `z = K / s^{1/(alpha-1)}`, which maps the tail to (0, 1].
    fn quadrature_mk(spec: &StableSpec, k: f64) -> f64 {
        let a = spec.alpha();
        let n = 200_000;
        // int_K^inf z^{-alpha} dz = int_0^1 K^{1-alpha}/(alpha-1) ds
        let per_side: f64 = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) / n as f64;
                let z = k * s.powf(-1.0 / (a - 1.0));
                z.powf(-a) * z / s / (a - 1.0) / n as f64
            })
            .sum();
        (spec.a_plus() - spec.a_minus()) * per_side
    }

    #[test]
    fn big_jump_rate_examples() {
        assert_abs_diff_eq!(big_jump_rate(&sym(1.5, 0.3), 10.0), 0.0126491, epsilon = 1e-7);
        assert_abs_diff_eq!(big_jump_rate(&sym(0.5, 1.0), 1.0), 4.0, epsilon = 1e-12);
        assert_eq!(big_jump_rate(&sym(1.5, 0.3), f64::INFINITY), 0.0);
    }

    #[test]
    fn compensator_examples() {
        assert_eq!(compensator_mk(&sym(1.5, 0.3), 2.0).unwrap(), 0.0);
        let s = StableSpec::new(1.5, 0.3, 0.1).unwrap();
        assert_abs_diff_eq!(compensator_mk(&s, 2.0).unwrap(), 0.282843, epsilon = 1e-6);
        assert_abs_diff_eq!(compensator_mk(&s, 2.0).unwrap(), quadrature_mk(&s, 2.0), epsilon = 1e-6);
        assert!(matches!(
            compensator_mk(&sym(0.5, 1.0), 1.0),
            Err(Error::MomentUndefined(_))
        ));
    }

    #[test]
    fn level_inverts_rate() {
        let s = sym(0.8, 0.2);
        let k = level_for_censoring_probability(&s, 2.0, 0.01);
        assert_abs_diff_eq!(1.0 - (-big_jump_rate(&s, k) * 2.0).exp(), 0.01, epsilon = 1e-12);
    }

    #[test]
    fn infinite_level_has_no_big_jumps() {
        let s = sym(1.5, 0.3);
        let mut rng = stream(1, Role::Driver, 0, 0);
        let p = sample_driving_path(&s, 1.0, 0.1, f64::INFINITY, 0.01, &mut rng).unwrap();
        assert!(p.big_jumps().is_empty());
        assert_eq!(p.t_k(), f64::INFINITY);
        assert_eq!(p.cells(), 10);
    }

    #[test]
    fn rejects_bad_cutoff() {
        let mut rng = stream(1, Role::Driver, 0, 0);
        let r = sample_driving_path(&sym(1.5, 0.3), 1.0, 0.1, 1.0, 1.0, &mut rng);
        assert!(matches!(r, Err(Error::ConfigError(_))));
    }

    #[test]
    fn value_is_sum_of_parts() {
        let s = StableSpec::new(1.5, 0.4, 0.1).unwrap();
        let mut rng = stream(2, Role::Driver, 0, 0);
        let p = sample_driving_path(&s, 2.0, 0.25, 1.0, 1e-3, &mut rng).unwrap();
        let total: f64 = p.increments().iter().sum::<f64>() + p.big_jumps().iter().map(|j| j.size).sum::<f64>();
        assert_abs_diff_eq!(p.value_at(2.0), total, epsilon = 1e-12);
        assert!(p.big_jumps().iter().all(|j| j.size.abs() > 1.0));
        if let Some(j) = p.big_jumps().first() {
            assert_eq!(p.t_k(), j.time);
        }
    }

    #[test]
    fn first_big_jump_time_is_exponential() {
        let s = sym(1.5, 0.3);
        let k = 2.0;
        let rate = big_jump_rate(&s, k);
        let times: Vec<f64> = (0..2000)
            .map(|r| {
                let mut rng = stream(3, Role::Driver, r, 0);
                sample_driving_path(&s, 300.0, 300.0, k, 1.9, &mut rng).unwrap().t_k()
            })
            .collect();
        let sample = EmpiricalSample::new(times).unwrap();
        let d = ks_one_sample(&sample, |t| 1.0 - (-rate * t).exp());
        assert!(ks_p_value(d, 2000.0) > 0.001, "KS {d}");
    }

    #[test]
    fn path_total_is_stable() {
        // The value at T must follow T^{1/alpha} times the unit-time law.
        for (alpha, seed) in [(1.5, 4), (0.7, 5)] {
            let s = StableSpec::new(alpha, 0.5, 0.2).unwrap();
            let horizon = 2.0;
            let ends: Vec<f64> = (0..4000)
                .map(|r| {
                    let mut rng = stream(seed, Role::Driver, r, 0);
                    let p = sample_driving_path(&s, horizon, 0.5, 5.0, 5e-3, &mut rng).unwrap();
                    p.value_at(horizon)
                })
                .collect();
            let mut rng = stream(seed, Role::Reference, 0, 0);
            let scale = horizon.powf(1.0 / alpha);
            let reference: Vec<f64> = (0..40_000).map(|_| scale * s.sample(&mut rng)).collect();
            let d = ks_two_sample(
                &EmpiricalSample::new(ends).unwrap(),
                &EmpiricalSample::new(reference).unwrap(),
            );
            let n_eff = 4000.0 * 40_000.0 / 44_000.0;
            assert!(ks_p_value(d, n_eff) > 0.001, "alpha {alpha}: KS {d}");
        }
    }

    #[test]
    fn window_sums_scale_by_delta() {
        let s = sym(0.5, 1.0);
        let p = path_from_window_sums(&[1.0, 0.0, 0.0], 0.25, &s, 1.0);
        assert_abs_diff_eq!(p.increments()[0], 0.0625, epsilon = 1e-15);
        assert_eq!(p.mode(), PathMode::CoupledFromLedger);
        assert_eq!(p.t_k(), f64::INFINITY);
        let flat = path_from_window_sums(&[0.0; 4], 0.25, &s, 1.0);
        assert!((0..=4).all(|i| flat.value_at(i as f64 * 0.25) == 0.0));
    }

    #[test]
    fn window_censoring_marks_first_large_increment() {
        let s = sym(0.5, 1.0);
        // increments 0.0625 * W; the flag compares W itself with K
        let p = path_from_window_sums(&[0.5, 2.0, 40.0], 0.25, &s, 1.0);
        assert_eq!(p.censored(), &[false, true, true]);
        assert_eq!(p.t_k(), 0.5);
        assert_eq!(p.truncated_increments().unwrap(), vec![0.03125, 0.0, 0.0]);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let s = sym(0.5, 1.0);
        let p = path_from_window_sums(&[1.0, 2.0], 0.5, &s, 10.0);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,value,is_big_jump\n0,0,0\n0.5,0.25,0\n1,0.75,0\n");
    }
}
