//! The experiments behind the command-line tool, plus two library-level
//! studies of the limit equation.

use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::coupling::{coupled_error_experiment, normalized_window_variable, CouplingConfig, CouplingReport};
use crate::distributions::{CollateralLaw, StableSpec};
use crate::error::{Error, Result};
use crate::harness::config::{SelfSimOptions, ValidatedConfig};
use crate::limit_system::{picard_solve, simulate_limit, LimitConfig, PicardOutcome};
use crate::metrics::{
    bin_of, chi_square_independence, ks_p_value, ks_two_sample, loglog_slope, quantile_cuts, wdq_upper, wp_empirical,
    ChiSquareTest, EmpiricalSample, SlopeFit,
};
use crate::models::ModelSpec;
use crate::rng::{stream, Role};
use crate::stable_process::sample_driving_path;

/// Windows simulated per random stream in the self-similarity experiment.
const SELFSIM_CHUNK: usize = 1000;
/// Draws per random stream when building reference samples.
const REFERENCE_CHUNK: usize = 10_000;

/// Outcome of the random-sum self-similarity check.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimReport {
    pub alpha: f64,
    pub windows: usize,
    pub poisson_mean: f64,
    /// Poisson count of every window.
    pub counts: Vec<u64>,
    /// `W_k` of every window with a positive count.
    pub w: Vec<f64>,
    /// Two-sample KS statistic of `W` against fresh stable draws.
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Independence of count and `W` on a quantile grid.
    pub independence: ChiSquareTest,
}

/// Sample `windows` Poisson counts `P_k`, sum `P_k` collateral draws in each
/// and normalize by `P_k^{1/alpha}`; compare the result with the stable
/// limit and test its independence from `P_k`.
pub fn selfsim_experiment(law: &CollateralLaw, opts: SelfSimOptions, seed: u64) -> Result<SelfSimReport> {
    let spec = law.stable_limit();
    let poisson = Poisson::new(opts.poisson_mean)
        .map_err(|e| Error::ConfigError(format!("poisson mean {}: {e}", opts.poisson_mean)))?;
    let chunks = opts.windows.div_ceil(SELFSIM_CHUNK);
    let parts: Vec<Vec<(u64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, Role::Sample, 0, c as u64);
            let len = SELFSIM_CHUNK.min(opts.windows - c * SELFSIM_CHUNK);
            (0..len)
                .map(|k| {
                    let count = poisson.sample(&mut rng) as u64;
                    let sum: f64 = (0..count).map(|_| law.sample(&mut rng)).sum();
                    let w = if count > 0 {
                        normalized_window_variable(k, count, sum, &spec, &mut rng).w
                    } else {
                        f64::NAN
                    };
                    (count, w)
                })
                .collect()
        })
        .collect();
    let pairs: Vec<(u64, f64)> = parts.into_iter().flatten().collect();
    let nonempty: Vec<(u64, f64)> = pairs.iter().copied().filter(|(c, _)| *c > 0).collect();
    let w: Vec<f64> = nonempty.iter().map(|p| p.1).collect();

    let reference = reference_sample(&spec, w.len(), seed)?;
    let sample = EmpiricalSample::new(w.clone())?;
    let ks_statistic = ks_two_sample(&sample, &reference);
    let n = w.len() as f64;
    // equal sample sizes: effective size n m / (n + m) = n / 2
    let ks_p = ks_p_value(ks_statistic, n / 2.0);

    let counts_f: Vec<f64> = nonempty.iter().map(|p| p.0 as f64).collect();
    let count_cuts = quantile_cuts(&counts_f, opts.grid);
    let w_cuts = quantile_cuts(&w, opts.grid);
    let mut table = vec![vec![0.0; opts.grid]; opts.grid];
    for (c, wk) in counts_f.iter().zip(&w) {
        table[bin_of(&count_cuts, *c)][bin_of(&w_cuts, *wk)] += 1.0;
    }
    // Ties in the discrete counts can leave a row empty; drop it.
    table.retain(|row| row.iter().sum::<f64>() > 0.0);
    let independence = chi_square_independence(&table)?;

    Ok(SelfSimReport {
        alpha: law.alpha(),
        windows: opts.windows,
        poisson_mean: opts.poisson_mean,
        counts: pairs.iter().map(|p| p.0).collect(),
        w,
        ks_statistic,
        ks_p_value: ks_p,
        independence,
    })
}

/// `size` independent draws from `spec`, generated in parallel from
/// reference streams.
pub fn reference_sample(spec: &StableSpec, size: usize, seed: u64) -> Result<EmpiricalSample> {
    let chunks = size.div_ceil(REFERENCE_CHUNK);
    let draws: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream(seed, Role::Reference, 0, c as u64);
            let len = REFERENCE_CHUNK.min(size - c * REFERENCE_CHUNK);
            (0..len).map(move |_| spec.sample(&mut rng)).collect::<Vec<f64>>()
        })
        .collect();
    EmpiricalSample::new(draws)
}

/// Distance between a normalized-sum sample and the stable reference: `W_1`
/// above index one and the `d_q` transport bound below.
pub fn law_distance(alpha: f64, alpha_minus: f64, xs: &EmpiricalSample, ys: &EmpiricalSample) -> Result<f64> {
    if alpha > 1.0 {
        wp_empirical(xs, ys, 1.0)
    } else {
        wdq_upper(xs, ys, alpha_minus)
    }
}

/// Name of the metric used by [`law_distance`].
pub fn metric_name(alpha: f64) -> &'static str {
    if alpha > 1.0 {
        "w1"
    } else {
        "wdq"
    }
}

/// One row of the CLT-rate experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltPoint {
    pub n: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub alpha: f64,
    pub replications: usize,
    pub points: Vec<CltPoint>,
    /// Log-log fit of distance against `n`; needs three or more sizes.
    pub fit: Option<SlopeFit>,
    /// Dominant exponent of the distance in `n`.
    pub predicted_slope: f64,
}

/// Dominant exponent of the distance between `n^{-1/alpha} S_n` and its
/// stable limit for a law with second-order index `gamma`.
pub fn predicted_clt_slope(alpha: f64, gamma: f64) -> f64 {
    let cap = if alpha > 1.0 { 2.0 - alpha } else { 1.0 - alpha };
    -gamma.min(cap) / alpha
}

/// Distance between `replications` normalized sums `n^{-1/alpha} S_n` and a
/// stable reference sample, for every `n` in `ns`.
pub fn clt_rate_experiment(
    law: &CollateralLaw,
    ns: &[usize],
    replications: usize,
    reference_size: usize,
    alpha_minus: f64,
    seed: u64,
) -> Result<CltReport> {
    let alpha = law.alpha();
    let reference = reference_sample(&law.stable_limit(), reference_size, seed)?;
    let mut points = Vec::with_capacity(ns.len());
    for &n in ns {
        let scale = (n as f64).powf(-1.0 / alpha);
        let sums: Vec<f64> = (0..replications)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(seed, Role::Sample, n as u64, r as u64);
                let mut sum = 0.0;
                for _ in 0..n {
                    sum += law.try_sample(&mut rng)?;
                }
                Ok(scale * sum)
            })
            .collect::<Result<_>>()?;
        let sample = EmpiricalSample::new(sums)?;
        points.push(CltPoint {
            n,
            distance: law_distance(alpha, alpha_minus, &sample, &reference)?,
        });
    }
    let fit = loglog_slope(&points.iter().map(|p| (p.n as f64, p.distance)).collect::<Vec<_>>()).ok();
    Ok(CltReport {
        alpha,
        replications,
        points,
        fit,
        predicted_slope: predicted_clt_slope(alpha, law.gamma().unwrap_or(f64::INFINITY)),
    })
}

/// Run the coupled experiment for every particle count of a validated
/// sweep configuration.
pub fn coupling_sweep(cfg: &ValidatedConfig) -> Result<Vec<CouplingReport>> {
    let model = cfg
        .model
        .ok_or_else(|| Error::ConfigError("coupling sweep needs a model".into()))?;
    cfg.points
        .iter()
        .map(|p| {
            coupled_error_experiment(&CouplingConfig {
                model,
                law: cfg.law,
                n: p.n,
                delta: p.delta,
                horizon: cfg.raw.horizon,
                k_level: cfg.k_level,
                flow_step: p.flow_step,
                replications: cfg.raw.replications,
                master_seed: cfg.raw.master_seed,
                alpha_minus: cfg.raw.alpha_minus,
            })
        })
        .collect()
}

/// Censored mean error at the horizon against `N`.
pub fn coupling_slope(reports: &[CouplingReport]) -> Result<SlopeFit> {
    let points: Vec<(f64, f64)> = reports
        .iter()
        .map(|r| (r.n as f64, r.rows.last().map_or(f64::NAN, |row| row.err_censored_mean)))
        .collect();
    loglog_slope(&points)
}

/// Distance between the terminal laws of a finite-system particle and a
/// limit particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosPoint {
    pub n: usize,
    pub delta: f64,
    pub distance: f64,
    pub samples: usize,
}

/// Terminal-law distance of one coupled report. Particles are exchangeable,
/// so the terminal positions of all particles, pooled over replications,
/// sample the law of one tagged particle on each side.
pub fn chaos_point(report: &CouplingReport, alpha_minus: f64) -> Result<ChaosPoint> {
    let xs = EmpiricalSample::new(report.terminal_finite.clone())?;
    let ys = EmpiricalSample::new(report.terminal_limit.clone())?;
    Ok(ChaosPoint {
        n: report.n,
        delta: report.delta,
        distance: law_distance(report.alpha, alpha_minus, &xs, &ys)?,
        samples: xs.len(),
    })
}

/// Picard iteration on an independently sampled truncated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardStudy {
    pub model: ModelSpec,
    pub law: CollateralLaw,
    pub horizon: f64,
    /// Grid step of the sampled path.
    pub step: f64,
    pub k_level: f64,
    /// Small-jump cutoff of the path sampler.
    pub eps: f64,
    pub particles: usize,
    pub iterations: usize,
    pub flow_step: f64,
    pub seed: u64,
}

pub fn picard_study(study: &PicardStudy) -> Result<PicardOutcome> {
    let spec = study.law.stable_limit();
    let path = sample_driving_path(
        &spec,
        study.horizon,
        study.step,
        study.k_level,
        study.eps,
        &mut stream(study.seed, Role::Driver, 0, 0),
    )?;
    let mut init_rng = stream(study.seed, Role::Initial, 0, 0);
    let initials: Vec<f64> = (0..study.particles)
        .map(|_| study.model.initial.sample(&mut init_rng))
        .collect();
    let cfg = LimitConfig {
        m: study.particles,
        flow_step: study.flow_step,
        picard_iters: study.iterations,
        truncated: true,
    };
    picard_solve(&study.model, &cfg, &path, &initials)
}

/// How well `M` limit particles represent the conditional law given the
/// driving path: `M` particles against `4M` particles on the same path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLawStudy {
    pub model: ModelSpec,
    pub law: CollateralLaw,
    pub horizon: f64,
    pub step: f64,
    pub eps: f64,
    pub ms: Vec<usize>,
    pub replications: usize,
    pub flow_step: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalLawPoint {
    pub m: usize,
    /// Mean over driving paths of the terminal `W_1` between the two
    /// populations.
    pub distance: f64,
    pub stderr: f64,
}

/// For every `M`, simulate populations of `M` and `4M` particles (the first
/// sharing its initial positions with the second) on common driving paths
/// and average the terminal `W_1` distance between them.
pub fn conditional_law_study(study: &ConditionalLawStudy) -> Result<Vec<ConditionalLawPoint>> {
    let alpha = study.law.alpha();
    if alpha < 1.0 {
        return Err(Error::RegimeError(format!(
            "conditional-law study runs without main jumps and needs alpha > 1, got {alpha}"
        )));
    }
    let spec = study.law.stable_limit();
    let mut out = Vec::with_capacity(study.ms.len());
    for &m in &study.ms {
        let distances: Vec<f64> = (0..study.replications)
            .into_par_iter()
            .map(|r| {
                let r = r as u64;
                let path = sample_driving_path(
                    &spec,
                    study.horizon,
                    study.step,
                    f64::INFINITY,
                    study.eps,
                    &mut stream(study.seed, Role::Driver, r, 0),
                )?;
                let mut rng = stream(study.seed, Role::Initial, r, m as u64);
                let big: Vec<f64> = (0..4 * m).map(|_| study.model.initial.sample(&mut rng)).collect();
                let terminal = |initials: &[f64]| -> Result<EmpiricalSample> {
                    let cfg = LimitConfig {
                        m: initials.len(),
                        flow_step: study.flow_step,
                        picard_iters: 0,
                        truncated: false,
                    };
                    let bundle = simulate_limit(&study.model, &cfg, &path, initials, &[], &[study.horizon])?;
                    EmpiricalSample::new(bundle.terminal().to_vec())
                };
                wp_empirical(&terminal(&big[..m])?, &terminal(&big)?, 1.0)
            })
            .collect::<Result<_>>()?;
        let (distance, stderr) = crate::metrics::mean_and_se(&distances);
        out.push(ConditionalLawPoint { m, distance, stderr });
    }
    Ok(out)
}
