//! Artifact writing: fixed-header CSV files and a run manifest.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! rerun with the same configuration reproduces every file byte for byte.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::coupling::CouplingReport;
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, ExperimentKind, ValidatedConfig};
use crate::harness::experiments::{
    chaos_point, clt_rate_experiment, coupling_slope, coupling_sweep, metric_name, selfsim_experiment, ChaosPoint,
    CltReport, SelfSimReport,
};
use crate::metrics::{loglog_slope, SlopeFit};

pub const SELFSIM_HEADER: &str = "k,count,w";
pub const SELFSIM_SUMMARY_HEADER: &str =
    "alpha,windows,poisson_mean,nonempty,ks_statistic,ks_p_value,chi2_statistic,chi2_dof,chi2_p_value";
pub const CLT_HEADER: &str = "n,replications,metric,distance";
pub const CLT_SUMMARY_HEADER: &str = "fitted_slope,slope_stderr,predicted_slope";
pub const COUPLING_HEADER: &str = "n,delta,t,err_mean,err_se,err_censored_mean,censor_frac";
pub const COUPLING_SUMMARY_HEADER: &str = "points,fitted_slope,slope_stderr,predicted_slope,eta,k_level";
pub const CHAOS_HEADER: &str = "n,delta,metric,distance,samples";
pub const CHAOS_SUMMARY_HEADER: &str = "fitted_slope,slope_stderr";
pub const MANIFEST: &str = "manifest.toml";

/// Provenance written next to the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub crate_version: String,
    pub experiment: String,
    pub master_seed: u64,
    pub replications: usize,
    pub config_hash: String,
    pub k_level: f64,
    pub files: Vec<String>,
    pub config: ExperimentConfig,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn slope_fields(fit: Option<SlopeFit>) -> String {
    format!("{},{}", opt(fit.map(|f| f.slope)), opt(fit.map(|f| f.stderr)))
}

pub fn write_selfsim(report: &SelfSimReport, dir: &Path) -> Result<Vec<String>> {
    let mut out = create(dir, "selfsim.csv")?;
    writeln!(out, "{SELFSIM_HEADER}")?;
    let mut w = report.w.iter();
    for (k, &count) in report.counts.iter().enumerate() {
        let value = if count > 0 {
            w.next().map_or_else(String::new, |v| v.to_string())
        } else {
            String::new()
        };
        writeln!(out, "{k},{count},{value}")?;
    }
    out.flush()?;

    let mut out = create(dir, "selfsim_summary.csv")?;
    writeln!(out, "{SELFSIM_SUMMARY_HEADER}")?;
    let chi = report.independence;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{}",
        report.alpha,
        report.windows,
        report.poisson_mean,
        report.w.len(),
        report.ks_statistic,
        report.ks_p_value,
        chi.statistic,
        chi.dof,
        chi.p_value
    )?;
    out.flush()?;
    Ok(vec!["selfsim.csv".into(), "selfsim_summary.csv".into()])
}

pub fn write_clt(report: &CltReport, dir: &Path) -> Result<Vec<String>> {
    let mut out = create(dir, "clt_rate.csv")?;
    writeln!(out, "{CLT_HEADER}")?;
    for p in &report.points {
        writeln!(
            out,
            "{},{},{},{}",
            p.n,
            report.replications,
            metric_name(report.alpha),
            p.distance
        )?;
    }
    out.flush()?;
    let mut out = create(dir, "clt_rate_summary.csv")?;
    writeln!(out, "{CLT_SUMMARY_HEADER}")?;
    writeln!(out, "{},{}", slope_fields(report.fit), report.predicted_slope)?;
    out.flush()?;
    Ok(vec!["clt_rate.csv".into(), "clt_rate_summary.csv".into()])
}

pub fn write_coupling(reports: &[CouplingReport], cfg: &ValidatedConfig, dir: &Path) -> Result<Vec<String>> {
    let mut out = create(dir, "coupling.csv")?;
    writeln!(out, "{COUPLING_HEADER}")?;
    for r in reports {
        for row in &r.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n, r.delta, row.t, row.err_mean, row.err_se, row.err_censored_mean, row.censor_frac
            )?;
        }
    }
    out.flush()?;
    let mut out = create(dir, "coupling_summary.csv")?;
    writeln!(out, "{COUPLING_SUMMARY_HEADER}")?;
    writeln!(
        out,
        "{},{},{},{},{}",
        reports.len(),
        slope_fields(coupling_slope(reports).ok()),
        opt(cfg.predicted_exponent),
        cfg.points.first().map_or(f64::NAN, |p| p.eta),
        cfg.k_level
    )?;
    out.flush()?;
    Ok(vec!["coupling.csv".into(), "coupling_summary.csv".into()])
}

pub fn write_chaos(points: &[ChaosPoint], alpha: f64, dir: &Path) -> Result<Vec<String>> {
    let mut out = create(dir, "chaos.csv")?;
    writeln!(out, "{CHAOS_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.n,
            p.delta,
            metric_name(alpha),
            p.distance,
            p.samples
        )?;
    }
    out.flush()?;
    let fit = loglog_slope(&points.iter().map(|p| (p.n as f64, p.distance)).collect::<Vec<_>>()).ok();
    let mut out = create(dir, "chaos_summary.csv")?;
    writeln!(out, "{CHAOS_SUMMARY_HEADER}")?;
    writeln!(out, "{}", slope_fields(fit))?;
    out.flush()?;
    Ok(vec!["chaos.csv".into(), "chaos_summary.csv".into()])
}

pub fn write_manifest(cfg: &ValidatedConfig, files: Vec<String>, dir: &Path) -> Result<()> {
    let mut config = cfg.raw.clone();
    config.experiment = Some(cfg.kind);
    let manifest = Manifest {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.kind.name().to_string(),
        master_seed: cfg.raw.master_seed,
        replications: cfg.raw.replications,
        config_hash: config.hash()?,
        k_level: cfg.k_level,
        files,
        config,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join(MANIFEST), text)?;
    Ok(())
}

/// Run a validated experiment and write its CSV files and manifest into
/// `dir`, which is created if needed. Returns the paths written.
pub fn run_experiment(cfg: &ValidatedConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let raw = &cfg.raw;
    let files = match cfg.kind {
        ExperimentKind::Selfsim => {
            let report = selfsim_experiment(&cfg.law, raw.selfsim, raw.master_seed)?;
            log::info!(
                "selfsim: KS {:.5}, independence p {:.4}",
                report.ks_statistic,
                report.independence.p_value
            );
            write_selfsim(&report, dir)?
        }
        ExperimentKind::CltRate => {
            let report = clt_rate_experiment(
                &cfg.law,
                &raw.n_list,
                raw.replications,
                raw.clt.reference_size,
                raw.alpha_minus,
                raw.master_seed,
            )?;
            for p in &report.points {
                log::info!("clt-rate: n = {}, distance {:.5}", p.n, p.distance);
            }
            write_clt(&report, dir)?
        }
        ExperimentKind::CouplingSweep => {
            let reports = coupling_sweep(cfg)?;
            for r in &reports {
                if let Some(last) = r.rows.last() {
                    log::info!("coupling: N = {}, censored error {:.5}", r.n, last.err_censored_mean);
                }
            }
            write_coupling(&reports, cfg, dir)?
        }
        ExperimentKind::ChaosTest => {
            let reports = coupling_sweep(cfg)?;
            let points = reports
                .iter()
                .map(|r| chaos_point(r, raw.alpha_minus))
                .collect::<Result<Vec<_>>>()?;
            for p in &points {
                log::info!("chaos: N = {}, distance {:.5}", p.n, p.distance);
            }
            write_chaos(&points, cfg.alpha(), dir)?
        }
    };
    write_manifest(cfg, files.clone(), dir)?;
    let mut paths: Vec<PathBuf> = files.iter().map(|f| dir.join(f)).collect();
    paths.push(dir.join(MANIFEST));
    Ok(paths)
}
