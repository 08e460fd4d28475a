use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stablechaos::stable_process::window_count;
use stablechaos::{run_experiment, ExperimentConfig, ExperimentKind, ValidatedConfig};

/// Simulate particle systems with nearly-stable collateral jumps and
/// measure their convergence rates.
#[derive(Debug, Parser)]
#[command(name = "stablechaos", version, about)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, env = "STABLECHAOS_CONFIG")]
    config: Option<PathBuf>,

    /// Override the master seed from the configuration.
    #[arg(long, global = true, env = "STABLECHAOS_SEED")]
    seed: Option<u64>,

    /// Output directory for CSV files and the manifest.
    #[arg(long, global = true, env = "STABLECHAOS_OUT", default_value = "out")]
    out: PathBuf,

    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = "STABLECHAOS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Self-similarity of the driver built from a Poisson number of jumps.
    Selfsim,
    /// Stable-CLT rate of normalized sums against a stable reference.
    CltRate,
    /// Coupling error between the particle system and its limit, swept over N.
    CouplingSweep,
    /// Distance between finite and limit terminal laws, swept over N.
    ChaosTest,
    /// Validate the configuration and print the derived windows.
    Validate {
        /// Experiment to validate against; defaults to the one declared in
        /// the configuration.
        #[arg(long)]
        experiment: Option<String>,
    },
}

/// Failure classes, mapped to distinct exit codes.
enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

fn parse_kind(name: &str) -> Result<ExperimentKind, Failure> {
    match name {
        "selfsim" => Ok(ExperimentKind::Selfsim),
        "clt-rate" => Ok(ExperimentKind::CltRate),
        "coupling-sweep" => Ok(ExperimentKind::CouplingSweep),
        "chaos-test" => Ok(ExperimentKind::ChaosTest),
        other => Err(Failure::Config(format!("unknown experiment `{other}`"))),
    }
}

fn load(path: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let path = path.ok_or_else(|| Failure::Config("no configuration given (use --config)".into()))?;
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn validated(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<ValidatedConfig, Failure> {
    cfg.validate(kind).map_err(|e| Failure::Config(e.to_string()))
}

fn report(v: &ValidatedConfig) {
    println!("experiment: {}", v.kind.name());
    println!("alpha: {}", v.alpha());
    println!("k_level: {}", v.k_level);
    if let Some(p) = v.predicted_exponent {
        println!("predicted_exponent: {p}");
    }
    for p in &v.points {
        // The horizon is split into a whole number of windows.
        let effective = v.raw.horizon / window_count(v.raw.horizon, p.delta) as f64;
        println!(
            "n = {}: delta = {}, effective window = {}, eta = {}, flow_step = {}",
            p.n, p.delta, effective, p.eta, p.flow_step
        );
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let cfg = load(cli.config.as_deref(), cli.seed)?;
    let kind = match &cli.command {
        Command::Selfsim => ExperimentKind::Selfsim,
        Command::CltRate => ExperimentKind::CltRate,
        Command::CouplingSweep => ExperimentKind::CouplingSweep,
        Command::ChaosTest => ExperimentKind::ChaosTest,
        Command::Validate { experiment } => {
            let kind = match (experiment.as_deref(), cfg.experiment) {
                (Some(name), _) => parse_kind(name)?,
                (None, Some(kind)) => kind,
                (None, None) => {
                    return Err(Failure::Config(
                        "configuration declares no experiment (use --experiment)".into(),
                    ))
                }
            };
            report(&validated(&cfg, kind)?);
            return Ok(());
        }
    };
    let v = validated(&cfg, kind)?;
    let written = run_experiment(&v, &cli.out).map_err(|e| Failure::Runtime(e.to_string()))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
