use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stablechaos::coupling::{coupled_error_experiment, window_grid, CouplingConfig};
use stablechaos::distributions::CollateralLaw;
use stablechaos::limit_system::{simulate_limit, LimitConfig};
use stablechaos::particle_system::{simulate_finite, FiniteSystemConfig, SharedNoise};
use stablechaos::rng::{stream, Role, StreamFamily};
use stablechaos::stable_process::{level_for_censoring_probability, sample_driving_path};
use stablechaos_bench::{large_index_law, small_index_law, stable_limit, tanh_model};

fn finite_system(c: &mut Criterion) {
    let mut group = c.benchmark_group("finite_system");
    group.sample_size(10);
    let model = tanh_model(true);
    let law = CollateralLaw::Heavy(small_index_law());
    for n in [64usize, 256, 1024] {
        let family = StreamFamily::new(1, 0);
        let noise = SharedNoise::draw(&model, n, 1.0, &family);
        let (delta, obs) = window_grid(1.0, (n as f64).powf(-0.2));
        let cfg = FiniteSystemConfig {
            n,
            horizon: 1.0,
            delta,
            flow_step: 0.01,
            obs_times: obs,
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| simulate_finite(&model, &law, cfg, &noise, &mut family.stream(Role::Collateral, 0)).unwrap())
        });
    }
    group.finish();
}

fn limit_system(c: &mut Criterion) {
    let mut group = c.benchmark_group("limit_system");
    group.sample_size(10);
    let model = tanh_model(false);
    let spec = stable_limit(&large_index_law());
    let path = sample_driving_path(
        &spec,
        1.0,
        0.01,
        f64::INFINITY,
        0.01,
        &mut stream(1, Role::Driver, 0, 0),
    )
    .unwrap();
    for m in [250usize, 1000, 4000] {
        let mut rng = stream(1, Role::Initial, 0, 0);
        let initials: Vec<f64> = (0..m).map(|_| model.initial.sample(&mut rng)).collect();
        let cfg = LimitConfig {
            m,
            flow_step: 0.01,
            picard_iters: 0,
            truncated: false,
        };
        group.bench_with_input(BenchmarkId::from_parameter(m), &initials, |b, initials| {
            b.iter(|| simulate_limit(&model, &cfg, &path, initials, &[], &[1.0]).unwrap())
        });
    }
    group.finish();
}

fn coupled_replication(c: &mut Criterion) {
    let mut group = c.benchmark_group("coupled_replication");
    group.sample_size(10);
    let law = CollateralLaw::Heavy(small_index_law());
    let k_level = level_for_censoring_probability(&law.stable_limit(), 1.0, 0.0099);
    for n in [64usize, 256] {
        let cfg = CouplingConfig {
            model: tanh_model(true),
            law,
            n,
            delta: (n as f64).powf(-0.2),
            horizon: 1.0,
            k_level,
            flow_step: 0.01,
            replications: 1,
            master_seed: 1,
            alpha_minus: 0.3,
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| coupled_error_experiment(cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, finite_system, limit_system, coupled_replication);
criterion_main!(benches);
