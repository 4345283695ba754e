//! Benchmarks for the paths the simulation loops spend their time in:
//! direction sampling, the two gradient estimators, projection, full engine
//! steps, and the reference equilibrium solve.

use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use dfgp_core::sampling::{sample_directions, sample_sphere};
use dfgp_core::{
    builtin, run, single_point_estimate, solve_equilibrium, two_point_estimate, EstimateOutput,
    EstimatorKind, RecordGrid, RunConfig, StepSchedule,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_sampling(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut buf = vec![0.0; 16];
    c.bench_function("sample_sphere dim=1", |b| {
        b.iter(|| sample_sphere(1, &mut rng, black_box(&mut buf[..1])))
    });
    c.bench_function("sample_sphere dim=16", |b| {
        b.iter(|| sample_sphere(16, &mut rng, black_box(&mut buf)))
    });
    let game = builtin("lq-coupled").unwrap();
    c.bench_function("sample_directions 2 players", |b| {
        b.iter(|| black_box(sample_directions(game.dims(), &mut rng)))
    });
}

fn bench_estimators(c: &mut Criterion) {
    // The quartic game has the most expensive cost evaluations of the
    // builtins, so it bounds per-step estimator cost from above.
    let game = builtin("quartic").unwrap();
    let x = vec![0.3, -0.4];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dirs = sample_directions(game.dims(), &mut rng);
    let mut out = EstimateOutput {
        gradient: Vec::new(),
        played: Vec::new(),
        cost_evals: 0,
    };
    c.bench_function("single_point_estimate quartic", |b| {
        b.iter(|| single_point_estimate(&game, &x, 0.05, black_box(&dirs), &mut out))
    });
    c.bench_function("two_point_estimate quartic", |b| {
        b.iter(|| two_point_estimate(&game, &x, 0.05, black_box(&dirs), &mut out))
    });
}

fn bench_projection(c: &mut Criterion) {
    let game = builtin("lq-coupled").unwrap();
    let set = game.set();
    let z = vec![1.7, -2.3];
    let mut out = vec![0.0; 2];
    c.bench_function("project shrunken box", |b| {
        b.iter(|| set.project(black_box(&z), 0.95, &mut out))
    });
}

fn bench_engine(c: &mut Criterion) {
    let game = builtin("lq-coupled").unwrap();
    let alpha = game.constants().alpha;
    let config = RunConfig {
        delta: 0.1,
        horizon: 1_000,
        schedule: StepSchedule::InverseTime { alpha },
        estimator: EstimatorKind::SinglePoint,
        x0: None,
        seed: 3,
        record: Some(RecordGrid::Every(1_000)),
    };
    c.bench_function("run 1000 steps single-point", |b| {
        b.iter_batched(
            || config.clone(),
            |cfg| run(&game, &cfg, None).unwrap(),
            BatchSize::SmallInput,
        )
    });
    let two = RunConfig {
        estimator: EstimatorKind::TwoPoint,
        ..config.clone()
    };
    c.bench_function("run 1000 steps two-point", |b| {
        b.iter_batched(
            || two.clone(),
            |cfg| run(&game, &cfg, None).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_equilibrium(c: &mut Criterion) {
    let game = builtin("quartic").unwrap();
    c.bench_function("solve_equilibrium quartic 1e-10", |b| {
        b.iter(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            solve_equilibrium(&game, 1.0, 0.0, 1e-10, &mut rng).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_sampling,
    bench_estimators,
    bench_projection,
    bench_engine,
    bench_equilibrium
);
criterion_main!(benches);
