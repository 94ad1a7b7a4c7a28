use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use locomanip_core::config::ScenarioConfig;
use locomanip_core::exec::{run_sweep, solve_batch, Execution, SweepAxis};
use locomanip_core::qp::{QpProblem, QpSettings};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Strictly convex box-and-inequality QP of MPC-like size.
fn random_qp(rng: &mut impl Rng, n: usize, m: usize) -> QpProblem {
    let l = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let p = &l * l.transpose() + DMatrix::identity(n, n);
    let q = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
    let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let lo = DVector::from_fn(m, |_, _| rng.random_range(-2.0..-0.1));
    let hi = DVector::from_fn(m, |_, _| rng.random_range(0.1..2.0));
    QpProblem { p, q, a, lo, hi }
}

fn qp_batch(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let problems: Vec<QpProblem> = (0..64).map(|_| random_qp(&mut rng, 40, 80)).collect();
    let mut group = c.benchmark_group("qp_batch");
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &exec| b.iter(|| solve_batch(&problems, QpSettings::default(), exec)),
        );
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut base = ScenarioConfig::builtin("push5").unwrap();
    base.duration = 1.0;
    let axes = [SweepAxis::parse("gains.gamma_m=5,10,20,40").unwrap()];
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter_batched(
                || base.clone(),
                |cfg| run_sweep(&cfg, &axes, exec),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, qp_batch, sweep);
criterion_main!(benches);
