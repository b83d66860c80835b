//! Distance-layer benchmarks: the data-parallel Gram matrix against its
//! sequential twin (build with and without the `parallel` feature to see
//! the fallback), and the closed-form solver against the exhaustive
//! oracle.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use maxplus_transport::metric::{cost_matrix, gram, gram_serial};
use maxplus_transport::sampling::{random_euclidean_space, random_measure};

fn gram_parallel_vs_serial(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let space = random_euclidean_space(40, &mut rng);
    let mut group = c.benchmark_group("gram");
    for n in [16usize, 64] {
        let measures: Vec<_> = (0..n)
            .map(|_| random_measure(&space, 6, &mut rng))
            .collect();
        group.bench_with_input(BenchmarkId::new("dispatch", n), &measures, |b, ms| {
            b.iter(|| black_box(gram(ms).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("serial", n), &measures, |b, ms| {
            b.iter(|| black_box(gram_serial(ms).unwrap()))
        });
    }
    group.finish();
}

fn solver_vs_oracle(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let space = random_euclidean_space(5, &mut rng);
    let mut group = c.benchmark_group("bottleneck");
    for support in [3usize, 4] {
        let mu1 = random_measure(&space, support, &mut rng);
        let mu2 = random_measure(&space, support, &mut rng);
        let costs = cost_matrix(&mu1, &mu2).unwrap();
        let (w1, w2) = (mu1.weights(), mu2.weights());
        group.bench_with_input(
            BenchmarkId::new("closed_form", support),
            &costs,
            |b, costs| b.iter(|| black_box(costs.solve_closed_form(&w1, &w2))),
        );
        group.bench_with_input(
            BenchmarkId::new("exhaustive", support),
            &costs,
            |b, costs| b.iter(|| black_box(costs.solve_exhaustive(&w1, &w2, 20).unwrap())),
        );
    }
    group.finish();
}

criterion_group!(benches, gram_parallel_vs_serial, solver_vs_oracle);
criterion_main!(benches);
