use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use perfolab::combinatorics::{central_size_pmf, sample_set_partition, solve_r};
use perfolab::formulas::{build_base_formula, PredicateKind};
use perfolab::graph::has_independent_triple_in_neighborhood;
use perfolab::logic::{evaluate, Environment, Structure};
use perfolab::sampler::{sample_unipolar, SampleSeed};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn bench_sampler(c: &mut Criterion) {
    c.bench_function("sample_unipolar_n2000", |b| {
        let mut stream = 0u64;
        b.iter(|| {
            stream += 1;
            black_box(sample_unipolar(2000, SampleSeed::new(7, stream)))
        })
    });
}

fn bench_independent_triples(c: &mut Criterion) {
    let pg = sample_unipolar(2000, SampleSeed::new(11, 0));
    c.bench_function("independent_triple_scan_n2000", |b| {
        b.iter(|| {
            let mut hits = 0usize;
            for v in 0..2000 {
                if has_independent_triple_in_neighborhood(pg.graph(), v).unwrap() {
                    hits += 1;
                }
            }
            black_box(hits)
        })
    });
}

fn bench_part_neighborhoods(c: &mut Criterion) {
    let pg = sample_unipolar(10_000, SampleSeed::new(13, 0));
    c.bench_function("part_common_neighborhoods_n10000", |b| {
        b.iter(|| {
            let mut total = 0usize;
            for i in 1..pg.parts().len() {
                total += pg.part_common_neighborhood(i).len();
            }
            black_box(total)
        })
    });
}

fn bench_evaluator(c: &mut Criterion) {
    let pg = sample_unipolar(100, SampleSeed::new(17, 0));
    let s = Structure::graph_only(pg.graph().clone());
    let inc0 = build_base_formula(PredicateKind::InC0, false);
    c.bench_function("evaluate_inc0_all_vertices_n100", |b| {
        b.iter(|| {
            let mut hits = 0usize;
            for v in 0..100 {
                let env = Environment::new().bind("x", v);
                if evaluate(&s, &inc0, &env).unwrap() {
                    hits += 1;
                }
            }
            black_box(hits)
        })
    });
}

fn bench_partition_sampler(c: &mut Criterion) {
    c.bench_function("sample_set_partition_m2000", |b| {
        b.iter_batched(
            || ChaCha8Rng::seed_from_u64(23),
            |mut rng| black_box(sample_set_partition(2000, &mut rng)),
            BatchSize::SmallInput,
        )
    });
}

fn bench_central_law(c: &mut Criterion) {
    c.bench_function("central_size_pmf_n30000", |b| {
        b.iter(|| black_box(central_size_pmf(30_000).unwrap()))
    });
    c.bench_function("solve_r_grid", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            let mut s = 1e-3;
            while s <= 1e9 {
                acc += solve_r(s).unwrap();
                s *= 3.0;
            }
            black_box(acc)
        })
    });
}

criterion_group!(
    benches,
    bench_sampler,
    bench_independent_triples,
    bench_part_neighborhoods,
    bench_evaluator,
    bench_partition_sampler,
    bench_central_law
);
criterion_main!(benches);
