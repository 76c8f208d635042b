use chainmove::merkle::{build_root, prove, verify_proof};
use chainmove_bench::leaves;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn merkle(c: &mut Criterion) {
    let mut g = c.benchmark_group("merkle");
    for n in [16usize, 256, 4096] {
        let data = leaves(n);
        g.bench_with_input(BenchmarkId::new("build_root", n), &data, |b, d| b.iter(|| build_root(black_box(d))));
        g.bench_with_input(BenchmarkId::new("prove", n), &data, |b, d| b.iter(|| prove(d, black_box(n / 2)).unwrap()));
        let root = build_root(&data);
        let proof = prove(&data, n / 2).unwrap();
        g.bench_with_input(BenchmarkId::new("verify", n), &data, |b, d| {
            b.iter(|| verify_proof(black_box(&root), &d[n / 2], &proof))
        });
    }
    g.finish();
}

criterion_group!(benches, merkle);
criterion_main!(benches);
