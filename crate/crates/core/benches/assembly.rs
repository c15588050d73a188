//! Dense assembly and factorization of the augmented pair system, sequential
//! against data-parallel.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gapbie::experiments::SweepConfig;
use gapbie::solver::PairSystem;
use gapbie::{Execution, HarmonicBackground};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("pair_system");
    group.sample_size(10);
    let cfg = SweepConfig::unit_disks(HarmonicBackground::x());
    for nodes in [256usize, 512] {
        let mut cfg = cfg.clone();
        cfg.discretization.nodes = nodes;
        let pair = cfg.pair(0.01).expect("valid pair");
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, nodes), &exec, |b, &exec| {
                b.iter(|| PairSystem::new(&pair, exec).expect("assembly"))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, assembly);
criterion_main!(benches);
