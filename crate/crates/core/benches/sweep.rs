use std::hint::black_box;

use cranjoint::algorithms::AlgorithmOptions;
use cranjoint::experiments::{run_sweep_sequential, Method, SweepParam, SweepSpec};
use cranjoint::scenario::Scenario;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn spec(methods: Vec<Method>, workers: Option<usize>) -> SweepSpec {
    SweepSpec {
        scenario_id: "bench".into(),
        base: Scenario::table1(),
        param: SweepParam::F,
        grid: vec![1000.0, 1500.0],
        methods,
        seeds: (1..=4).collect(),
        workers,
        timing: false,
        options: AlgorithmOptions::default(),
    }
}

fn sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    let cases = [
        ("separate", vec![Method::Separate(0.5)]),
        ("joint", vec![Method::Joint]),
    ];
    for (name, methods) in cases {
        let s = spec(methods.clone(), None);
        group.bench_with_input(BenchmarkId::new("sequential", name), &s, |b, s| {
            b.iter(|| black_box(run_sweep_sequential(s).unwrap()))
        });
        #[cfg(feature = "parallel")]
        {
            let s = spec(methods, None);
            group.bench_with_input(BenchmarkId::new("parallel", name), &s, |b, s| {
                b.iter(|| black_box(cranjoint::experiments::run_sweep_parallel(s).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
