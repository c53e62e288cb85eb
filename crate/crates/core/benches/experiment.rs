use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use apixplore::bench::{run_experiment_with, BenchConfig, Execution};

fn experiment(c: &mut Criterion) {
    let configs = BenchConfig::all(16, 200);
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &execution, |b, &execution| {
            b.iter(|| run_experiment_with(&configs, 7, execution))
        });
    }
    group.finish();
}

criterion_group!(benches, experiment);
criterion_main!(benches);
