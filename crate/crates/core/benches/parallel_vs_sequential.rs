use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use isolevy::exec::Execution;
use isolevy::monte_carlo::{exit_time_ball, SimScheme};
use isolevy::{make_family, Family};
use std::hint::black_box;

fn exit_time(c: &mut Criterion) {
    let spec = make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
    let mut group = c.benchmark_group("exit_time_ball");
    group.sample_size(10);
    for n in [4_000u64, 16_000] {
        for (name, ex) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let scheme = SimScheme::default().with_execution(ex);
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| exit_time_ball(&spec, &scheme, 1.0, &[0.0; 3], black_box(n), 7).unwrap().mean)
            });
        }
    }
    group.finish();
}

criterion_group!(benches, exit_time);
criterion_main!(benches);
