use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pimc_core::ensemble::{model_traces, Engine, RunSpec, Schedule};
use pimc_core::parse;

const MODEL: &str = include_str!("../tests/data/fcr_src.pim");

fn schedules(c: &mut Criterion) {
    let mut model = parse(MODEL).unwrap();
    model.set_default_population(50);
    let mut group = c.benchmark_group("replicates");
    group.sample_size(10);
    for engine in [Engine::Generated, Engine::Direct] {
        for schedule in [Schedule::Sequential, Schedule::Parallel] {
            let spec = RunSpec {
                until: 2.0,
                points: 20,
                replicates: 32,
                seed: 1,
                schedule,
            };
            group.bench_with_input(
                BenchmarkId::new(format!("{engine:?}"), format!("{schedule:?}")),
                &spec,
                |b, spec| b.iter(|| black_box(model_traces(&model, engine, spec, 1 << 16).unwrap())),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, schedules);
criterion_main!(benches);
