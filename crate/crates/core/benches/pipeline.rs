//! Sequential against rayon execution for each pipeline stage on a
//! synthetic match.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use track_enrich::broadcast::{degrade, DegradeConfig};
use track_enrich::evaluate::evaluate_half;
use track_enrich::forecast::ModelOrders;
use track_enrich::pipeline::{enrich, train, EnrichConfig};
use track_enrich::synthetic::{synthetic_match, SyntheticConfig};
use track_enrich::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn stages(c: &mut Criterion) {
    let cfg = SyntheticConfig { half_duration: 900.0, ..Default::default() };
    let truth = synthetic_match(&cfg);
    let training = synthetic_match(&SyntheticConfig { seed: cfg.seed + 1, ..cfg });
    let model = train(&training, ModelOrders::default(), 1.0, Execution::Parallel).unwrap();
    let degrade_cfg = DegradeConfig::default();
    let records: Vec<_> = truth.iter().map(|h| degrade(h, &degrade_cfg, Execution::Parallel).unwrap()).collect();
    let enriched = enrich(&records, &model, &EnrichConfig::default(), Execution::Parallel).unwrap();

    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("train", name), &exec, |b, &exec| {
            b.iter(|| train(black_box(&training), ModelOrders::default(), 1.0, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("degrade", name), &exec, |b, &exec| {
            b.iter(|| {
                for h in &truth {
                    black_box(degrade(h, &degrade_cfg, exec).unwrap());
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("enrich", name), &exec, |b, &exec| {
            b.iter(|| enrich(black_box(&records), &model, &EnrichConfig::default(), exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("evaluate", name), &exec, |b, &exec| {
            b.iter(|| {
                for (e, t) in enriched.iter().zip(&truth) {
                    black_box(evaluate_half(e, t, exec).unwrap());
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("frames_every_0.5s", name), &exec, |b, &exec| {
            b.iter(|| black_box(enriched[0].frames_every(0.5, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, stages);
criterion_main!(benches);
