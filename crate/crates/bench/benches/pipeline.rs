use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use plcmine::discovery::DiscoveryConfig;
use plcmine::eventlog::{reduce_log, split_traces};
use plcmine::petri::replay_trace;
use plcmine::pipeline::{self, PipelineConfig, Scenario};
use plcmine::{discover_net, run_pipeline};

fn stages(c: &mut Criterion) {
    let cfg = PipelineConfig::new(Scenario::S2);
    let out = run_pipeline(&cfg).expect("pipeline runs");
    let complete = out.log.complete();
    let trained = out.trained.as_ref().expect("counter scenario trains");

    c.bench_function("closed_loop_880s", |b| b.iter(|| pipeline::record(black_box(&cfg)).unwrap()));
    c.bench_function("reduce_and_split", |b| {
        b.iter(|| split_traces(reduce_log(black_box(&out.original.io_log)).unwrap(), cfg.meta()))
    });
    c.bench_function("discover", |b| {
        b.iter(|| discover_net(black_box(&complete), &DiscoveryConfig::default()).unwrap())
    });
    c.bench_function("replay_complete_cycles", |b| {
        b.iter(|| {
            for t in &complete.traces {
                black_box(replay_trace(&out.net, t).unwrap());
            }
        })
    });
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("train_predictor", |b| {
        b.iter(|| pipeline::train_predictor(&out.net, &out.log, &cfg).unwrap())
    });
    group.bench_function("substituted_run_880s", |b| {
        b.iter(|| pipeline::substitute(&out.net, Some(&trained.model), &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, stages);
criterion_main!(benches);
