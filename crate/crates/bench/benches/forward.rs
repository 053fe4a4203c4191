use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use deft_bench::{forward_fixture, forward_once, with_aggregator};
use deft_core::model::Aggregator;
use deft_core::DeftConfig;

fn forward_by_size(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward/nodes");
    group.sample_size(10);
    let cfg = DeftConfig::default();
    for n in [512, 1024, 2048, 4096] {
        let (model, ctx) = forward_fixture(n, &cfg).unwrap();
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(forward_once(&model, &ctx).unwrap()))
        });
    }
    group.finish();
}

fn forward_by_aggregator(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward/aggregator");
    group.sample_size(10);
    for (name, agg) in [
        ("mlp", Aggregator::Mlp),
        ("gat", Aggregator::GatStyle),
        ("transformer", Aggregator::SparseTransformer),
    ] {
        let (model, ctx) = forward_fixture(1024, &with_aggregator(agg)).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| black_box(forward_once(&model, &ctx).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, forward_by_size, forward_by_aggregator);
criterion_main!(benches);
