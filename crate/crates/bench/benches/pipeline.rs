//! Benchmarks for the hot paths of the pipeline: rule matching, graph
//! serialization, feature extraction, and model training.

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;

use breakage_core::features::{extract, extract_dataset, schema_v1};
use breakage_core::filter::{decide, FilterList, RequestContext, ResourceType};
use breakage_core::graph::graphml::{load_graphml, save_graphml};
use breakage_core::ml::gbdt::GbdtModel;
use breakage_core::synth::{generate_dataset, SynthConfig};
use breakage_core::{Hyperparams, Matrix};

fn sample_rules(n: usize) -> String {
    let mut text = String::from("! generated benchmark list\n");
    for i in 0..n {
        match i % 4 {
            0 => text.push_str(&format!("||ads{i}.example.com^\n")),
            1 => text.push_str(&format!("/banner/{i}/*$image\n")),
            2 => text.push_str(&format!("||cdn{i}.example.net^$script,third-party\n")),
            _ => text.push_str(&format!("@@||ads{i}.example.com/ok.js$script\n")),
        }
    }
    text
}

fn sample_requests(n: usize) -> Vec<RequestContext> {
    (0..n)
        .map(|i| {
            let (url, rt) = match i % 3 {
                0 => (format!("https://ads{}.example.com/x.js", i % 97), ResourceType::Script),
                1 => (format!("https://site.example/banner/{}/a.png", i % 97), ResourceType::Image),
                _ => (format!("https://cdn{}.example.net/lib.js", i % 97), ResourceType::Script),
            };
            RequestContext::new(&url, rt, "site.example").unwrap()
        })
        .collect()
}

fn synth_config(n: usize) -> SynthConfig {
    SynthConfig {
        seed: 9,
        n_examples: n,
        broken_fraction: 0.5,
        signal_strength: 0.8,
        size_range: (40, 120),
    }
}

fn bench_filter_matching(c: &mut Criterion) {
    let list = FilterList::parse(&sample_rules(400));
    let requests = sample_requests(1000);
    let mut group = c.benchmark_group("filter");
    group.throughput(Throughput::Elements(requests.len() as u64));
    group.bench_function("decide_1000_requests_400_rules", |b| {
        b.iter(|| {
            let mut blocked = 0usize;
            for ctx in &requests {
                if decide(black_box(&list.rules), ctx).matched_rule.is_some() {
                    blocked += 1;
                }
            }
            blocked
        })
    });
    group.finish();
}

fn bench_graphml_round_trip(c: &mut Criterion) {
    let examples = generate_dataset(&synth_config(2)).unwrap();
    let graph = &examples[0].triple.pre;
    let mut serialized = Vec::new();
    save_graphml(graph, &mut serialized).unwrap();

    let mut group = c.benchmark_group("graphml");
    group.throughput(Throughput::Bytes(serialized.len() as u64));
    group.bench_function("save", |b| {
        b.iter(|| {
            let mut out = Vec::with_capacity(serialized.len());
            save_graphml(black_box(graph), &mut out).unwrap();
            out
        })
    });
    group.bench_function("load", |b| {
        b.iter(|| load_graphml(black_box(serialized.as_slice())).unwrap())
    });
    group.finish();
}

fn bench_feature_extraction(c: &mut Criterion) {
    let schema = schema_v1();
    let examples = generate_dataset(&synth_config(64)).unwrap();

    let mut group = c.benchmark_group("features");
    group.bench_function("extract_one", |b| {
        b.iter(|| extract(schema, black_box(&examples[0])))
    });
    group.throughput(Throughput::Elements(examples.len() as u64));
    group.bench_function("extract_64", |b| {
        b.iter(|| extract_dataset(schema, black_box(&examples)))
    });
    group.finish();
}

fn bench_gbdt_training(c: &mut Criterion) {
    let schema = schema_v1();
    let examples = generate_dataset(&synth_config(128)).unwrap();
    let rows = extract_dataset(schema, &examples);
    let (x, y) = Matrix::from_feature_rows(&rows);
    let hp = Hyperparams {
        n_trees: 20,
        max_depth: 3,
        ..Hyperparams::default()
    };

    let mut group = c.benchmark_group("gbdt");
    group.sample_size(10);
    group.bench_function("train_128x_schema_width_20_trees", |b| {
        b.iter(|| GbdtModel::train(black_box(&x), black_box(&y), &hp).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_filter_matching,
    bench_graphml_round_trip,
    bench_feature_extraction,
    bench_gbdt_training
);
criterion_main!(benches);
