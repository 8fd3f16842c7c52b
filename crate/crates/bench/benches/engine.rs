use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use sybilnav_core::fixtures;
use sybilnav_core::geomap::{load_map, match_fix, NodeId, Point};
use sybilnav_core::navcore::{Engine, EngineParams};
use sybilnav_core::sim::{self, Scenario};

fn matching(c: &mut Criterion) {
    let g = load_map(fixtures::CAMPUS_MAP).unwrap();
    c.bench_function("match_fix campus", |b| {
        b.iter(|| {
            match_fix(
                &g,
                black_box(Point { x: 740.0, y: 3.0 }),
                90.0,
                30.0,
                0.0,
                1,
            )
        })
    });
}

fn routing(c: &mut Criterion) {
    let g = Arc::new(load_map(fixtures::CAMPUS_MAP).unwrap());
    let e = Engine::new(g, EngineParams::default());
    let (o, d) = (NodeId("O".into()), NodeId("D".into()));
    c.bench_function("route O to D", |b| {
        b.iter(|| e.route(black_box(&o), &d, 0.0).unwrap())
    });
}

fn scenario(c: &mut Criterion) {
    let g = Arc::new(load_map(fixtures::CAMPUS_MAP).unwrap());
    let sc = Scenario::parse(
        "fig_speedgraph",
        fixtures::scenario_by_name("fig_speedgraph").unwrap(),
    )
    .unwrap();
    let mut group = c.benchmark_group("scenario");
    group.sample_size(10);
    group.bench_function("fig_speedgraph", |b| {
        b.iter(|| sim::run_scenario(&sc, g.clone(), 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, matching, routing, scenario);
criterion_main!(benches);
