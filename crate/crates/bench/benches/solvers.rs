use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dpgc_core::{
    build_seg1, build_seg2, gen_synthetic, run, BkState, Engine, FlowGraph, Mode, SegParams, SolverConfig,
    SyntheticKind,
};

fn seg2(side: usize, seed: u64) -> FlowGraph {
    let img = gen_synthetic(SyntheticKind::Seg2Random, side, side, seed).unwrap();
    build_seg2(&img, &SegParams::seg2_random()).unwrap()
}

fn seg1(side: usize) -> FlowGraph {
    let img = gen_synthetic(SyntheticKind::Seg1Worst, side, side, 0).unwrap();
    build_seg1(&img, &SegParams::seg1_worst()).unwrap()
}

fn grid_cfg(mode: Mode, side: usize, n: usize) -> SolverConfig {
    SolverConfig { mode, n_subgraphs: n, iter_patience: 20, grid: Some((side, side)), ..SolverConfig::default() }
}

fn serial_bk(c: &mut Criterion) {
    let mut group = c.benchmark_group("serial_bk");
    group.sample_size(20);
    for side in [64, 128, 256] {
        let g = seg2(side, 1);
        group.bench_with_input(BenchmarkId::new("seg2_random", side), &g, |b, g| {
            b.iter(|| BkState::new(g.clone()).solve())
        });
    }
    group.finish();
}

fn parallel_modes(c: &mut Criterion) {
    let mut group = c.benchmark_group("modes");
    group.sample_size(10);
    let side = 128;
    let g = seg2(side, 1);
    for n in [2, 4] {
        for mode in [Mode::NaiveConverged, Mode::Dynamic] {
            let cfg = grid_cfg(mode, side, n);
            group.bench_with_input(
                BenchmarkId::new(format!("seg2_random_{side}/{}", mode.name()), n),
                &cfg,
                |b, cfg| b.iter(|| run(black_box(&g), cfg).unwrap()),
            );
        }
    }
    let worst = seg1(32);
    let cfg = grid_cfg(Mode::NaiveConverged, 32, 4);
    group.bench_function("seg1_worst_32/naive_converged/4", |b| b.iter(|| run(black_box(&worst), &cfg).unwrap()));
    group.finish();
}

/// Residual graph after the first merge of a two-way split against a cold
/// solve of the same problem.
fn flow_reuse(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow_reuse");
    group.sample_size(20);
    let side = 128;
    let g = seg2(side, 3);
    let mut engine = Engine::new(&g, &grid_cfg(Mode::NaiveConverged, side, 2)).unwrap();
    for _ in 0..20 {
        if engine.iterate().n_diff == 0 {
            break;
        }
    }
    engine.merge_all().unwrap();
    let merged = engine.partition().subgraph(0).graph().clone();
    group.bench_function("cold", |b| b.iter(|| BkState::new(g.clone()).solve()));
    group.bench_function("merged_residual", |b| b.iter(|| BkState::new(merged.clone()).solve()));
    group.finish();
}

criterion_group!(benches, serial_bk, parallel_modes, flow_reuse);
criterion_main!(benches);
