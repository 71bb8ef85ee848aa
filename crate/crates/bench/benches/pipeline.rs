use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fml_core::solver::Solver;
use fml_core::{compile, parse_model, resolve, synth, Analyzer, Search};

const MOBILE: &str = include_str!("../../core/tests/fixtures/mobile.fml");
const LAPTOP: &str = include_str!("../../core/tests/fixtures/laptop.fml");

fn front_end(c: &mut Criterion) {
    c.bench_function("parse/mobile", |b| b.iter(|| parse_model(black_box(MOBILE)).unwrap()));
    let model = resolve(parse_model(MOBILE).unwrap()).unwrap();
    c.bench_function("compile/mobile", |b| b.iter(|| compile(black_box(&model)).unwrap()));
}

fn analyses(c: &mut Criterion) {
    let laptop = Analyzer::from_source(LAPTOP).unwrap();
    c.bench_function("count/laptop", |b| b.iter(|| laptop.count_products()));
    let mobile = Analyzer::from_source(MOBILE).unwrap();
    c.bench_function("core_and_dead/mobile", |b| b.iter(|| mobile.core_and_dead().unwrap()));
}

fn strategies(c: &mut Criterion) {
    let problem = Analyzer::from_source(LAPTOP).unwrap().problem().clone();
    let mut group = c.benchmark_group("enumerate/laptop");
    for search in [Search::Propagate, Search::Backtrack, Search::GenerateAndTest] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{search:?}")), &search, |b, &s| {
            b.iter(|| Solver::new(&problem).with_search(s).count_solutions())
        });
    }
    group.finish();
}

fn scale(c: &mut Criterion) {
    let mut group = c.benchmark_group("first_product/synthetic");
    group.sample_size(10);
    for features in [100, 1000] {
        let analyzer = Analyzer::from_source(&synth::balanced_model(features, 4, features / 20, 7)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(features), &analyzer, |b, a| {
            b.iter(|| a.enumerate_products(Some(1)))
        });
    }
    group.finish();
}

criterion_group!(benches, front_end, analyses, strategies, scale);
criterion_main!(benches);
