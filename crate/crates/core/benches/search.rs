//! Benchmarks for the window search: sequential vs parallel execution and
//! depth-first vs meet-in-the-middle enumeration.
//!
//! Run with `cargo bench -p shifted-waring`. Disabling the default
//! `parallel` feature turns the parallel cases into sequential baselines.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use shifted_waring::model::{validate_instance, BoundSpec, RawInstance};
use shifted_waring::search::{search, Algorithm, SearchSpec, TauValue};
use shifted_waring::witness::tau_m_value;
use shifted_waring::{Parallelism, Rat};

fn spec_with_radius(radius: i64) -> SearchSpec {
    let inst = validate_instance(&RawInstance {
        s: 2,
        k: 2,
        theta: vec!["3/10".into(), "7/10".into()],
    })
    .unwrap();
    let tau = tau_m_value(&inst, 500).unwrap();
    let mut spec = SearchSpec::new(
        inst,
        TauValue::exact(tau),
        BoundSpec::absolute(Rat::ratio(1, 2)),
        BoundSpec::absolute(Rat::from_int(radius)),
    );
    spec.prune = false; // keep the workload data-parallel for the comparison
    spec
}

fn bench_parallelism(c: &mut Criterion) {
    let mut group = c.benchmark_group("window_search");
    group.sample_size(10);
    for radius in [25i64, 60] {
        let mut spec = spec_with_radius(radius);
        spec.parallelism = Parallelism::Sequential;
        group.bench_with_input(BenchmarkId::new("sequential", radius), &spec, |b, s| {
            b.iter(|| search(s).unwrap())
        });
        let mut spec = spec_with_radius(radius);
        spec.parallelism = Parallelism::Parallel;
        group.bench_with_input(BenchmarkId::new("parallel", radius), &spec, |b, s| {
            b.iter(|| search(s).unwrap())
        });
    }
    group.finish();
}

fn bench_algorithms(c: &mut Criterion) {
    let inst = validate_instance(&RawInstance {
        s: 4,
        k: 2,
        theta: vec!["1/10".into(), "3/10".into(), "7/10".into(), "9/10".into()],
    })
    .unwrap();
    let tau = tau_m_value(&inst, 60).unwrap();
    let mut group = c.benchmark_group("enumeration");
    group.sample_size(10);
    for algo in [Algorithm::DepthFirst, Algorithm::MeetInMiddle] {
        let mut spec = SearchSpec::new(
            inst.clone(),
            TauValue::exact(tau.clone()),
            BoundSpec::absolute(Rat::ratio(1, 2)),
            BoundSpec::absolute(Rat::from_int(4)),
        );
        spec.algorithm = algo;
        spec.parallelism = Parallelism::Sequential;
        let name = match algo {
            Algorithm::DepthFirst => "dfs",
            Algorithm::MeetInMiddle => "mitm",
            Algorithm::Auto => unreachable!(),
        };
        group.bench_function(name, |b| b.iter(|| search(&spec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_parallelism, bench_algorithms);
criterion_main!(benches);
