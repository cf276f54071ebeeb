use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hyperklein::prym::prym_datum;
use hyperklein::reconstruct::{invert, round_trip_batch};
use hyperklein::towers::{build_tower, standard_config};
use hyperklein::CaseTag;

const KLEIN: [CaseTag; 4] = [CaseTag::EtaleKlein, CaseTag::Mixed8, CaseTag::Branched12, CaseTag::Mixed4];

fn build(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_tower");
    for case in KLEIN {
        let cfg = standard_config(case, 3);
        group.bench_with_input(BenchmarkId::new(case.as_str(), 3), &cfg, |b, cfg| b.iter(|| build_tower(cfg, case).unwrap()));
    }
    group.finish();
}

fn inverse(c: &mut Criterion) {
    let mut group = c.benchmark_group("invert");
    for case in KLEIN {
        let d = prym_datum(&build_tower(&standard_config(case, 3), case).unwrap(), Some(1)).unwrap();
        group.bench_with_input(BenchmarkId::new(case.as_str(), 3), &d, |b, d| b.iter(|| invert(d).unwrap()));
    }
    group.finish();
}

fn batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("round_trip_batch");
    group.sample_size(10);
    for case in KLEIN {
        group.bench_function(case.as_str(), |b| b.iter(|| round_trip_batch(case, 2, 20, 7).equivalent));
    }
    group.finish();
}

criterion_group!(benches, build, inverse, batch);
criterion_main!(benches);
