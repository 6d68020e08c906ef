use criterion::{black_box, criterion_group, criterion_main, Criterion};
use probsens_bench::CASES;
use probsens_core::pipeline::{closed_form, prepare};

fn build(c: &mut Criterion) {
    let mut group = c.benchmark_group("build");
    for case in CASES {
        let prep = prepare(case.source()).unwrap();
        let m = prep.monomial(case.target).unwrap();
        group.bench_function(case.label(), |b| {
            b.iter(|| prep.system(black_box(&m), case.wrt, case.method, &Default::default()).unwrap())
        });
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    for case in CASES {
        let prep = prepare(case.source()).unwrap();
        let m = prep.monomial(case.target).unwrap();
        let (sys, _) = prep.system(&m, case.wrt, case.method, &Default::default()).unwrap();
        group.bench_function(case.label(), |b| b.iter(|| closed_form(black_box(&sys), case.wrt).unwrap()));
    }
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let mut group = c.benchmark_group("end_to_end");
    group.sample_size(20);
    for case in CASES {
        group.bench_function(case.label(), |b| b.iter(|| probsens_bench::run(black_box(case)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, build, solve, end_to_end);
criterion_main!(benches);
