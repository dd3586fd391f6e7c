use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use isofcq::{build_frame, detect, extend, RSeries};
use isofcq_bench::{elastic_cone, sampled_cylinder};

fn frame(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_frame");
    for n in [128, 512, 2048] {
        let spec = elastic_cone(n);
        group.bench_with_input(BenchmarkId::new("elastic_cone", n), &spec, |b, s| {
            b.iter(|| build_frame(black_box(s)).unwrap())
        });
    }
    let spec = sampled_cylinder(512);
    group.bench_function("sampled_cylinder/512", |b| b.iter(|| build_frame(black_box(&spec)).unwrap()));
    group.finish();
}

fn series(c: &mut Criterion) {
    let fb = Arc::new(build_frame(&elastic_cone(512)).unwrap());
    let r = RSeries::default();
    let mut group = c.benchmark_group("extend");
    for depth in [2, 4, 6] {
        group.bench_with_input(BenchmarkId::from_parameter(depth), &depth, |b, &d| {
            b.iter(|| extend(fb.clone(), &r, black_box(d)).unwrap())
        });
    }
    group.finish();

    let s = extend(fb, &r, 6).unwrap();
    c.bench_function("residuals/D=6", |b| {
        b.iter(|| {
            black_box(s.conservation_residual().unwrap());
            black_box(s.parallelism_residual().unwrap());
        })
    });
}

fn detection(c: &mut Criterion) {
    let s = extend(Arc::new(build_frame(&elastic_cone(512)).unwrap()), &RSeries::default(), 4).unwrap();
    c.bench_function("detect/elastic_cone/D=4", |b| b.iter(|| detect(black_box(&s), 1e-6).unwrap()));
}

criterion_group!(benches, frame, series, detection);
criterion_main!(benches);
