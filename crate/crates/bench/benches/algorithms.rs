use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use edgefuse::assignment::solve_assignment;
use edgefuse::fusion::fuse;
use edgefuse::geometry::{iou, nms};
use edgefuse::rng::substream;
use edgefuse::types::{Source, TrackIdGen};
use edgefuse_bench::{random_bbox, random_detections, random_matrix, random_tracked};

fn bench_geometry(c: &mut Criterion) {
    let mut rng = substream(1, "bench-geo");
    let a = random_bbox(&mut rng);
    let b = random_bbox(&mut rng);
    c.bench_function("iou", |bencher| {
        bencher.iter(|| iou(black_box(&a), black_box(&b)));
    });

    let dets = random_detections(64, Source::Edge, &mut rng);
    c.bench_function("nms 64 boxes", |bencher| {
        bencher.iter(|| nms(black_box(&dets), 0.5));
    });
}

fn bench_assignment(c: &mut Criterion) {
    let mut rng = substream(2, "bench-lsa");
    for n in [8usize, 32] {
        let weights = random_matrix(n, n, &mut rng);
        c.bench_function(&format!("solve_assignment {n}x{n}"), |bencher| {
            bencher.iter(|| solve_assignment(black_box(&weights)));
        });
    }
}

fn bench_fusion(c: &mut Criterion) {
    let mut rng = substream(3, "bench-fuse");
    let current = random_tracked(24, &mut rng);
    let new_dets = random_detections(24, Source::Cloud, &mut rng);
    c.bench_function("fuse 24x24", |bencher| {
        bencher.iter(|| {
            let mut ids = TrackIdGen::new();
            fuse(black_box(&current), black_box(&new_dets), 0.5, 0.95, &mut ids).unwrap()
        });
    });
}

criterion_group!(benches, bench_geometry, bench_assignment, bench_fusion);
criterion_main!(benches);
