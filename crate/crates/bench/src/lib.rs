//! Shared fixtures for the benchmark targets.

use rand::rngs::StdRng;
use rand::Rng;

use edgefuse::types::{BBox, Detection, Source, TrackId, TrackedObject};

pub fn random_bbox(rng: &mut StdRng) -> BBox {
    BBox::new(
        rng.random_range(20.0..1260.0),
        rng.random_range(20.0..700.0),
        rng.random_range(10.0..100.0),
        rng.random_range(10.0..100.0),
    )
}

pub fn random_detections(n: usize, source: Source, rng: &mut StdRng) -> Vec<Detection> {
    (0..n)
        .map(|_| Detection {
            label: rng.random_range(0..8),
            bbox: random_bbox(rng),
            score: rng.random_range(0.0..1.0),
            source,
            frame_index: 0,
        })
        .collect()
}

pub fn random_tracked(n: usize, rng: &mut StdRng) -> Vec<TrackedObject> {
    random_detections(n, Source::Edge, rng)
        .into_iter()
        .enumerate()
        .map(|(i, d)| TrackedObject::fresh(d, TrackId(i as u64)))
        .collect()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut StdRng) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.random_range(0.0..1.0)).collect()).collect()
}
