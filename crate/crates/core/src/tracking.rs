//! Simulated object tracking.
//!
//! There are no pixels here: tracker fidelity is modeled by binding each
//! tracked box to the ground-truth identity it covers and following that
//! identity's true displacement, corrupted by Gaussian drift. Unbound boxes
//! (false-positive tracks, or tracks whose target vanished) ride the camera
//! pan and drift away. Every step multiplies confidence scores by the decay
//! rate; objects falling below the discard threshold, or whose center leaves
//! the frame, are dropped.

use rand::rngs::StdRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::iou;
use crate::types::{Detection, FrameBounds, FrameTruth, TrackId, TrackedObject};

/// Knobs of the statistical tracker proxy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerModel {
    /// Standard deviation of positional drift noise, pixels per tracker step.
    pub drift_sigma: f64,
    /// Minimum IoU for binding a box to a ground-truth identity.
    pub match_iou: f64,
}

impl Default for TrackerModel {
    fn default() -> Self {
        TrackerModel { drift_sigma: 1.0, match_iou: 0.5 }
    }
}

/// The ground-truth identity this object's box currently covers, if any.
///
/// Picks the identity with maximal IoU, provided it reaches
/// `model.match_iou`; otherwise the object is treated as a background track.
pub fn bind_identity(obj: &TrackedObject, truth: &FrameTruth, model: &TrackerModel) -> Option<u64> {
    let mut best: Option<(u64, f64)> = None;
    for gt in &truth.objects {
        let v = iou(obj.bbox(), &gt.bbox);
        if v >= model.match_iou && best.is_none_or(|(_, b)| v > b) {
            best = Some((gt.identity, v));
        }
    }
    best.map(|(id, _)| id)
}

/// One tracker step spanning `truth_from` -> `truth_to` (possibly several
/// underlying frames, for fast-track strides). `pan` is the accumulated
/// camera shift over the span; `decay_factor` is applied once.
#[allow(clippy::too_many_arguments)]
fn propagate_span(
    objects: &[TrackedObject],
    truth_from: &FrameTruth,
    truth_to: &FrameTruth,
    pan: [f64; 2],
    model: &TrackerModel,
    decay_factor: f64,
    discard_threshold: f64,
    bounds: FrameBounds,
    rng: &mut StdRng,
) -> Vec<TrackedObject> {
    let drift = Normal::new(0.0, model.drift_sigma).expect("drift_sigma >= 0");
    let mut out = Vec::with_capacity(objects.len());
    for obj in objects {
        let dx;
        let dy;
        match bind_identity(obj, truth_from, model).and_then(|id| {
            truth_from.find(id).zip(truth_to.find(id))
        }) {
            Some((from, to)) => {
                dx = to.bbox.cx - from.bbox.cx;
                dy = to.bbox.cy - from.bbox.cy;
            }
            None => {
                dx = pan[0];
                dy = pan[1];
            }
        }
        let noise = (drift.sample(rng), drift.sample(rng));
        let bbox = obj.bbox().shifted(dx + noise.0, dy + noise.1);
        let score = obj.score() * decay_factor;
        if score < discard_threshold || !bounds.contains(bbox.cx, bbox.cy) {
            continue;
        }
        let mut next = obj.clone();
        next.detection.bbox = bbox;
        next.detection.score = score;
        next.age_frames += 1;
        out.push(next);
    }
    out
}

/// Propagate the current list by one frame.
#[allow(clippy::too_many_arguments)]
pub fn propagate_step(
    objects: &[TrackedObject],
    truth_prev: &FrameTruth,
    truth_next: &FrameTruth,
    model: &TrackerModel,
    delta: f64,
    discard_threshold: f64,
    bounds: FrameBounds,
    rng: &mut StdRng,
) -> Vec<TrackedObject> {
    debug_assert_eq!(truth_next.frame_index, truth_prev.frame_index + 1);
    propagate_span(
        objects,
        truth_prev,
        truth_next,
        truth_next.camera_shift,
        model,
        delta,
        discard_threshold,
        bounds,
        rng,
    )
}

/// Replay delayed cloud detections forward to the current frame.
///
/// `truths` must cover the sent frame through the current frame, contiguous.
/// Tracks step only every `stride` frames (each step covering up to `stride`
/// frames of true displacement), so decay applies `ceil(delay / stride)`
/// times — or once per underlying frame when `per_frame_decay` is set.
/// Survivors are re-stamped with the current frame index.
#[allow(clippy::too_many_arguments)]
pub fn fast_track(
    cloud_dets: &[Detection],
    truths: &[FrameTruth],
    model: &TrackerModel,
    delta: f64,
    discard_threshold: f64,
    stride: u64,
    per_frame_decay: bool,
    bounds: FrameBounds,
    rng: &mut StdRng,
) -> Vec<Detection> {
    assert!(stride >= 1, "stride must be >= 1");
    assert!(!truths.is_empty(), "need at least the sent frame's truth");
    let t_now = truths.last().expect("non-empty").frame_index;
    let delay = (truths.len() - 1) as u64;
    if delay == 0 {
        return cloud_dets.to_vec();
    }

    let mut tracks: Vec<TrackedObject> = cloud_dets
        .iter()
        .enumerate()
        .map(|(i, d)| TrackedObject::fresh(d.clone(), TrackId(i as u64)))
        .collect();

    let mut from = 0usize;
    while from < delay as usize {
        let to = (from + stride as usize).min(delay as usize);
        let mut pan = [0.0, 0.0];
        for t in &truths[from + 1..=to] {
            pan[0] += t.camera_shift[0];
            pan[1] += t.camera_shift[1];
        }
        let decay_factor =
            if per_frame_decay { delta.powi((to - from) as i32) } else { delta };
        tracks = propagate_span(
            &tracks,
            &truths[from],
            &truths[to],
            pan,
            model,
            decay_factor,
            discard_threshold,
            bounds,
            rng,
        );
        if tracks.is_empty() {
            break;
        }
        from = to;
    }

    tracks
        .into_iter()
        .map(|t| {
            let mut det = t.detection;
            det.frame_index = t_now;
            det
        })
        .collect()
}
