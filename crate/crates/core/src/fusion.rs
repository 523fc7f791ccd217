//! Merging a newly arrived, single-source detection set into the pipeline's
//! current object list.
//!
//! Same-source staleness is purged first: when fresh edge (or cloud)
//! detections arrive, objects last confirmed by that same source are removed
//! before matching. Current objects and new detections are then matched by a
//! maximum-weight assignment over the thresholded IoU matrix. Matched pairs
//! merge — cloud detections contribute the label (bigger models classify
//! better) while the current box is kept; edge detections contribute the box
//! (local models localize well) while the current label is kept. Unmatched
//! new detections enter as fresh objects; unmatched current objects from the
//! other source are retained and left to decay.

use crate::assignment::solve_assignment;
use crate::geometry::iou;
use crate::types::{Detection, Source, TrackIdGen, TrackedObject};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FusionError {
    #[error("detection set is empty")]
    EmptyDetections,
    #[error("detection set mixes edge and cloud sources")]
    MixedSources,
}

/// The shared source of a non-empty, homogeneous detection set.
///
/// Fusion is invoked once per arrival event, which is single-source by
/// construction; a mixed set is a caller bug.
pub fn detection_source(new_dets: &[Detection]) -> Result<Source, FusionError> {
    let first = new_dets.first().ok_or(FusionError::EmptyDetections)?.source;
    if new_dets.iter().any(|d| d.source != first) {
        return Err(FusionError::MixedSources);
    }
    Ok(first)
}

/// Drop every current object whose last confirmation came from `source`,
/// preserving order. Newer detections from that source supersede them.
pub fn remove_old_detections(current: &[TrackedObject], source: Source) -> Vec<TrackedObject> {
    current.iter().filter(|o| o.last_det_source != source).cloned().collect()
}

/// Merge `new_dets` into `current`.
///
/// Output ordering: merged objects first (in current-list order), then fresh
/// objects (in `new_dets` order), then retained objects (in current-list
/// order). Merged scores are `delta * new_score` (one decay application at
/// fusion time); fresh objects keep their score unchanged.
pub fn fuse(
    current: &[TrackedObject],
    new_dets: &[Detection],
    iou_threshold: f64,
    delta: f64,
    ids: &mut TrackIdGen,
) -> Result<Vec<TrackedObject>, FusionError> {
    let source = detection_source(new_dets)?;
    let kept = remove_old_detections(current, source);

    // IoU matrix with sub-threshold overlaps zeroed.
    let matrix: Vec<Vec<f64>> = kept
        .iter()
        .map(|obj| {
            new_dets
                .iter()
                .map(|det| {
                    let v = iou(obj.bbox(), &det.bbox);
                    if v >= iou_threshold {
                        v
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    let assignment = solve_assignment(&matrix);

    let mut merged_by_current: Vec<Option<TrackedObject>> = vec![None; kept.len()];
    let mut det_consumed = vec![false; new_dets.len()];
    for &(ci, ni) in &assignment.pairs {
        if matrix[ci][ni] > 0.0 {
            let obj = &kept[ci];
            let det = &new_dets[ni];
            let (label, bbox) = match source {
                Source::Cloud => (det.label, *obj.bbox()),
                Source::Edge => (obj.label(), det.bbox),
            };
            merged_by_current[ci] = Some(TrackedObject {
                detection: Detection {
                    label,
                    bbox,
                    score: delta * det.score,
                    source,
                    frame_index: det.frame_index,
                },
                track_id: obj.track_id,
                last_det_source: source,
                age_frames: 0,
            });
            det_consumed[ni] = true;
        }
        // Zero-weight pairs are padding artifacts: the detection falls
        // through to the fresh branch, the current object to retention.
    }

    let mut out: Vec<TrackedObject> = Vec::with_capacity(kept.len() + new_dets.len());
    out.extend(merged_by_current.iter().flatten().cloned());
    for (ni, det) in new_dets.iter().enumerate() {
        if !det_consumed[ni] {
            let mut fresh = TrackedObject::fresh(det.clone(), ids.next_id());
            fresh.last_det_source = source;
            out.push(fresh);
        }
    }
    for (ci, obj) in kept.iter().enumerate() {
        if merged_by_current[ci].is_none() {
            out.push(obj.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BBox, TrackId};

    fn det(label: u32, bbox: BBox, score: f64, source: Source) -> Detection {
        Detection { label, bbox, score, source, frame_index: 0 }
    }

    fn tracked(label: u32, bbox: BBox, score: f64, id: u64, last: Source) -> TrackedObject {
        TrackedObject {
            detection: det(label, bbox, score, last),
            track_id: TrackId(id),
            last_det_source: last,
            age_frames: 3,
        }
    }

    #[test]
    fn source_of_singleton() {
        let d = det(0, BBox::new(1.0, 1.0, 2.0, 2.0), 0.5, Source::Cloud);
        assert_eq!(detection_source(&[d]), Ok(Source::Cloud));
    }

    #[test]
    fn source_of_homogeneous_pair() {
        let b = BBox::new(1.0, 1.0, 2.0, 2.0);
        let dets = [det(0, b, 0.5, Source::Edge), det(1, b, 0.6, Source::Edge)];
        assert_eq!(detection_source(&dets), Ok(Source::Edge));
    }

    #[test]
    fn mixed_sources_is_an_error() {
        let b = BBox::new(1.0, 1.0, 2.0, 2.0);
        let dets = [det(0, b, 0.5, Source::Edge), det(1, b, 0.6, Source::Cloud)];
        assert_eq!(detection_source(&dets), Err(FusionError::MixedSources));
        assert_eq!(detection_source(&[]), Err(FusionError::EmptyDetections));
    }

    #[test]
    fn remove_old_drops_only_matching_source() {
        let b = BBox::new(1.0, 1.0, 2.0, 2.0);
        let a = tracked(0, b, 0.9, 0, Source::Edge);
        let c = tracked(1, b, 0.8, 1, Source::Cloud);
        let out = remove_old_detections(&[a, c.clone()], Source::Edge);
        assert_eq!(out, vec![c]);
    }

    #[test]
    fn remove_old_on_empty_list() {
        assert!(remove_old_detections(&[], Source::Cloud).is_empty());
    }

    #[test]
    fn remove_old_keeps_everything_from_other_source() {
        let b = BBox::new(1.0, 1.0, 2.0, 2.0);
        let a = tracked(0, b, 0.9, 0, Source::Cloud);
        let c = tracked(1, b, 0.8, 1, Source::Cloud);
        let out = remove_old_detections(&[a.clone(), c.clone()], Source::Edge);
        assert_eq!(out, vec![a, c]);
    }

    #[test]
    fn cloud_merge_takes_new_label_and_current_box() {
        // current: car at B1 from the edge; new: overlapping cloud truck.
        let b1 = BBox::new(10.0, 10.0, 10.0, 10.0);
        let b2 = BBox::new(12.0, 10.0, 10.0, 10.0); // iou 2/3 with b1
        let current = vec![tracked(1, b1, 0.8, 42, Source::Edge)];
        let new = vec![det(2, b2, 0.9, Source::Cloud)];
        let mut ids = TrackIdGen::new();
        let out = fuse(&current, &new, 0.5, 0.95, &mut ids).unwrap();
        assert_eq!(out.len(), 1);
        let o = &out[0];
        assert_eq!(o.label(), 2);
        assert_eq!(*o.bbox(), b1);
        assert!((o.score() - 0.95 * 0.9).abs() < 1e-12);
        assert_eq!(o.last_det_source, Source::Cloud);
        assert_eq!(o.track_id, TrackId(42));
        assert_eq!(o.age_frames, 0);
    }

    #[test]
    fn empty_current_yields_fresh_objects() {
        let new = vec![det(0, BBox::new(5.0, 5.0, 4.0, 4.0), 0.9, Source::Cloud)];
        let mut ids = TrackIdGen::new();
        let out = fuse(&[], &new, 0.5, 0.95, &mut ids).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].score(), 0.9);
        assert_eq!(out[0].last_det_source, Source::Cloud);
        assert_eq!(out[0].age_frames, 0);
    }

    #[test]
    fn edge_merge_keeps_current_label_and_retains_unmatched() {
        // current: cloud person P and cloud car C; new: edge car C' on C.
        let p_box = BBox::new(100.0, 100.0, 10.0, 10.0);
        let c_box = BBox::new(50.0, 50.0, 20.0, 20.0);
        let c_new = BBox::new(52.0, 50.0, 20.0, 20.0); // iou 18/22 with c_box
        let person = tracked(0, p_box, 0.9, 1, Source::Cloud);
        let car = tracked(1, c_box, 0.7, 2, Source::Cloud);
        let new = vec![det(1, c_new, 0.6, Source::Edge)];
        let mut ids = TrackIdGen::new();
        let out = fuse(&[person.clone(), car], &new, 0.5, 0.9, &mut ids).unwrap();
        assert_eq!(out.len(), 2);
        let merged = &out[0];
        assert_eq!(merged.label(), 1);
        assert_eq!(*merged.bbox(), c_new);
        assert!((merged.score() - 0.54).abs() < 1e-12);
        assert_eq!(merged.last_det_source, Source::Edge);
        assert_eq!(merged.track_id, TrackId(2));
        assert_eq!(out[1], person);
    }

    #[test]
    fn decay_one_is_neutral() {
        let b = BBox::new(10.0, 10.0, 10.0, 10.0);
        let current = vec![tracked(0, b, 0.5, 7, Source::Edge)];
        let new = vec![det(0, b, 1.0, Source::Cloud)];
        let mut ids = TrackIdGen::new();
        let out = fuse(&current, &new, 0.5, 1.0, &mut ids).unwrap();
        assert_eq!(out[0].score(), 1.0);
    }

    #[test]
    fn every_new_detection_survives() {
        let far = |i: usize| BBox::new(200.0 * i as f64 + 10.0, 10.0, 8.0, 8.0);
        let current: Vec<TrackedObject> =
            (0..3).map(|i| tracked(0, far(i), 0.8, i as u64, Source::Cloud)).collect();
        let new: Vec<Detection> =
            (0..5).map(|i| det(1, far(i + 10), 0.6, Source::Edge)).collect();
        let mut ids = TrackIdGen::new();
        let out = fuse(&current, &new, 0.5, 0.9, &mut ids).unwrap();
        // nothing overlaps: all new are fresh, all current retained
        assert_eq!(out.len(), 8);
        assert!(out.len() >= new.len());
    }
}
