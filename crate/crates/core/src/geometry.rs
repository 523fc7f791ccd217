//! Bounding-box arithmetic: intersection-over-union and non-max suppression.

use crate::types::{BBox, Detection};

/// Intersection-over-union of two boxes, in `[0, 1]`.
///
/// Symmetric; exactly 1 for identical boxes; 0 when the interiors are
/// disjoint (edge-touching boxes count as intersection 0).
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x_max().min(b.x_max()) - a.x_min().max(b.x_min())).max(0.0);
    let iy = (a.y_max().min(b.y_max()) - a.y_min().max(b.y_min())).max(0.0);
    let inter = ix * iy;
    if inter <= 0.0 {
        return 0.0;
    }
    // Areas come from the same corner extents as the intersection, so
    // identical boxes divide to exactly 1.0.
    let extent_area = |bx: &BBox| (bx.x_max() - bx.x_min()) * (bx.y_max() - bx.y_min());
    let union = extent_area(a) + extent_area(b) - inter;
    inter / union
}

/// Greedy per-class non-max suppression.
///
/// Detections are visited in score-descending order (ties keep input order);
/// a detection is suppressed when it overlaps an already-kept detection of
/// the same class with IoU >= `nms_threshold`. Output preserves the
/// score-descending order.
pub fn nms(dets: &[Detection], nms_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b].score.partial_cmp(&dets[a].score).unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let suppressed = kept.iter().any(|&k| {
            dets[k].label == dets[i].label && iou(&dets[k].bbox, &dets[i].bbox) >= nms_threshold
        });
        if !suppressed {
            kept.push(i);
        }
    }
    kept.into_iter().map(|i| dets[i].clone()).collect()
}
