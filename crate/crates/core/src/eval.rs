//! Evaluation: per-class AP, mAP@0.5, and the six-way error breakdown.
//!
//! Matching is the usual greedy protocol: predictions in score order claim
//! the highest-IoU unmatched ground truth of the same class at the IoU
//! threshold. AP uses all-point interpolation by default (the 11-point
//! variant is available behind a flag). The error breakdown classifies every
//! false positive into one of five categories plus missed ground truths, and
//! scores each category by the mAP gained from fixing only that category
//! with an oracle: a fixed prediction may claim an unmatched ground truth,
//! and is suppressed when the fix would only create a duplicate.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::geometry::iou;
use crate::types::{Detection, TruthObject};

/// TIDE foreground IoU threshold.
pub const TIDE_FOREGROUND_IOU: f64 = 0.5;
/// TIDE background IoU threshold.
pub const TIDE_BACKGROUND_IOU: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApInterpolation {
    /// Area under the precision envelope over all recall points.
    AllPoint,
    /// Mean of the envelope at recalls 0.0, 0.1, ..., 1.0.
    ElevenPoint,
}

/// Outcome of one prediction under greedy matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredOutcome {
    TruePositive { gt: usize },
    FalsePositive,
}

impl PredOutcome {
    pub fn is_tp(&self) -> bool {
        matches!(self, PredOutcome::TruePositive { .. })
    }
}

/// Per-frame matching result. `outcomes` aligns with the input predictions.
#[derive(Clone, Debug)]
pub struct FrameMatch {
    pub outcomes: Vec<PredOutcome>,
    pub gt_matched: Vec<bool>,
}

impl FrameMatch {
    pub fn unmatched_gts(&self) -> Vec<usize> {
        self.gt_matched.iter().enumerate().filter(|(_, m)| !**m).map(|(i, _)| i).collect()
    }
}

/// Greedy matching of one frame's predictions against its ground truth.
///
/// Predictions are visited in score-descending order (stable for ties);
/// each claims the highest-IoU still-unmatched ground truth of the same
/// class with IoU >= `iou_thr`. Everything else is a false positive.
pub fn match_frame(preds: &[Detection], gts: &[TruthObject], iou_thr: f64) -> FrameMatch {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b].score.partial_cmp(&preds[a].score).unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut outcomes = vec![PredOutcome::FalsePositive; preds.len()];
    let mut gt_matched = vec![false; gts.len()];
    for &pi in &order {
        let pred = &preds[pi];
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt_matched[gi] || gt.label != pred.label {
                continue;
            }
            let v = iou(&pred.bbox, &gt.bbox);
            if v >= iou_thr && best.is_none_or(|(_, b)| v > b) {
                best = Some((gi, v));
            }
        }
        if let Some((gi, _)) = best {
            gt_matched[gi] = true;
            outcomes[pi] = PredOutcome::TruePositive { gt: gi };
        }
    }
    FrameMatch { outcomes, gt_matched }
}

/// Average precision of one class from pooled `(score, is_tp)` records.
///
/// Records are ranked score-descending, ties keeping their input order.
/// `n_gt` must be >= 1 (a class with no ground truth is excluded from mAP
/// upstream, not scored 0).
pub fn average_precision(records: &[(f64, bool)], n_gt: usize, interp: ApInterpolation) -> f64 {
    assert!(n_gt >= 1, "AP undefined without ground truth");
    debug_assert!(
        records.iter().filter(|r| r.1).count() <= n_gt,
        "matching can never produce more true positives than ground truths"
    );
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        records[b].0.partial_cmp(&records[a].0).unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut recalls = Vec::with_capacity(records.len());
    let mut precisions = Vec::with_capacity(records.len());
    let mut tp = 0usize;
    let mut fp = 0usize;
    for &i in &order {
        if records[i].1 {
            tp += 1;
        } else {
            fp += 1;
        }
        recalls.push(tp as f64 / n_gt as f64);
        precisions.push(tp as f64 / (tp + fp) as f64);
    }

    // Precision envelope: best precision achievable at or beyond each rank.
    let mut envelope = precisions.clone();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }

    match interp {
        ApInterpolation::AllPoint => {
            let mut ap = 0.0;
            let mut prev_recall = 0.0;
            for i in 0..envelope.len() {
                if recalls[i] > prev_recall {
                    ap += (recalls[i] - prev_recall) * envelope[i];
                    prev_recall = recalls[i];
                }
            }
            ap
        }
        ApInterpolation::ElevenPoint => {
            let mut total = 0.0;
            for step in 0..=10 {
                let r = step as f64 / 10.0;
                let p = recalls
                    .iter()
                    .zip(&envelope)
                    .find(|(rec, _)| **rec >= r - 1e-12)
                    .map(|(_, p)| *p)
                    .unwrap_or(0.0);
                total += p;
            }
            total / 11.0
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub n_gt: usize,
}

/// AP over a whole run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApSummary {
    /// `None` when no frame carries any ground truth.
    pub map: Option<f64>,
    pub per_class_ap: BTreeMap<u32, f64>,
    pub counts: BTreeMap<u32, ClassCounts>,
}

/// mAP at `iou_thr`: greedy matching per frame, AP per class over the whole
/// run, unweighted mean over classes with at least one ground-truth
/// instance.
pub fn mean_ap(preds: &[Vec<Detection>], gts: &[Vec<TruthObject>], iou_thr: f64) -> ApSummary {
    mean_ap_with(preds, gts, iou_thr, ApInterpolation::AllPoint)
}

pub fn mean_ap_with(
    preds: &[Vec<Detection>],
    gts: &[Vec<TruthObject>],
    iou_thr: f64,
    interp: ApInterpolation,
) -> ApSummary {
    assert_eq!(preds.len(), gts.len(), "frames must align");
    let matches: Vec<FrameMatch> = preds
        .iter()
        .zip(gts)
        .map(|(p, g)| match_frame(p, g, iou_thr))
        .collect();
    summarize(preds, gts, &matches, interp, |_, _| RecordFate::Keep, |_, _| false)
}

/// How a prediction's pooled record is transformed by an oracle fix.
#[derive(Clone, Copy, Debug, PartialEq)]
enum RecordFate {
    Keep,
    Drop,
    /// Count as a true positive of the given class (a corrected prediction
    /// that claimed an unmatched ground truth).
    MoveTp { class: u32 },
}

fn summarize(
    preds: &[Vec<Detection>],
    gts: &[Vec<TruthObject>],
    matches: &[FrameMatch],
    interp: ApInterpolation,
    fate: impl Fn(usize, usize) -> RecordFate,
    gt_removed: impl Fn(usize, usize) -> bool,
) -> ApSummary {
    let mut pools: BTreeMap<u32, Vec<(f64, bool)>> = BTreeMap::new();
    let mut n_gt: BTreeMap<u32, usize> = BTreeMap::new();
    let mut counts: BTreeMap<u32, ClassCounts> = BTreeMap::new();

    for (f, frame_gts) in gts.iter().enumerate() {
        for (g, gt) in frame_gts.iter().enumerate() {
            if !gt_removed(f, g) {
                *n_gt.entry(gt.label).or_default() += 1;
                counts.entry(gt.label).or_default().n_gt += 1;
            }
        }
        for (p, pred) in preds[f].iter().enumerate() {
            let is_tp = matches[f].outcomes[p].is_tp();
            match fate(f, p) {
                RecordFate::Keep => {
                    pools.entry(pred.label).or_default().push((pred.score, is_tp));
                    let c = counts.entry(pred.label).or_default();
                    if is_tp {
                        c.tp += 1;
                    } else {
                        c.fp += 1;
                    }
                }
                RecordFate::Drop => {}
                RecordFate::MoveTp { class } => {
                    pools.entry(class).or_default().push((pred.score, true));
                    counts.entry(class).or_default().tp += 1;
                }
            }
        }
    }

    let mut per_class_ap = BTreeMap::new();
    for (&class, &gt_count) in &n_gt {
        if gt_count == 0 {
            continue;
        }
        let empty = Vec::new();
        let records = pools.get(&class).unwrap_or(&empty);
        per_class_ap.insert(class, average_precision(records, gt_count, interp));
    }
    let map = if per_class_ap.is_empty() {
        None
    } else {
        Some(per_class_ap.values().sum::<f64>() / per_class_ap.len() as f64)
    };
    ApSummary { map, per_class_ap, counts }
}

/// The six error categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Cls,
    Loc,
    Both,
    Dupe,
    Bkg,
    Miss,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub cls: f64,
    pub loc: f64,
    pub both: f64,
    pub dupe: f64,
    pub bkg: f64,
    pub miss: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub cls: usize,
    pub loc: usize,
    pub both: usize,
    pub dupe: usize,
    pub bkg: usize,
    pub miss: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TideReport {
    /// Delta-mAP from fixing only that category's errors.
    pub deltas: ErrorBreakdown,
    /// Raw error counts per category.
    pub counts: ErrorCounts,
    /// mAP after fixing every category at once; 1.0 whenever any ground
    /// truth exists.
    pub map_fixed_all: Option<f64>,
}

/// One classified false positive.
#[derive(Clone, Copy, Debug)]
struct FpError {
    frame: usize,
    pred: usize,
    kind: ErrorKind,
}

fn classify_fps(
    preds: &[Vec<Detection>],
    gts: &[Vec<TruthObject>],
    matches: &[FrameMatch],
    tf: f64,
    tb: f64,
) -> Vec<FpError> {
    let mut errors = Vec::new();
    for f in 0..preds.len() {
        for (p, pred) in preds[f].iter().enumerate() {
            if matches[f].outcomes[p].is_tp() {
                continue;
            }
            let mut best_same = 0.0f64;
            let mut best_diff = 0.0f64;
            for gt in &gts[f] {
                let v = iou(&pred.bbox, &gt.bbox);
                if gt.label == pred.label {
                    best_same = best_same.max(v);
                } else {
                    best_diff = best_diff.max(v);
                }
            }
            let kind = if best_diff >= tf {
                ErrorKind::Cls
            } else if best_same >= tb && best_same < tf {
                ErrorKind::Loc
            } else if best_diff >= tb && best_diff < tf {
                ErrorKind::Both
            } else if best_same >= tf {
                ErrorKind::Dupe
            } else {
                ErrorKind::Bkg
            };
            errors.push(FpError { frame: f, pred: p, kind });
        }
    }
    errors
}

/// Oracle-fix decisions keyed by `(frame, pred)`.
type FixFates = BTreeMap<(usize, usize), RecordFate>;
/// Ground truths claimed by a fix, keyed by `(frame, gt)`.
type ClaimedGts = HashSet<(usize, usize)>;

/// For the given error kinds, decide the fate of each classified FP: claim
/// an unmatched ground truth (becoming a TP of that ground truth's class) or
/// be suppressed. Claims are granted in score order and consume the ground
/// truth, so a fix never manufactures duplicates.
fn compute_claims(
    preds: &[Vec<Detection>],
    gts: &[Vec<TruthObject>],
    matches: &[FrameMatch],
    errors: &[FpError],
    kinds: &[ErrorKind],
    tf: f64,
    tb: f64,
) -> (FixFates, ClaimedGts) {
    let mut fates = FixFates::new();
    let mut claimed = ClaimedGts::new();

    for f in 0..preds.len() {
        let mut frame_errors: Vec<&FpError> = errors
            .iter()
            .filter(|e| e.frame == f && kinds.contains(&e.kind))
            .collect();
        frame_errors.sort_by(|a, b| {
            preds[f][b.pred]
                .score
                .partial_cmp(&preds[f][a.pred].score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.pred.cmp(&b.pred))
        });

        for error in frame_errors {
            let pred = &preds[f][error.pred];
            let candidate = match error.kind {
                ErrorKind::Dupe | ErrorKind::Bkg | ErrorKind::Miss => None,
                ErrorKind::Cls => best_claimable(pred, &gts[f], &matches[f], &claimed, f, |gt, v| {
                    gt.label != pred.label && v >= tf
                }),
                ErrorKind::Loc => best_claimable(pred, &gts[f], &matches[f], &claimed, f, |gt, v| {
                    gt.label == pred.label && v >= tb && v < tf
                }),
                ErrorKind::Both => best_claimable(pred, &gts[f], &matches[f], &claimed, f, |gt, v| {
                    gt.label != pred.label && v >= tb && v < tf
                }),
            };
            match candidate {
                Some(g) => {
                    claimed.insert((f, g));
                    fates.insert((f, error.pred), RecordFate::MoveTp { class: gts[f][g].label });
                }
                None => {
                    fates.insert((f, error.pred), RecordFate::Drop);
                }
            }
        }
    }
    (fates, claimed)
}

fn best_claimable(
    pred: &Detection,
    gts: &[TruthObject],
    frame_match: &FrameMatch,
    claimed: &HashSet<(usize, usize)>,
    frame: usize,
    qualifies: impl Fn(&TruthObject, f64) -> bool,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (g, gt) in gts.iter().enumerate() {
        if frame_match.gt_matched[g] || claimed.contains(&(frame, g)) {
            continue;
        }
        let v = iou(&pred.bbox, &gt.bbox);
        if qualifies(gt, v) && best.is_none_or(|(_, b)| v > b) {
            best = Some((g, v));
        }
    }
    best.map(|(g, _)| g)
}

/// The six-way error breakdown at thresholds `tf` (foreground) and `tb`
/// (background), `tb < tf`.
pub fn tide_breakdown(
    preds: &[Vec<Detection>],
    gts: &[Vec<TruthObject>],
    tf: f64,
    tb: f64,
) -> TideReport {
    assert!(tb < tf, "background threshold must be below foreground");
    assert_eq!(preds.len(), gts.len(), "frames must align");

    let matches: Vec<FrameMatch> =
        preds.iter().zip(gts).map(|(p, g)| match_frame(p, g, tf)).collect();
    let base =
        summarize(preds, gts, &matches, ApInterpolation::AllPoint, |_, _| RecordFate::Keep, |_, _| {
            false
        });
    let errors = classify_fps(preds, gts, &matches, tf, tb);

    let mut counts = ErrorCounts::default();
    for e in &errors {
        match e.kind {
            ErrorKind::Cls => counts.cls += 1,
            ErrorKind::Loc => counts.loc += 1,
            ErrorKind::Both => counts.both += 1,
            ErrorKind::Dupe => counts.dupe += 1,
            ErrorKind::Bkg => counts.bkg += 1,
            ErrorKind::Miss => {}
        }
    }

    // Ground truths neither matched nor reachable by any oracle fix are the
    // missed detections.
    let fixable = [ErrorKind::Cls, ErrorKind::Loc, ErrorKind::Both];
    let (_, covered) = compute_claims(preds, gts, &matches, &errors, &fixable, tf, tb);
    let mut missed: HashSet<(usize, usize)> = HashSet::new();
    for (f, m) in matches.iter().enumerate() {
        for g in m.unmatched_gts() {
            if !covered.contains(&(f, g)) {
                missed.insert((f, g));
            }
        }
    }
    counts.miss = missed.len();

    let base_map = match base.map {
        Some(m) => m,
        None => {
            // No ground truth anywhere: nothing to fix.
            return TideReport { deltas: ErrorBreakdown::default(), counts, map_fixed_all: None };
        }
    };

    let map_with_fix = |kinds: &[ErrorKind], drop_missed: bool| -> f64 {
        let (fates, _) = compute_claims(preds, gts, &matches, &errors, kinds, tf, tb);
        let summary = summarize(
            preds,
            gts,
            &matches,
            ApInterpolation::AllPoint,
            |f, p| fates.get(&(f, p)).copied().unwrap_or(RecordFate::Keep),
            |f, g| drop_missed && missed.contains(&(f, g)),
        );
        summary.map.unwrap_or(1.0)
    };

    let deltas = ErrorBreakdown {
        cls: map_with_fix(&[ErrorKind::Cls], false) - base_map,
        loc: map_with_fix(&[ErrorKind::Loc], false) - base_map,
        both: map_with_fix(&[ErrorKind::Both], false) - base_map,
        dupe: map_with_fix(&[ErrorKind::Dupe], false) - base_map,
        bkg: map_with_fix(&[ErrorKind::Bkg], false) - base_map,
        miss: map_with_fix(&[], true) - base_map,
    };

    let all_kinds =
        [ErrorKind::Cls, ErrorKind::Loc, ErrorKind::Both, ErrorKind::Dupe, ErrorKind::Bkg];
    let map_fixed_all = Some(map_with_fix(&all_kinds, true));

    TideReport { deltas, counts, map_fixed_all }
}

/// Per-run evaluation output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// mAP@0.5; `None` when the run has no ground truth at all.
    pub map_05: Option<f64>,
    pub per_class_ap: BTreeMap<u32, f64>,
    pub error_breakdown: ErrorBreakdown,
    pub error_counts: ErrorCounts,
    pub counts: BTreeMap<u32, ClassCounts>,
    pub serving_p50_ms: f64,
    pub serving_p95_ms: f64,
    pub throughput_rps: f64,
}

impl MetricsReport {
    /// Full evaluation of a run's per-frame predictions.
    pub fn evaluate(preds: &[Vec<Detection>], gts: &[Vec<TruthObject>], iou_thr: f64) -> Self {
        let ap = mean_ap(preds, gts, iou_thr);
        let tide = tide_breakdown(preds, gts, TIDE_FOREGROUND_IOU, TIDE_BACKGROUND_IOU);
        MetricsReport {
            map_05: ap.map,
            per_class_ap: ap.per_class_ap,
            error_breakdown: tide.deltas,
            error_counts: tide.counts,
            counts: ap.counts,
            serving_p50_ms: 0.0,
            serving_p95_ms: 0.0,
            throughput_rps: 0.0,
        }
    }

    pub fn csv_header() -> &'static str {
        "run_id,mode,k,m,map05,cls,loc,both,dupe,bkg,miss,p50_ms,p95_ms,throughput_rps"
    }

    pub fn csv_row(&self, run_id: &str, mode: &str, k: u64, m: u64) -> String {
        let map = self.map_05.map(|v| format!("{v:.6}")).unwrap_or_default();
        format!(
            "{run_id},{mode},{k},{m},{map},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.error_breakdown.cls,
            self.error_breakdown.loc,
            self.error_breakdown.both,
            self.error_breakdown.dupe,
            self.error_breakdown.bkg,
            self.error_breakdown.miss,
            self.serving_p50_ms,
            self.serving_p95_ms,
            self.throughput_rps
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BBox, Source};

    fn det(label: u32, bbox: BBox, score: f64) -> Detection {
        Detection { label, bbox, score, source: Source::Edge, frame_index: 0 }
    }

    fn gt(label: u32, bbox: BBox) -> TruthObject {
        TruthObject { identity: 0, label, bbox }
    }

    fn unit_box(cx: f64) -> BBox {
        BBox::new(cx, 10.0, 10.0, 10.0)
    }

    #[test]
    fn exact_prediction_is_tp() {
        let gts = vec![gt(0, unit_box(10.0))];
        let preds = vec![det(0, unit_box(10.0), 0.9)];
        let m = match_frame(&preds, &gts, 0.5);
        assert!(m.outcomes[0].is_tp());
        assert!(m.unmatched_gts().is_empty());
    }

    #[test]
    fn duplicate_prediction_is_fp() {
        let gts = vec![gt(0, unit_box(10.0))];
        let preds = vec![det(0, unit_box(10.0), 0.9), det(0, unit_box(10.0), 0.8)];
        let m = match_frame(&preds, &gts, 0.5);
        assert!(m.outcomes[0].is_tp());
        assert!(!m.outcomes[1].is_tp());
    }

    #[test]
    fn below_threshold_is_fp() {
        let gts = vec![gt(0, unit_box(10.0))];
        // iou 0.4: overlap solves to x shift of 30/7
        let preds = vec![det(0, unit_box(10.0 + 30.0 / 7.0), 0.9)];
        let m = match_frame(&preds, &gts, 0.5);
        assert!(!m.outcomes[0].is_tp());
        assert_eq!(m.unmatched_gts(), vec![0]);
    }

    #[test]
    fn ap_tp_then_fp_is_one() {
        let ap = average_precision(&[(0.9, true), (0.8, false)], 1, ApInterpolation::AllPoint);
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn ap_fp_then_tp_is_half() {
        let ap = average_precision(&[(0.95, false), (0.9, true)], 1, ApInterpolation::AllPoint);
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn ap_no_predictions_is_zero() {
        let ap = average_precision(&[], 3, ApInterpolation::AllPoint);
        assert_eq!(ap, 0.0);
    }

    #[test]
    fn eleven_point_interpolation_differs_at_partial_recall() {
        // one TP out of two ground truths: recall tops out at 0.5
        let records = [(0.9, true)];
        let all_point = average_precision(&records, 2, ApInterpolation::AllPoint);
        assert_eq!(all_point, 0.5);
        // recalls 0.0..=0.5 see precision 1, the other five points see 0
        let eleven = average_precision(&records, 2, ApInterpolation::ElevenPoint);
        assert!((eleven - 6.0 / 11.0).abs() < 1e-12, "{eleven}");
    }

    #[test]
    fn mean_ap_perfect_predictions() {
        let gts = vec![
            vec![gt(0, unit_box(10.0)), gt(1, unit_box(30.0))],
            vec![gt(0, unit_box(50.0))],
        ];
        let preds = vec![
            vec![det(0, unit_box(10.0), 0.9), det(1, unit_box(30.0), 0.8)],
            vec![det(0, unit_box(50.0), 0.95)],
        ];
        let summary = mean_ap(&preds, &gts, 0.5);
        assert_eq!(summary.map, Some(1.0));
    }

    #[test]
    fn mean_ap_half_when_one_class_absent() {
        let gts = vec![vec![gt(0, unit_box(10.0)), gt(1, unit_box(30.0))]];
        let preds = vec![vec![det(0, unit_box(10.0), 0.9)]];
        let summary = mean_ap(&preds, &gts, 0.5);
        assert_eq!(summary.map, Some(0.5));
        assert_eq!(summary.per_class_ap[&0], 1.0);
        assert_eq!(summary.per_class_ap[&1], 0.0);
    }

    #[test]
    fn mean_ap_empty_predictions_is_zero() {
        let gts = vec![vec![gt(0, unit_box(10.0))]];
        let preds = vec![vec![]];
        assert_eq!(mean_ap(&preds, &gts, 0.5).map, Some(0.0));
    }

    #[test]
    fn mean_ap_without_ground_truth_is_undefined() {
        let gts: Vec<Vec<TruthObject>> = vec![vec![], vec![]];
        let preds = vec![vec![det(0, unit_box(10.0), 0.9)], vec![]];
        assert_eq!(mean_ap(&preds, &gts, 0.5).map, None);
    }

    #[test]
    fn class_without_gt_is_excluded_not_zero() {
        // class 5 has predictions but no ground truth; class 0 is perfect
        let gts = vec![vec![gt(0, unit_box(10.0))]];
        let preds = vec![vec![det(0, unit_box(10.0), 0.9), det(5, unit_box(90.0), 0.99)]];
        let summary = mean_ap(&preds, &gts, 0.5);
        assert_eq!(summary.map, Some(1.0));
        assert!(!summary.per_class_ap.contains_key(&5));
    }

    #[test]
    fn tide_perfect_predictions_have_zero_deltas() {
        let gts = vec![vec![gt(0, unit_box(10.0))]];
        let preds = vec![vec![det(0, unit_box(10.0), 0.9)]];
        let report = tide_breakdown(&preds, &gts, 0.5, 0.1);
        assert_eq!(report.deltas, ErrorBreakdown::default());
        assert_eq!(report.map_fixed_all, Some(1.0));
    }

    #[test]
    fn tide_single_label_swap_is_cls() {
        let gts = vec![vec![gt(0, unit_box(10.0))]];
        let preds = vec![vec![det(1, unit_box(10.0), 0.9)]];
        let report = tide_breakdown(&preds, &gts, 0.5, 0.1);
        assert!(report.deltas.cls > 0.0, "cls delta {}", report.deltas.cls);
        assert_eq!(report.deltas.loc, 0.0);
        assert_eq!(report.deltas.both, 0.0);
        assert_eq!(report.deltas.dupe, 0.0);
        assert_eq!(report.deltas.bkg, 0.0);
        assert_eq!(report.counts.cls, 1);
        // fixing the label fully repairs this instance
        assert_eq!(report.map_fixed_all, Some(1.0));
    }

    #[test]
    fn tide_pure_miss() {
        let gts = vec![vec![gt(0, unit_box(10.0))]];
        let preds: Vec<Vec<Detection>> = vec![vec![]];
        let report = tide_breakdown(&preds, &gts, 0.5, 0.1);
        assert!(report.deltas.miss > 0.0);
        assert_eq!(report.counts.miss, 1);
        assert_eq!(report.deltas.cls, 0.0);
        assert_eq!(report.map_fixed_all, Some(1.0));
    }

    #[test]
    fn tide_duplicate_and_background() {
        let gts = vec![vec![gt(0, unit_box(10.0))]];
        let preds = vec![vec![
            det(0, unit_box(10.0), 0.9),  // TP
            det(0, unit_box(10.0), 0.8),  // duplicate
            det(0, unit_box(500.0), 0.7), // background
        ]];
        let report = tide_breakdown(&preds, &gts, 0.5, 0.1);
        assert_eq!(report.counts.dupe, 1);
        assert_eq!(report.counts.bkg, 1);
        assert!(report.deltas.dupe >= 0.0);
        assert!(report.deltas.bkg >= 0.0);
        assert_eq!(report.map_fixed_all, Some(1.0));
    }

    #[test]
    fn tide_localization_error() {
        // same class, iou between tb and tf
        let gts = vec![vec![gt(0, unit_box(10.0))]];
        let preds = vec![vec![det(0, unit_box(16.0), 0.9)]]; // iou = 4/16 = 0.25
        let report = tide_breakdown(&preds, &gts, 0.5, 0.1);
        assert_eq!(report.counts.loc, 1);
        assert!(report.deltas.loc > 0.0);
        assert_eq!(report.counts.miss, 0);
        assert_eq!(report.map_fixed_all, Some(1.0));
    }

    #[test]
    fn csv_row_parses_back() {
        let gts = vec![vec![gt(0, unit_box(10.0))]];
        let preds = vec![vec![det(0, unit_box(10.0), 0.9)]];
        let report = MetricsReport::evaluate(&preds, &gts, 0.5);
        let row = report.csv_row("run0", "edge-cloud", 5, 30);
        assert_eq!(row.split(',').count(), MetricsReport::csv_header().split(',').count());
        let map: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(map, 1.0);
    }
}
