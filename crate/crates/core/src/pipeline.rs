//! The per-frame orchestration loop: tracking, gated edge detection,
//! asynchronous cloud round trips with fast-track correction, and fusion.
//!
//! The reference execution is a single-threaded deterministic event loop
//! over simulated milliseconds. Frames arrive every `frame_period_ms`; edge
//! detections land after the edge inference latency (typically one frame
//! late); cloud detections come back after the sampled serving time, are
//! fast-tracked to the then-current frame and fused. The recorded prediction
//! for frame f is the current list at the instant frame f+1 arrives, so
//! asynchronous arrivals within the interval count toward that frame.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::Error;
use crate::fusion::fuse;
use crate::netem::NetworkModel;
use crate::rng::substream;
use crate::simworld::{gate, motion_score, simulate_detections};
use crate::trace::Trace;
use crate::tracking::{fast_track, propagate_step};
use crate::types::{Detection, Source, TrackIdGen, TrackedObject};

/// Which detectors the pipeline runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineMode {
    EdgeOnly,
    CloudOnly,
    EdgeCloud,
    /// Edge detector on every frame, zero latency, no tracker interpolation.
    EveryFrameEdge,
}

impl PipelineMode {
    pub const ALL: [PipelineMode; 4] = [
        PipelineMode::EdgeOnly,
        PipelineMode::CloudOnly,
        PipelineMode::EdgeCloud,
        PipelineMode::EveryFrameEdge,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PipelineMode::EdgeOnly => "edge-only",
            PipelineMode::CloudOnly => "cloud-only",
            PipelineMode::EdgeCloud => "edge-cloud",
            PipelineMode::EveryFrameEdge => "ef-edge-det",
        }
    }
}

impl std::fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge-only" => Ok(PipelineMode::EdgeOnly),
            "cloud-only" => Ok(PipelineMode::CloudOnly),
            "edge-cloud" => Ok(PipelineMode::EdgeCloud),
            "ef-edge-det" => Ok(PipelineMode::EveryFrameEdge),
            other => Err(Error::config(format!(
                "unknown mode {other:?}; expected edge-only, cloud-only, edge-cloud or ef-edge-det"
            ))),
        }
    }
}

/// Event kinds in tie-break order: frame arrivals first, then edge
/// detections, then cloud responses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    FrameArrival,
    EdgeDetectionDone,
    CloudResponseArrival,
}

/// One processed event, as written to the event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time_ms: f64,
    pub kind: EventKind,
    pub frame_index: u64,
    /// Current-list size for frame arrivals; detection count for the rest.
    pub count: usize,
}

struct QueuedEvent {
    due_ms: f64,
    frame_index: u64,
    kind: EventKind,
    seq: u64,
    payload: Vec<Detection>,
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key().eq(&other.cmp_key())
    }
}
impl Eq for QueuedEvent {}

impl QueuedEvent {
    fn cmp_key(&self) -> (f64, u64, EventKind, u64) {
        (self.due_ms, self.frame_index, self.kind, self.seq)
    }
}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the earliest event.
        let (ad, af, ak, su) = self.cmp_key();
        let (bd, bf, bk, bu) = other.cmp_key();
        bd.total_cmp(&ad).then_with(|| bf.cmp(&af)).then_with(|| bk.cmp(&ak)).then_with(|| bu.cmp(&su))
    }
}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Everything a pipeline run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    /// Prediction list per frame, aligned with the trace.
    pub predictions: Vec<Vec<TrackedObject>>,
    pub events: Vec<EventRecord>,
    /// Serving time of every cloud submission, in submission order.
    pub serving_samples_ms: Vec<f64>,
    /// Cloud responses that arrived before the trace ended.
    pub cloud_responses_processed: usize,
}

impl RunOutput {
    /// View of the predictions as plain detections, for evaluation.
    pub fn prediction_detections(&self) -> Vec<Vec<Detection>> {
        self.predictions
            .iter()
            .map(|frame| frame.iter().map(|t| t.detection.clone()).collect())
            .collect()
    }
}

/// Run the full pipeline over a trace. Deterministic given
/// (trace, config, mode, seed).
pub fn run_pipeline(
    trace: &Trace,
    config: &ScenarioConfig,
    mode: PipelineMode,
) -> Result<RunOutput, Error> {
    config.validate()?;
    let frames = &trace.frames;
    if frames.is_empty() {
        return Err(Error::config("trace has no frames"));
    }
    for (i, frame) in frames.iter().enumerate() {
        if frame.frame_index != i as u64 {
            return Err(Error::config(format!(
                "pipeline requires contiguous frame indices; found {} at position {i}",
                frame.frame_index
            )));
        }
    }

    let n_frames = frames.len() as u64;
    let period = config.frame_period_ms;
    let end_time = n_frames as f64 * period;
    let bounds = trace.bounds();
    let n_classes = trace.header.n_classes().max(1);

    let mut rng_edge = substream(config.seed, "edge-det");
    let mut rng_edge_lat = substream(config.seed, "edge-lat");
    let mut rng_cloud = substream(config.seed, "cloud-det");
    let mut rng_cloud_lat = substream(config.seed, "cloud-lat");
    let mut rng_net = substream(config.seed, "network");
    let mut rng_track = substream(config.seed, "tracker");
    let mut rng_fast = substream(config.seed, "fast-track");

    let mut network = NetworkModel::from_profile(&config.network)?;

    let mut heap: BinaryHeap<QueuedEvent> = BinaryHeap::new();
    let mut seq = 0u64;
    let push = |heap: &mut BinaryHeap<QueuedEvent>,
                    seq: &mut u64,
                    due_ms: f64,
                    frame_index: u64,
                    kind: EventKind,
                    payload: Vec<Detection>| {
        heap.push(QueuedEvent { due_ms, frame_index, kind, seq: *seq, payload });
        *seq += 1;
    };
    // All frame arrivals plus the virtual end-of-trace arrival that samples
    // the final frame's prediction.
    for f in 0..=n_frames {
        push(&mut heap, &mut seq, f as f64 * period, f, EventKind::FrameArrival, Vec::new());
    }

    let mut current: Vec<TrackedObject> = Vec::new();
    let mut ids = TrackIdGen::new();
    let mut current_frame = 0u64;
    let mut predictions: Vec<Vec<TrackedObject>> = Vec::with_capacity(frames.len());
    let mut events: Vec<EventRecord> = Vec::new();
    let mut serving_samples_ms: Vec<f64> = Vec::new();
    let mut cloud_responses_processed = 0usize;

    // A zero change threshold disables motion gating entirely, so frequency
    // sweeps run on pure-period schedules.
    let fires = |frame: u64, every: u64, motion: f64| -> bool {
        if config.change_threshold <= 0.0 {
            frame.is_multiple_of(every)
        } else {
            gate(frame, every, motion, config.change_threshold)
        }
    };

    while let Some(event) = heap.pop() {
        let t = event.due_ms;
        match event.kind {
            EventKind::FrameArrival => {
                let f = event.frame_index;
                if f > 0 {
                    predictions.push(current.clone());
                }
                events.push(EventRecord {
                    time_ms: t,
                    kind: EventKind::FrameArrival,
                    frame_index: f,
                    count: current.len(),
                });
                if f == n_frames {
                    break;
                }
                current_frame = f;
                let fi = f as usize;

                if f > 0 && mode != PipelineMode::EveryFrameEdge {
                    current = propagate_step(
                        &current,
                        &frames[fi - 1],
                        &frames[fi],
                        &config.tracker,
                        config.delta,
                        config.discard_threshold,
                        bounds,
                        &mut rng_track,
                    );
                }
                let motion = if f == 0 { 0.0 } else { motion_score(&frames[fi - 1], &frames[fi]) };

                match mode {
                    PipelineMode::EveryFrameEdge => {
                        let dets = simulate_detections(
                            &frames[fi],
                            &config.edge_profile,
                            Source::Edge,
                            n_classes,
                            bounds,
                            &mut rng_edge,
                        );
                        events.push(EventRecord {
                            time_ms: t,
                            kind: EventKind::EdgeDetectionDone,
                            frame_index: f,
                            count: dets.len(),
                        });
                        current =
                            dets.into_iter().map(|d| TrackedObject::fresh(d, ids.next_id())).collect();
                    }
                    PipelineMode::EdgeOnly | PipelineMode::EdgeCloud
                        if fires(f, config.k, motion) =>
                    {
                        let dets = simulate_detections(
                            &frames[fi],
                            &config.edge_profile,
                            Source::Edge,
                            n_classes,
                            bounds,
                            &mut rng_edge,
                        );
                        if !dets.is_empty() {
                            let latency = config.edge_profile.latency_model.sample(&mut rng_edge_lat);
                            push(
                                &mut heap,
                                &mut seq,
                                t + latency,
                                f,
                                EventKind::EdgeDetectionDone,
                                dets,
                            );
                        }
                    }
                    _ => {}
                }

                if matches!(mode, PipelineMode::CloudOnly | PipelineMode::EdgeCloud)
                    && fires(f, config.m, motion)
                {
                    let dets = simulate_detections(
                        &frames[fi],
                        &config.cloud_profile,
                        Source::Cloud,
                        n_classes,
                        bounds,
                        &mut rng_cloud,
                    );
                    let server_latency = config.cloud_profile.latency_model.sample(&mut rng_cloud_lat);
                    let serving = network.serving_time(server_latency, &mut rng_net);
                    serving_samples_ms.push(serving);
                    push(&mut heap, &mut seq, t + serving, f, EventKind::CloudResponseArrival, dets);
                }
            }
            EventKind::EdgeDetectionDone => {
                events.push(EventRecord {
                    time_ms: t,
                    kind: EventKind::EdgeDetectionDone,
                    frame_index: event.frame_index,
                    count: event.payload.len(),
                });
                current = fuse(
                    &current,
                    &event.payload,
                    config.iou_threshold,
                    config.delta,
                    &mut ids,
                )
                .expect("edge detections are single-source and non-empty");
            }
            EventKind::CloudResponseArrival => {
                cloud_responses_processed += 1;
                let sent = event.frame_index as usize;
                let now = current_frame as usize;
                let tracked_forward = fast_track(
                    &event.payload,
                    &frames[sent..=now],
                    &config.tracker,
                    config.delta,
                    config.discard_threshold,
                    config.fast_track_stride,
                    config.fast_track_per_frame_decay,
                    bounds,
                    &mut rng_fast,
                );
                events.push(EventRecord {
                    time_ms: t,
                    kind: EventKind::CloudResponseArrival,
                    frame_index: event.frame_index,
                    count: tracked_forward.len(),
                });
                if !tracked_forward.is_empty() {
                    current = fuse(
                        &current,
                        &tracked_forward,
                        config.iou_threshold,
                        config.delta,
                        &mut ids,
                    )
                    .expect("fast-tracked detections are single-source and non-empty");
                }
            }
        }
        debug_assert!(t <= end_time + 1e-9);
    }

    debug_assert_eq!(predictions.len(), frames.len());
    Ok(RunOutput { predictions, events, serving_samples_ms, cloud_responses_processed })
}
