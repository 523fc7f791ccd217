//! Domain types shared by every other module.
//!
//! All types are immutable value types; they can be cloned, shared and sent
//! between tasks freely.

use serde::{Deserialize, Serialize};

/// Axis-aligned bounding box, stored center-based: `(cx, cy, w, h)` in
/// real-valued pixels. Origin is the top-left corner, y increasing downward.
/// Corner coordinates are derived views, never stored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        BBox { cx, cy, w, h }
    }

    pub fn x_min(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn x_max(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn y_min(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn y_max(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.cx, self.cy)
    }

    /// Translate by `(dx, dy)`, keeping the size.
    pub fn shifted(&self, dx: f64, dy: f64) -> BBox {
        BBox { cx: self.cx + dx, cy: self.cy + dy, ..*self }
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0 && self.h > 0.0 && self.cx.is_finite() && self.cy.is_finite()
    }
}

/// Which detector produced a detection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Edge,
    Cloud,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Edge => write!(f, "edge"),
            Source::Cloud => write!(f, "cloud"),
        }
    }
}

/// One detected object: the detector's `(label, box, confidence)` triple plus
/// provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: u32,
    pub bbox: BBox,
    pub score: f64,
    pub source: Source,
    pub frame_index: u64,
}

/// Identifier of a tracked object, unique within one pipeline run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrackId(pub u64);

/// Allocator for fresh track ids. Passing it explicitly keeps fusion a pure,
/// deterministic function.
#[derive(Clone, Debug, Default)]
pub struct TrackIdGen {
    next: u64,
}

impl TrackIdGen {
    pub fn new() -> Self {
        TrackIdGen { next: 0 }
    }

    pub fn next_id(&mut self) -> TrackId {
        let id = TrackId(self.next);
        self.next += 1;
        id
    }
}

/// A detection being carried forward by the tracker: the unit of the
/// pipeline's current list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackedObject {
    pub detection: Detection,
    pub track_id: TrackId,
    /// Source of the detector that last confirmed this object.
    pub last_det_source: Source,
    /// Frames since the last detector confirmation.
    pub age_frames: u32,
}

impl TrackedObject {
    /// A freshly detected object, age zero.
    pub fn fresh(detection: Detection, track_id: TrackId) -> Self {
        let last = detection.source;
        TrackedObject { detection, track_id, last_det_source: last, age_frames: 0 }
    }

    pub fn bbox(&self) -> &BBox {
        &self.detection.bbox
    }

    pub fn label(&self) -> u32 {
        self.detection.label
    }

    pub fn score(&self) -> f64 {
        self.detection.score
    }
}

/// One ground-truth object with a persistent identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthObject {
    pub identity: u64,
    pub label: u32,
    pub bbox: BBox,
}

/// Ground truth for one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub frame_index: u64,
    pub objects: Vec<TruthObject>,
    /// Global pan applied this frame, in pixels.
    pub camera_shift: [f64; 2],
}

impl FrameTruth {
    pub fn empty(frame_index: u64) -> Self {
        FrameTruth { frame_index, objects: Vec::new(), camera_shift: [0.0, 0.0] }
    }

    pub fn find(&self, identity: u64) -> Option<&TruthObject> {
        self.objects.iter().find(|o| o.identity == identity)
    }
}

/// Frame dimensions in pixels, carried by the trace header.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub width: f64,
    pub height: f64,
}

impl FrameBounds {
    pub fn new(width: f64, height: f64) -> Self {
        FrameBounds { width, height }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && x <= self.width && y >= 0.0 && y <= self.height
    }
}
