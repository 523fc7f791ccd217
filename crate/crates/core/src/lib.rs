//! Deterministic simulator and library for edge-cloud streaming
//! object-detection pipelines.
//!
//! A lightweight edge detector and a heavier cloud detector run at
//! configurable frame periods; tracked objects carry decaying confidence
//! scores between detections; delayed cloud responses are fast-tracked
//! forward and merged into the live object list by an IoU-matched fusion
//! step. Real detectors are replaced by statistically parameterized models
//! driven by synthetic ground-truth scenes, so every run is seeded and
//! reproducible.
//!
//! Module map:
//! - [`types`] / [`trace`]: domain types and the line-delimited trace format
//! - [`geometry`]: IoU and non-max suppression
//! - [`assignment`]: maximum-weight rectangular linear sum assignment
//! - [`fusion`]: merging new single-source detections into the current list
//! - [`tracking`]: per-frame propagation with decay, and fast-track replay
//! - [`simworld`]: scene generation, change detection, detector models
//! - [`netem`]: serving-time sampling from parametric or replayed traces
//! - [`server`]: batching model server, as a queueing sim and a wire service
//! - [`pipeline`]: the per-frame orchestration loop
//! - [`eval`]: per-class AP, mAP@0.5 and the six-way error breakdown
//! - [`config`]: full experiment description loaded from JSON

pub mod assignment;
pub mod config;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod netem;
pub mod pipeline;
pub mod rng;
pub mod server;
pub mod simworld;
pub mod stats;
pub mod trace;
pub mod tracking;
pub mod types;

pub use config::ScenarioConfig;
pub use error::Error;
pub use types::{BBox, Detection, FrameBounds, FrameTruth, Source, TrackedObject, TruthObject};
