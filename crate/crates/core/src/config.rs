//! Full experiment description, loaded from JSON.
//!
//! Config files mirror the struct field names exactly; unknown fields are
//! hard errors so sweep typos cannot silently fall back to defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::netem::NetworkProfile;
use crate::server::ServerConfig;
use crate::simworld::{DetectorProfile, SceneParams};
use crate::tracking::TrackerModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scene: SceneParams,
    pub edge_profile: DetectorProfile,
    pub cloud_profile: DetectorProfile,
    /// Edge detection frequency: the detector runs every k-th frame.
    pub k: u64,
    /// Cloud detection frequency: a frame is submitted every m-th frame.
    pub m: u64,
    /// Per-tracker-step confidence decay rate.
    pub delta: f64,
    /// Motion gate threshold; 0 disables motion gating (period-only).
    pub change_threshold: f64,
    /// IoU threshold of the fusion matching.
    pub iou_threshold: f64,
    /// Tracked objects below this score are discarded.
    pub discard_threshold: f64,
    pub network: NetworkProfile,
    pub server: ServerConfig,
    pub seed: u64,
    pub tracker: TrackerModel,
    pub frame_period_ms: f64,
    /// Fast track steps once every this many frames.
    pub fast_track_stride: u64,
    /// Apply decay per covered frame instead of per stride step.
    pub fast_track_per_frame_decay: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scene: SceneParams::default(),
            edge_profile: DetectorProfile::edge_default(),
            cloud_profile: DetectorProfile::cloud_default(),
            k: 5,
            m: 30,
            delta: 0.95,
            change_threshold: 0.0,
            iou_threshold: 0.5,
            discard_threshold: 0.5,
            network: NetworkProfile::Preset { name: "wifi30".into() },
            server: ServerConfig::default(),
            seed: 0,
            tracker: TrackerModel::default(),
            frame_period_ms: 1000.0 / 30.0,
            fast_track_stride: 2,
            fast_track_per_frame_decay: false,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<ScenarioConfig, Error> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ScenarioConfig =
            serde_json::from_str(&text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.scene.validate()?;
        self.edge_profile.validate("edge_profile")?;
        self.cloud_profile.validate("cloud_profile")?;
        self.network.validate()?;
        self.server.validate()?;
        if self.k == 0 || self.m == 0 {
            return Err(Error::config("k and m must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::config("delta must be in [0,1]"));
        }
        if self.change_threshold < 0.0 {
            return Err(Error::config("change_threshold must be non-negative"));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::config("iou_threshold must be in (0,1]"));
        }
        if !(self.discard_threshold > 0.0 && self.discard_threshold < 1.0) {
            return Err(Error::config("discard_threshold must be in (0,1)"));
        }
        if !self.frame_period_ms.is_finite() || self.frame_period_ms <= 0.0 {
            return Err(Error::config("frame_period_ms must be positive"));
        }
        if self.fast_track_stride == 0 {
            return Err(Error::config("fast_track_stride must be >= 1"));
        }
        if self.tracker.drift_sigma < 0.0 {
            return Err(Error::config("tracker.drift_sigma must be non-negative"));
        }
        if !(self.tracker.match_iou > 0.0 && self.tracker.match_iou <= 1.0) {
            return Err(Error::config("tracker.match_iou must be in (0,1]"));
        }
        Ok(())
    }
}
