//! Network emulation: serving-time sampling from parametric distributions or
//! replayed traces.
//!
//! Serving time for one cloud round trip is uplink transfer + inference +
//! downlink transfer. Bandwidth is modeled as pure serialization delay on
//! the frame payload (annotations going back are small and use a fixed 2 KB
//! payload); link queueing is subsumed by the distribution's tail.

use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Annotation payload for the response direction, KB.
pub const DOWNLINK_PAYLOAD_KB: f64 = 2.0;

const PRESETS_JSON: &str = include_str!("../presets/network.json");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
}

/// Per-direction delay model plus link parameters.
///
/// `preset` profiles name an entry of the bundled calibration table
/// (`wifi30`, `wifi50`, `lte`) and resolve to one of the concrete kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkProfile {
    Constant {
        uplink_ms: f64,
        downlink_ms: f64,
        bandwidth_mbps: f64,
        payload_kb: f64,
    },
    LogNormal {
        uplink: LogNormalParams,
        downlink: LogNormalParams,
        bandwidth_mbps: f64,
        payload_kb: f64,
    },
    Trace {
        uplink_trace: PathBuf,
        downlink_trace: PathBuf,
        bandwidth_mbps: f64,
        payload_kb: f64,
    },
    Preset {
        name: String,
    },
}

impl NetworkProfile {
    /// The null network: zero delay, zero payload.
    pub fn zero() -> Self {
        NetworkProfile::Constant {
            uplink_ms: 0.0,
            downlink_ms: 0.0,
            bandwidth_mbps: 24.0,
            payload_kb: 0.0,
        }
    }

    /// Look up a bundled calibration preset by name.
    pub fn preset(name: &str) -> Result<NetworkProfile, Error> {
        let table: std::collections::BTreeMap<String, NetworkProfile> =
            serde_json::from_str(PRESETS_JSON).expect("bundled presets parse");
        table
            .get(name)
            .cloned()
            .ok_or_else(|| {
                let known: Vec<&String> = table.keys().collect();
                Error::config(format!("unknown network preset {name:?}; known: {known:?}"))
            })
    }

    /// Replace a `Preset` reference with its concrete profile.
    pub fn resolve(&self) -> Result<NetworkProfile, Error> {
        match self {
            NetworkProfile::Preset { name } => NetworkProfile::preset(name),
            other => Ok(other.clone()),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let (bw, payload) = match self.resolve()? {
            NetworkProfile::Constant { uplink_ms, downlink_ms, bandwidth_mbps, payload_kb } => {
                if uplink_ms < 0.0 || downlink_ms < 0.0 {
                    return Err(Error::config("network delays must be non-negative"));
                }
                (bandwidth_mbps, payload_kb)
            }
            NetworkProfile::LogNormal { uplink, downlink, bandwidth_mbps, payload_kb } => {
                if uplink.sigma < 0.0 || downlink.sigma < 0.0 {
                    return Err(Error::config("network sigma must be non-negative"));
                }
                (bandwidth_mbps, payload_kb)
            }
            NetworkProfile::Trace { bandwidth_mbps, payload_kb, .. } => (bandwidth_mbps, payload_kb),
            NetworkProfile::Preset { .. } => unreachable!("resolved above"),
        };
        if !bw.is_finite() || bw <= 0.0 {
            return Err(Error::config("network.bandwidth_mbps must be positive"));
        }
        if payload < 0.0 {
            return Err(Error::config("network.payload_kb must be non-negative"));
        }
        Ok(())
    }
}

enum LinkSampler {
    Constant(f64),
    LogNormal(rand_distr::LogNormal<f64>),
    Trace { values: Vec<f64>, cursor: usize },
}

impl LinkSampler {
    fn sample(&mut self, rng: &mut StdRng) -> f64 {
        match self {
            LinkSampler::Constant(ms) => *ms,
            LinkSampler::LogNormal(d) => d.sample(rng),
            LinkSampler::Trace { values, cursor } => {
                let v = values[*cursor];
                *cursor = (*cursor + 1) % values.len();
                v
            }
        }
    }
}

fn load_delay_trace(path: &Path) -> Result<Vec<f64>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Parse { line: i + 1, message: format!("bad delay value {line:?}") })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::config(format!("delay trace {} is empty", path.display())));
    }
    Ok(values)
}

/// Runtime sampler for a [`NetworkProfile`]. Holds the replay cursor for
/// trace profiles, so it must be confined to one event loop.
pub struct NetworkModel {
    up: LinkSampler,
    down: LinkSampler,
    serialization_up_ms: f64,
    serialization_down_ms: f64,
}

impl NetworkModel {
    pub fn from_profile(profile: &NetworkProfile) -> Result<NetworkModel, Error> {
        let profile = profile.resolve()?;
        profile.validate()?;
        // Annotations use a fixed small payload; a zero-payload profile
        // stays a true null network.
        let ser = |bw: f64, payload_kb: f64| -> (f64, f64) {
            let down = if payload_kb > 0.0 { DOWNLINK_PAYLOAD_KB } else { 0.0 };
            (payload_kb * 8.0 / bw, down * 8.0 / bw)
        };
        let model = match &profile {
            NetworkProfile::Constant { uplink_ms, downlink_ms, bandwidth_mbps, payload_kb } => {
                let (up_ms, down_ms) = ser(*bandwidth_mbps, *payload_kb);
                NetworkModel {
                    up: LinkSampler::Constant(*uplink_ms),
                    down: LinkSampler::Constant(*downlink_ms),
                    serialization_up_ms: up_ms,
                    serialization_down_ms: down_ms,
                }
            }
            NetworkProfile::LogNormal { uplink, downlink, bandwidth_mbps, payload_kb } => {
                let (up_ms, down_ms) = ser(*bandwidth_mbps, *payload_kb);
                NetworkModel {
                    up: LinkSampler::LogNormal(
                        rand_distr::LogNormal::new(uplink.mu, uplink.sigma)
                            .map_err(|e| Error::config(format!("uplink lognormal: {e}")))?,
                    ),
                    down: LinkSampler::LogNormal(
                        rand_distr::LogNormal::new(downlink.mu, downlink.sigma)
                            .map_err(|e| Error::config(format!("downlink lognormal: {e}")))?,
                    ),
                    serialization_up_ms: up_ms,
                    serialization_down_ms: down_ms,
                }
            }
            NetworkProfile::Trace { uplink_trace, downlink_trace, .. } => NetworkModel {
                up: LinkSampler::Trace { values: load_delay_trace(uplink_trace)?, cursor: 0 },
                down: LinkSampler::Trace { values: load_delay_trace(downlink_trace)?, cursor: 0 },
                serialization_up_ms: 0.0,
                serialization_down_ms: 0.0,
            },
            NetworkProfile::Preset { .. } => unreachable!("resolved above"),
        };
        Ok(model)
    }

    /// Frame upload time, ms.
    pub fn sample_uplink(&mut self, rng: &mut StdRng) -> f64 {
        self.up.sample(rng) + self.serialization_up_ms
    }

    /// Annotation download time, ms.
    pub fn sample_downlink(&mut self, rng: &mut StdRng) -> f64 {
        self.down.sample(rng) + self.serialization_down_ms
    }

    /// Full round trip: uplink + inference + downlink.
    pub fn serving_time(&mut self, server_latency_ms: f64, rng: &mut StdRng) -> f64 {
        self.sample_uplink(rng) + server_latency_ms + self.sample_downlink(rng)
    }
}
