//! The batching model server, in two interchangeable forms: a deterministic
//! discrete-event queueing simulation for scalability studies, and a real
//! wire service implementing the identical dispatch policy. The simulation
//! is the correctness oracle for the service's dispatch logic.
//!
//! Dispatch rule: an idle worker forms a batch when either `batch_size`
//! requests are waiting or the oldest waiting request has waited
//! `max_delay_ms`. Batch parameters are fixed per run (no dynamic batching).

mod sim;
mod wire;

pub use sim::{client_arrivals, poisson_arrivals, run_server_sim, BatchRecord, CompletionRecord, ServerSimResult};
pub use wire::{load_test, serve, RunningServer, WireClient, WireRequest, WireResponse};

use serde::{Deserialize, Serialize};

use crate::error::Error;

const PRESETS_JSON: &str = include_str!("../../presets/server.json");

/// Worker-pool and batching parameters.
///
/// Batch service time is affine in the batch size:
/// `batch_base_ms + batch_per_item_ms * n`, a stand-in for GPU batch
/// throughput.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServerConfig {
    pub num_workers: usize,
    pub batch_size: usize,
    pub max_delay_ms: f64,
    pub batch_base_ms: f64,
    pub batch_per_item_ms: f64,
}

// Mirrors the bundled "v100-like" preset; kept literal because serde's
// struct-level default runs while the preset table itself deserializes.
impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            num_workers: 1,
            batch_size: 1,
            max_delay_ms: 0.0,
            batch_base_ms: 40.0,
            batch_per_item_ms: 15.0,
        }
    }
}

impl ServerConfig {
    pub fn preset(name: &str) -> Result<ServerConfig, Error> {
        let table: std::collections::BTreeMap<String, ServerConfig> =
            serde_json::from_str(PRESETS_JSON).expect("bundled presets parse");
        table.get(name).cloned().ok_or_else(|| {
            let known: Vec<&String> = table.keys().collect();
            Error::config(format!("unknown server preset {name:?}; known: {known:?}"))
        })
    }

    pub fn batch_service_ms(&self, n: usize) -> f64 {
        self.batch_base_ms + self.batch_per_item_ms * n as f64
    }

    /// Completed requests per second when every batch is full and all
    /// workers stay busy.
    pub fn saturation_rps(&self) -> f64 {
        self.num_workers as f64 * self.batch_size as f64
            / self.batch_service_ms(self.batch_size)
            * 1000.0
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.num_workers == 0 {
            return Err(Error::config("server.num_workers must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("server.batch_size must be >= 1"));
        }
        if self.max_delay_ms < 0.0 {
            return Err(Error::config("server.max_delay_ms must be non-negative"));
        }
        if self.batch_base_ms < 0.0 || self.batch_per_item_ms < 0.0 {
            return Err(Error::config("server service-time coefficients must be non-negative"));
        }
        if self.batch_service_ms(1) <= 0.0 {
            return Err(Error::config("server.batch_service_ms(1) must be positive"));
        }
        Ok(())
    }
}

/// Aggregate results of a server run (simulated or live-measured).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerStats {
    pub throughput_rps: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub queue_len_max: usize,
    pub completed: usize,
    pub dropped: usize,
    pub submitted: usize,
}

impl ServerStats {
    pub fn from_response_times(
        mut response_times_ms: Vec<f64>,
        dropped: usize,
        queue_len_max: usize,
        duration_ms: f64,
    ) -> ServerStats {
        response_times_ms.sort_by(|a, b| a.total_cmp(b));
        let completed = response_times_ms.len();
        ServerStats {
            throughput_rps: if duration_ms > 0.0 {
                completed as f64 / (duration_ms / 1000.0)
            } else {
                0.0
            },
            p50_ms: crate::stats::percentile(&response_times_ms, 50.0),
            p95_ms: crate::stats::percentile(&response_times_ms, 95.0),
            queue_len_max,
            completed,
            dropped,
            submitted: completed + dropped,
        }
    }

    /// Header of the CSV emitted by the benchmarking commands.
    pub fn csv_header() -> &'static str {
        "n_clients,throughput_rps,p50_ms,p95_ms,queue_len_max,completed,dropped,submitted"
    }

    pub fn csv_row(&self, n_clients: usize) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{},{},{},{}",
            n_clients,
            self.throughput_rps,
            self.p50_ms,
            self.p95_ms,
            self.queue_len_max,
            self.completed,
            self.dropped,
            self.submitted
        )
    }
}
