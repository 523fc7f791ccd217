//! Discrete-event simulation of the batching worker pool.

use std::collections::VecDeque;

use rand::rngs::StdRng;
use rand::Rng;

use super::{ServerConfig, ServerStats};

/// Slack when comparing simulated times, to absorb float round-off in
/// accumulated deadlines. Times are milliseconds, so this is sub-picosecond.
const TIME_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct BatchRecord {
    pub batch_id: u64,
    pub dispatch_ms: f64,
    pub completion_ms: f64,
    pub request_ids: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletionRecord {
    pub request_id: u64,
    pub arrival_ms: f64,
    pub completion_ms: f64,
    pub batch_id: u64,
}

#[derive(Clone, Debug)]
pub struct ServerSimResult {
    /// Per-request completions, in completion order (ties keep batch order).
    pub completions: Vec<CompletionRecord>,
    /// Batches in dispatch order.
    pub batches: Vec<BatchRecord>,
    pub stats: ServerStats,
}

/// Simulate the server over a time-sorted arrival schedule.
///
/// Requests still queued when the horizon passes are counted dropped;
/// batches already in service run to completion.
pub fn run_server_sim(
    arrivals: &[(f64, u64)],
    config: &ServerConfig,
    horizon_ms: f64,
) -> ServerSimResult {
    debug_assert!(arrivals.windows(2).all(|w| w[0].0 <= w[1].0), "arrivals must be time-sorted");

    let submitted = arrivals.len();
    let mut dropped_late = 0usize;
    let in_horizon: Vec<(f64, u64)> = arrivals
        .iter()
        .filter(|(t, _)| {
            let ok = *t <= horizon_ms;
            if !ok {
                dropped_late += 1;
            }
            ok
        })
        .copied()
        .collect();

    let mut queue: VecDeque<(f64, u64)> = VecDeque::new();
    let mut busy: Vec<(f64, BatchRecord)> = Vec::new(); // completion time + batch
    let mut idle = config.num_workers;
    let mut next_arrival = 0usize;
    let mut t = 0.0f64;
    let mut next_batch_id = 0u64;
    let mut queue_len_max = 0usize;

    let mut batches: Vec<BatchRecord> = Vec::new();
    let mut completions: Vec<CompletionRecord> = Vec::new();

    loop {
        // Dispatch whatever the policy allows at the current instant.
        while idle > 0 && !queue.is_empty() && t <= horizon_ms + TIME_EPS {
            let oldest = queue.front().expect("non-empty").0;
            let full = queue.len() >= config.batch_size;
            let stale = t - oldest >= config.max_delay_ms - TIME_EPS;
            if !(full || stale) {
                break;
            }
            let n = config.batch_size.min(queue.len());
            let members: Vec<(f64, u64)> = queue.drain(..n).collect();
            let completion = t + config.batch_service_ms(n);
            let record = BatchRecord {
                batch_id: next_batch_id,
                dispatch_ms: t,
                completion_ms: completion,
                request_ids: members.iter().map(|&(_, id)| id).collect(),
            };
            next_batch_id += 1;
            idle -= 1;
            for (arrival_ms, request_id) in members {
                completions.push(CompletionRecord {
                    request_id,
                    arrival_ms,
                    completion_ms: completion,
                    batch_id: record.batch_id,
                });
            }
            batches.push(record.clone());
            busy.push((completion, record));
        }

        // Earliest next event: a completion, an arrival, or the oldest
        // queued request hitting max_delay while a worker sits idle.
        let mut next_t = f64::INFINITY;
        if let Some(&(at, _)) = in_horizon.get(next_arrival) {
            next_t = next_t.min(at);
        }
        for (completion, _) in &busy {
            next_t = next_t.min(*completion);
        }
        if idle > 0 {
            if let Some(&(oldest, _)) = queue.front() {
                if t <= horizon_ms + TIME_EPS {
                    next_t = next_t.min(oldest + config.max_delay_ms);
                }
            }
        }
        if !next_t.is_finite() {
            break;
        }
        t = next_t;

        // Completions free workers before arrivals at the same instant.
        let mut i = 0;
        while i < busy.len() {
            if busy[i].0 <= t + TIME_EPS {
                busy.swap_remove(i);
                idle += 1;
            } else {
                i += 1;
            }
        }
        while let Some(&(at, id)) = in_horizon.get(next_arrival) {
            if at <= t + TIME_EPS {
                queue.push_back((at, id));
                next_arrival += 1;
            } else {
                break;
            }
        }
        queue_len_max = queue_len_max.max(queue.len());

        if t > horizon_ms && busy.is_empty() && next_arrival >= in_horizon.len() {
            break;
        }
    }

    let dropped = dropped_late + queue.len();
    let response_times: Vec<f64> =
        completions.iter().map(|c| c.completion_ms - c.arrival_ms).collect();
    completions.sort_by(|a, b| a.completion_ms.total_cmp(&b.completion_ms).then(a.batch_id.cmp(&b.batch_id)));

    let stats = ServerStats::from_response_times(response_times, dropped, queue_len_max, horizon_ms);
    debug_assert_eq!(stats.completed + stats.dropped, submitted);

    ServerSimResult { completions, batches, stats }
}

/// A Poisson arrival schedule at `lambda` requests per second.
pub fn poisson_arrivals(lambda_per_sec: f64, horizon_ms: f64, rng: &mut StdRng) -> Vec<(f64, u64)> {
    let mut arrivals = Vec::new();
    if lambda_per_sec <= 0.0 {
        return arrivals;
    }
    let mean_gap_ms = 1000.0 / lambda_per_sec;
    let mut t = 0.0f64;
    let mut id = 0u64;
    loop {
        let u: f64 = rng.random();
        t += -mean_gap_ms * (1.0 - u).ln();
        if t > horizon_ms {
            break;
        }
        arrivals.push((t, id));
        id += 1;
    }
    arrivals
}

/// The schedule produced by `n_clients` devices each issuing one request per
/// `period_ms`, joining at `ramp_per_sec` clients per second with a random
/// phase inside their first period.
pub fn client_arrivals(
    n_clients: usize,
    period_ms: f64,
    horizon_ms: f64,
    ramp_per_sec: f64,
    rng: &mut StdRng,
) -> Vec<(f64, u64)> {
    let mut times: Vec<f64> = Vec::new();
    for i in 0..n_clients {
        let ramp = if ramp_per_sec > 0.0 { i as f64 / ramp_per_sec * 1000.0 } else { 0.0 };
        let phase: f64 = rng.random_range(0.0..period_ms);
        let mut t = ramp + phase;
        while t <= horizon_ms {
            times.push(t);
            t += period_ms;
        }
    }
    times.sort_by(|a, b| a.total_cmp(b));
    times.into_iter().enumerate().map(|(i, t)| (t, i as u64)).collect()
}
