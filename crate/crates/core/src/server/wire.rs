//! The model server as a real service: newline-delimited JSON over a plain
//! stream socket. Requests name a frame and a seed; the service runs the
//! cloud detector model on that frame's ground truth, holds the batch for
//! the configured service time, and replies with the detection list.
//!
//! The request queue is the single synchronization point: reader threads
//! produce, `num_workers` worker threads consume with the same
//! full-batch-or-max-delay rule as the simulation.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{ServerConfig, ServerStats};
use crate::error::Error;
use crate::simworld::{simulate_detections, DetectorProfile};
use crate::trace::Trace;
use crate::types::{Detection, Source};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WireRequest {
    pub id: u64,
    pub frame_index: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WireResponse {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detections: Option<Vec<Detection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct QueuedRequest {
    id: u64,
    frame_index: u64,
    seed: u64,
    enqueued: Instant,
    writer: Arc<Mutex<TcpStream>>,
}

/// One dispatched batch, for comparing against the simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct DispatchLogEntry {
    pub batch_id: u64,
    pub request_ids: Vec<u64>,
}

struct Shared {
    queue: Mutex<VecDeque<QueuedRequest>>,
    available: Condvar,
    shutdown: AtomicBool,
    next_batch_id: AtomicU64,
    /// Pushed after each batch finishes service: push order is completion
    /// order.
    completion_log: Mutex<Vec<DispatchLogEntry>>,
}

/// Handle to a running service; dropping it without `shutdown()` leaks the
/// listener thread until process exit.
pub struct RunningServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    handles: Vec<JoinHandle<()>>,
}

impl RunningServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Batches completed so far, in completion order.
    pub fn completion_log(&self) -> Vec<DispatchLogEntry> {
        self.shared.completion_log.lock().expect("log lock").clone()
    }

    pub fn shutdown(self) {
        self.shared.shutdown.store(true, Ordering::SeqCst);
        self.shared.available.notify_all();
        for handle in self.handles {
            let _ = handle.join();
        }
    }
}

fn respond(writer: &Arc<Mutex<TcpStream>>, response: &WireResponse) {
    let mut line = serde_json::to_string(response).expect("response serializes");
    line.push('\n');
    if let Ok(mut stream) = writer.lock() {
        let _ = stream.write_all(line.as_bytes());
    }
}

fn reader_loop(stream: TcpStream, shared: Arc<Shared>, n_frames: u64) {
    let writer = Arc::new(Mutex::new(stream.try_clone().expect("clone stream")));
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    loop {
        line.clear();
        match reader.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {}
            Err(_) => break,
        }
        if shared.shutdown.load(Ordering::SeqCst) {
            break;
        }
        if line.trim().is_empty() {
            continue;
        }
        let request: WireRequest = match serde_json::from_str(line.trim()) {
            Ok(r) => r,
            Err(_) => {
                respond(
                    &writer,
                    &WireResponse { id: None, detections: None, error: Some("bad_request".into()) },
                );
                continue;
            }
        };
        if request.frame_index >= n_frames {
            respond(
                &writer,
                &WireResponse {
                    id: Some(request.id),
                    detections: None,
                    error: Some("frame_out_of_range".into()),
                },
            );
            continue;
        }
        {
            let mut queue = shared.queue.lock().expect("queue lock");
            queue.push_back(QueuedRequest {
                id: request.id,
                frame_index: request.frame_index,
                seed: request.seed,
                enqueued: Instant::now(),
                writer: Arc::clone(&writer),
            });
        }
        shared.available.notify_all();
    }
}

fn worker_loop(
    shared: Arc<Shared>,
    config: ServerConfig,
    profile: DetectorProfile,
    trace: Arc<Trace>,
) {
    let max_delay = Duration::from_secs_f64(config.max_delay_ms / 1000.0);
    loop {
        let batch: Vec<QueuedRequest> = {
            let mut queue = shared.queue.lock().expect("queue lock");
            loop {
                if shared.shutdown.load(Ordering::SeqCst) {
                    return;
                }
                if queue.len() >= config.batch_size {
                    break queue.drain(..config.batch_size).collect();
                }
                if let Some(front) = queue.front() {
                    let waited = front.enqueued.elapsed();
                    if waited >= max_delay {
                        let n = config.batch_size.min(queue.len());
                        break queue.drain(..n).collect();
                    }
                    let remaining = max_delay - waited;
                    let (lock, _timeout) =
                        shared.available.wait_timeout(queue, remaining).expect("condvar");
                    queue = lock;
                } else {
                    let (lock, _timeout) = shared
                        .available
                        .wait_timeout(queue, Duration::from_millis(20))
                        .expect("condvar");
                    queue = lock;
                }
            }
        };

        let batch_id = shared.next_batch_id.fetch_add(1, Ordering::SeqCst);
        let n_classes = trace.header.n_classes();
        let bounds = trace.bounds();
        let responses: Vec<(Arc<Mutex<TcpStream>>, WireResponse)> = batch
            .iter()
            .map(|req| {
                let mut rng = rand::rngs::StdRng::seed_from_u64(req.seed);
                let dets = simulate_detections(
                    &trace.frames[req.frame_index as usize],
                    &profile,
                    Source::Cloud,
                    n_classes,
                    bounds,
                    &mut rng,
                );
                (
                    Arc::clone(&req.writer),
                    WireResponse { id: Some(req.id), detections: Some(dets), error: None },
                )
            })
            .collect();

        std::thread::sleep(Duration::from_secs_f64(
            config.batch_service_ms(batch.len()) / 1000.0,
        ));

        {
            let mut log = shared.completion_log.lock().expect("log lock");
            log.push(DispatchLogEntry {
                batch_id,
                request_ids: batch.iter().map(|r| r.id).collect(),
            });
        }
        for (writer, response) in &responses {
            respond(writer, response);
        }
    }
}

/// Start the service on `bind` (e.g. `127.0.0.1:0`).
pub fn serve(
    config: &ServerConfig,
    profile: &DetectorProfile,
    trace: Arc<Trace>,
    bind: &str,
) -> Result<RunningServer, Error> {
    config.validate()?;
    let listener = TcpListener::bind(bind).map_err(|e| Error::io(bind, e))?;
    let addr = listener.local_addr().map_err(|e| Error::io(bind, e))?;
    listener.set_nonblocking(true).map_err(|e| Error::io(bind, e))?;

    let shared = Arc::new(Shared {
        queue: Mutex::new(VecDeque::new()),
        available: Condvar::new(),
        shutdown: AtomicBool::new(false),
        next_batch_id: AtomicU64::new(0),
        completion_log: Mutex::new(Vec::new()),
    });

    let mut handles = Vec::new();
    for _ in 0..config.num_workers {
        let shared = Arc::clone(&shared);
        let config = config.clone();
        let profile = profile.clone();
        let trace = Arc::clone(&trace);
        handles.push(std::thread::spawn(move || worker_loop(shared, config, profile, trace)));
    }

    {
        let shared = Arc::clone(&shared);
        let n_frames = trace.frames.len() as u64;
        handles.push(std::thread::spawn(move || {
            let mut readers: Vec<JoinHandle<()>> = Vec::new();
            loop {
                if shared.shutdown.load(Ordering::SeqCst) {
                    break;
                }
                match listener.accept() {
                    Ok((stream, _)) => {
                        let shared = Arc::clone(&shared);
                        readers.push(std::thread::spawn(move || {
                            reader_loop(stream, shared, n_frames)
                        }));
                    }
                    Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
            // Reader threads exit when their peers close; detach them.
        }));
    }

    Ok(RunningServer { addr, shared, handles })
}

/// Blocking request/response client for the wire protocol.
pub struct WireClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl WireClient {
    pub fn connect(addr: &SocketAddr) -> Result<WireClient, Error> {
        let stream =
            TcpStream::connect(addr).map_err(|e| Error::io(format!("{addr}"), e))?;
        stream.set_nodelay(true).ok();
        let writer = stream.try_clone().map_err(|e| Error::io(format!("{addr}"), e))?;
        Ok(WireClient { reader: BufReader::new(stream), writer })
    }

    pub fn send(&mut self, request: &WireRequest) -> Result<(), Error> {
        let mut line = serde_json::to_string(request).expect("request serializes");
        line.push('\n');
        self.writer.write_all(line.as_bytes()).map_err(|e| Error::io("send", e))
    }

    pub fn send_raw(&mut self, line: &str) -> Result<(), Error> {
        self.writer.write_all(line.as_bytes()).map_err(|e| Error::io("send", e))?;
        self.writer.write_all(b"\n").map_err(|e| Error::io("send", e))
    }

    pub fn read_response(&mut self) -> Result<WireResponse, Error> {
        let mut line = String::new();
        let n = self.reader.read_line(&mut line).map_err(|e| Error::io("recv", e))?;
        if n == 0 {
            return Err(Error::io("recv", std::io::Error::from(std::io::ErrorKind::UnexpectedEof)));
        }
        serde_json::from_str(line.trim())
            .map_err(|e| Error::Parse { line: 0, message: e.to_string() })
    }

    pub fn request(&mut self, request: &WireRequest) -> Result<WireResponse, Error> {
        self.send(request)?;
        self.read_response()
    }
}

/// Drive a live service with `n_clients` loopback clients, each issuing one
/// request per `request_period_ms`, joining at 3 clients per second. Stats
/// are measured from the client side.
pub fn load_test(
    addr: &SocketAddr,
    n_clients: usize,
    request_period_ms: f64,
    duration_ms: f64,
) -> Result<ServerStats, Error> {
    const RAMP_PER_SEC: f64 = 3.0;
    // Fail fast if the target is not reachable.
    drop(TcpStream::connect(addr).map_err(|e| Error::io(format!("{addr}"), e))?);

    let deadline = Instant::now() + Duration::from_secs_f64(duration_ms / 1000.0);
    let mut joins = Vec::new();
    for client_idx in 0..n_clients {
        let addr = *addr;
        joins.push(std::thread::spawn(move || -> (Vec<f64>, usize) {
            let start_delay = Duration::from_secs_f64(client_idx as f64 / RAMP_PER_SEC);
            std::thread::sleep(start_delay);
            let mut samples = Vec::new();
            let mut in_flight_dropped = 0usize;
            let Ok(mut client) = WireClient::connect(&addr) else {
                return (samples, in_flight_dropped);
            };
            let mut request_id = client_idx as u64 * 1_000_000;
            while Instant::now() < deadline {
                let sent = Instant::now();
                let request = WireRequest { id: request_id, frame_index: 0, seed: request_id };
                request_id += 1;
                if client.send(&request).is_err() {
                    break;
                }
                match client.read_response() {
                    Ok(_) => samples.push(sent.elapsed().as_secs_f64() * 1000.0),
                    Err(_) => {
                        in_flight_dropped += 1;
                        break;
                    }
                }
                let elapsed = sent.elapsed();
                let period = Duration::from_secs_f64(request_period_ms / 1000.0);
                if elapsed < period {
                    let remaining = period - elapsed;
                    if Instant::now() + remaining >= deadline {
                        break;
                    }
                    std::thread::sleep(remaining);
                }
            }
            (samples, in_flight_dropped)
        }));
    }

    let mut all = Vec::new();
    let mut dropped = 0usize;
    for join in joins {
        let (samples, d) = join.join().map_err(|_| {
            Error::io("load_test", std::io::Error::other("client thread panicked"))
        })?;
        all.extend(samples);
        dropped += d;
    }
    Ok(ServerStats::from_response_times(all, dropped, 0, duration_ms))
}
