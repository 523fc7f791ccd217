use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use edgefuse::config::ScenarioConfig;
use edgefuse::eval::MetricsReport;
use edgefuse::netem::NetworkProfile;
use edgefuse::pipeline::{run_pipeline, PipelineMode, RunOutput};
use edgefuse::server::{client_arrivals, load_test, run_server_sim, serve as serve_wire, ServerStats};
use edgefuse::simworld::{generate_scene, SceneParams};
use edgefuse::stats::percentiles;
use edgefuse::trace::{load_trace, save_trace, Trace};
use edgefuse::Error;

fn load_scene_params(path: Option<PathBuf>) -> Result<SceneParams, Error> {
    let Some(path) = path else { return Ok(SceneParams::default()) };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let params: SceneParams =
        serde_json::from_str(&text).map_err(|e| Error::config(e.to_string()))?;
    params.validate()?;
    Ok(params)
}

fn load_scenario(path: Option<PathBuf>) -> Result<ScenarioConfig, Error> {
    match path {
        Some(path) => ScenarioConfig::load(path),
        None => Ok(ScenarioConfig::default()),
    }
}

pub fn generate(config: Option<PathBuf>, seed: u64, out: &Path) -> Result<(), Error> {
    let params = load_scene_params(config)?;
    let trace = generate_scene(&params, seed);
    save_trace(&trace, out)?;
    println!("wrote {} frames to {}", trace.frames.len(), out.display());
    Ok(())
}

/// Metrics plus the run id used in CSV rows.
fn evaluate_run(
    trace: &Trace,
    config: &ScenarioConfig,
    output: &RunOutput,
) -> MetricsReport {
    let gts: Vec<_> = trace.frames.iter().map(|f| f.objects.clone()).collect();
    let mut report =
        MetricsReport::evaluate(&output.prediction_detections(), &gts, config.iou_threshold);
    if !output.serving_samples_ms.is_empty() {
        let pcts = percentiles(&output.serving_samples_ms, &[50.0, 95.0]);
        report.serving_p50_ms = pcts[0];
        report.serving_p95_ms = pcts[1];
    }
    let sim_seconds = trace.frames.len() as f64 * config.frame_period_ms / 1000.0;
    if sim_seconds > 0.0 {
        report.throughput_rps = output.cloud_responses_processed as f64 / sim_seconds;
    }
    report
}

fn append_csv_row(path: &Path, header: &str, row: &str) -> Result<(), Error> {
    let add_header = !path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    if add_header {
        writeln!(file, "{header}").map_err(|e| Error::io(path, e))?;
    }
    writeln!(file, "{row}").map_err(|e| Error::io(path, e))
}

fn write_jsonl<T: serde::Serialize>(path: &Path, records: &[T]) -> Result<(), Error> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(serde::Serialize)]
struct PredictionLine<'a> {
    frame_index: u64,
    objects: &'a [edgefuse::TrackedObject],
}

pub fn run(
    config: Option<PathBuf>,
    trace_path: &Path,
    mode: &str,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    let mut config = load_scenario(config)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let mode: PipelineMode = mode.parse()?;
    let trace = load_trace(trace_path)?;
    let output = run_pipeline(&trace, &config, mode)?;
    let report = evaluate_run(&trace, &config, &output);

    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));

    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let run_id = format!("{mode}-s{}", config.seed);
        std::fs::write(
            dir.join("metrics.json"),
            serde_json::to_string_pretty(&report).expect("report serializes"),
        )
        .map_err(|e| Error::io(dir.join("metrics.json"), e))?;
        let predictions: Vec<PredictionLine> = output
            .predictions
            .iter()
            .enumerate()
            .map(|(f, objects)| PredictionLine { frame_index: f as u64, objects })
            .collect();
        write_jsonl(&dir.join("predictions.jsonl"), &predictions)?;
        write_jsonl(&dir.join("events.jsonl"), &output.events)?;
        append_csv_row(
            &dir.join("report.csv"),
            MetricsReport::csv_header(),
            &report.csv_row(&run_id, mode.as_str(), config.k, config.m),
        )?;
    }
    Ok(())
}

pub fn sweep(config: &Path, out: &Path) -> Result<(), Error> {
    let spec = crate::sweep::SweepSpec::load(config)?;
    let results = crate::sweep::run_sweep(&spec)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let rows_path = out.join("rows.csv");
    let mut rows = String::new();
    rows.push_str(MetricsReport::csv_header());
    rows.push('\n');
    for row in &results.rows {
        rows.push_str(row);
        rows.push('\n');
    }
    std::fs::write(&rows_path, rows).map_err(|e| Error::io(&rows_path, e))?;

    let cells_path = out.join("cells.csv");
    let mut cells = String::new();
    cells.push_str("axis1,axis2,mode,mean_map05,seeds\n");
    for cell in &results.cells {
        cells.push_str(cell);
        cells.push('\n');
    }
    std::fs::write(&cells_path, cells).map_err(|e| Error::io(&cells_path, e))?;
    println!("wrote {} rows to {}", results.rows.len(), rows_path.display());
    Ok(())
}

pub fn servebench(
    config: Option<PathBuf>,
    clients: &str,
    period_ms: f64,
    duration_ms: f64,
    live: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    let mut scenario = load_scenario(config)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let counts: Vec<usize> = clients
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::config(format!("bad client count {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    if counts.is_empty() {
        return Err(Error::config("at least one client count required"));
    }

    let mut lines = vec![ServerStats::csv_header().to_string()];
    let mut documents: Vec<serde_json::Value> = Vec::new();
    for &n_clients in &counts {
        let stats = match &live {
            Some(addr) => {
                let addr: std::net::SocketAddr = addr
                    .parse()
                    .map_err(|_| Error::config(format!("bad address {addr:?}")))?;
                load_test(&addr, n_clients, period_ms, duration_ms)?
            }
            None => {
                let mut rng = edgefuse::rng::substream(scenario.seed, "servebench");
                let arrivals =
                    client_arrivals(n_clients, period_ms, duration_ms, 3.0, &mut rng);
                run_server_sim(&arrivals, &scenario.server, duration_ms).stats
            }
        };
        lines.push(stats.csv_row(n_clients));
        documents.push(serde_json::json!({ "n_clients": n_clients, "stats": stats }));
    }
    let csv = lines.join("\n") + "\n";
    let json = serde_json::to_string_pretty(&documents).expect("stats serialize");
    match out {
        Some(path) => {
            std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
            let json_path = path.with_extension("json");
            std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn serve(config: Option<PathBuf>, trace_path: &Path, bind: &str) -> Result<(), Error> {
    let scenario = load_scenario(config)?;
    let trace = Arc::new(load_trace(trace_path)?);
    if trace.frames.is_empty() {
        return Err(Error::config("trace has no frames"));
    }
    // Shape the network reference early so a bad preset fails before bind.
    let _ = NetworkProfile::resolve(&scenario.network)?;
    let server = serve_wire(&scenario.server, &scenario.cloud_profile, trace, bind)?;
    println!("listening on {}", server.addr());
    std::io::stdout().flush().ok();
    loop {
        std::thread::sleep(std::time::Duration::from_secs(3600));
    }
}
