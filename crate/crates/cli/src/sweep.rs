//! Parameter sweeps: a base scenario crossed with one or two value axes,
//! repeated over seeds and modes. Cells run in parallel; seeds within a
//! cell run sequentially so random streams stay reproducible.

use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use edgefuse::config::ScenarioConfig;
use edgefuse::eval::MetricsReport;
use edgefuse::netem::NetworkProfile;
use edgefuse::pipeline::{run_pipeline, PipelineMode};
use edgefuse::simworld::generate_scene;
use edgefuse::Error;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<serde_json::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub axis1: Option<SweepAxis>,
    pub axis2: Option<SweepAxis>,
    pub n_seeds: u64,
    pub modes: Vec<String>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            base: ScenarioConfig::default(),
            axis1: None,
            axis2: None,
            n_seeds: 3,
            modes: vec!["edge-cloud".into()],
        }
    }
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<SweepSpec, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SweepSpec =
            serde_json::from_str(&text).map_err(|e| Error::config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.base.validate()?;
        if self.n_seeds == 0 {
            return Err(Error::config("n_seeds must be >= 1"));
        }
        if self.modes.is_empty() {
            return Err(Error::config("at least one mode required"));
        }
        for mode in &self.modes {
            let _: PipelineMode = mode.parse()?;
        }
        // Axis params must resolve before any cell runs.
        let mut probe = self.base.clone();
        for axis in [&self.axis1, &self.axis2].into_iter().flatten() {
            if axis.values.is_empty() {
                return Err(Error::config(format!("axis {:?} has no values", axis.param)));
            }
            for value in &axis.values {
                apply_axis(&mut probe, &axis.param, value)?;
            }
        }
        probe.validate()
    }
}

/// Set one recognized scenario field; returns the printable value.
pub fn apply_axis(
    config: &mut ScenarioConfig,
    param: &str,
    value: &serde_json::Value,
) -> Result<String, Error> {
    let as_u64 = |v: &serde_json::Value| {
        v.as_u64().ok_or_else(|| Error::config(format!("{param} needs an integer, got {v}")))
    };
    let as_f64 = |v: &serde_json::Value| {
        v.as_f64().ok_or_else(|| Error::config(format!("{param} needs a number, got {v}")))
    };
    match param {
        "k" => config.k = as_u64(value)?,
        "m" => config.m = as_u64(value)?,
        "fast_track_stride" => config.fast_track_stride = as_u64(value)?,
        "delta" => config.delta = as_f64(value)?,
        "change_threshold" => config.change_threshold = as_f64(value)?,
        "iou_threshold" => config.iou_threshold = as_f64(value)?,
        "discard_threshold" => config.discard_threshold = as_f64(value)?,
        "frame_period_ms" => config.frame_period_ms = as_f64(value)?,
        "drift_sigma" => config.tracker.drift_sigma = as_f64(value)?,
        "network" => {
            let name = value
                .as_str()
                .ok_or_else(|| Error::config(format!("network needs a preset name, got {value}")))?;
            config.network = NetworkProfile::preset(name)?;
        }
        other => {
            return Err(Error::config(format!("unrecognized sweep parameter {other:?}")));
        }
    }
    Ok(match value {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    })
}

pub struct SweepResults {
    /// One CSV row per (cell, seed, mode), in cell-major order.
    pub rows: Vec<String>,
    /// One CSV row per (cell, mode) with the per-cell mean mAP.
    pub cells: Vec<String>,
}

struct Cell {
    label1: String,
    label2: String,
    config: ScenarioConfig,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResults, Error> {
    let unit = SweepAxis { param: String::new(), values: vec![serde_json::Value::Null] };
    let axis1 = spec.axis1.clone().unwrap_or_else(|| unit.clone());
    let axis2 = spec.axis2.clone().unwrap_or(unit);

    let mut cells: Vec<Cell> = Vec::new();
    for v1 in &axis1.values {
        for v2 in &axis2.values {
            let mut config = spec.base.clone();
            let label1 = if axis1.param.is_empty() {
                "-".to_string()
            } else {
                format!("{}={}", axis1.param, apply_axis(&mut config, &axis1.param, v1)?)
            };
            let label2 = if axis2.param.is_empty() {
                "-".to_string()
            } else {
                format!("{}={}", axis2.param, apply_axis(&mut config, &axis2.param, v2)?)
            };
            cells.push(Cell { label1, label2, config });
        }
    }
    let modes: Vec<PipelineMode> =
        spec.modes.iter().map(|m| m.parse()).collect::<Result<_, _>>()?;

    // (per-run rows, per-cell aggregate rows) for one cell
    type CellCsv = (Vec<String>, Vec<String>);
    let per_cell: Vec<Result<CellCsv, Error>> = cells
        .par_iter()
        .map(|cell| {
            let mut rows = Vec::new();
            let mut cell_lines = Vec::new();
            for mode in &modes {
                let mut map_total = 0.0;
                for s in 0..spec.n_seeds {
                    let seed = cell.config.seed + s;
                    let mut config = cell.config.clone();
                    config.seed = seed;
                    let trace = generate_scene(&config.scene, seed);
                    let gts: Vec<_> = trace.frames.iter().map(|f| f.objects.clone()).collect();
                    let output = run_pipeline(&trace, &config, *mode)?;
                    let mut report = MetricsReport::evaluate(
                        &output.prediction_detections(),
                        &gts,
                        config.iou_threshold,
                    );
                    if !output.serving_samples_ms.is_empty() {
                        let pcts =
                            edgefuse::stats::percentiles(&output.serving_samples_ms, &[50.0, 95.0]);
                        report.serving_p50_ms = pcts[0];
                        report.serving_p95_ms = pcts[1];
                    }
                    map_total += report.map_05.unwrap_or(0.0);
                    let run_id = format!("{};{};seed={seed}", cell.label1, cell.label2);
                    rows.push(report.csv_row(&run_id, mode.as_str(), config.k, config.m));
                }
                cell_lines.push(format!(
                    "{},{},{},{:.6},{}",
                    cell.label1,
                    cell.label2,
                    mode,
                    map_total / spec.n_seeds as f64,
                    spec.n_seeds
                ));
            }
            Ok((rows, cell_lines))
        })
        .collect();

    let mut rows = Vec::new();
    let mut cell_rows = Vec::new();
    for result in per_cell {
        let (r, c) = result?;
        rows.extend(r);
        cell_rows.extend(c);
    }
    Ok(SweepResults { rows, cells: cell_rows })
}
