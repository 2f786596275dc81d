//! CSV and JSON export of run records.
//!
//! Nothing time-dependent is written, so exporting the same records twice gives identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::metrics::{
    availability_ranking, energy_cost_heatmap, qtable_update_density, AvailabilityThresholds, Heatmap,
    HeatmapMetric,
};
use super::{HeatmapSpec, RunRecord, RunResult};
use crate::envmdp::Trajectory;
use crate::error::{Error, Result};

/// Sweep-level context written next to the records.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportMeta {
    pub master_seed: u64,
    pub axes: Vec<String>,
    pub thresholds: AvailabilityThresholds,
    pub heatmap: Option<HeatmapSpec>,
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn f(x: f64) -> String {
    x.to_string()
}

/// Git-style content hash (`blob <len>\0` prefix) with SHA-256.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Writes curve, trajectory, operating points, Q-table and a JSON summary of one run into `dir`.
pub fn write_run_files(result: &RunResult, config_toml: &str, sidecar: &impl Serialize, dir: &Path) -> Result<()> {
    let curve = result.curve.iter().map(|p| {
        vec![
            p.episode.to_string(),
            f(p.reward_sum),
            f(p.fuel_g),
            f(p.soc_variation),
            p.length.to_string(),
            p.terminated.to_string(),
        ]
    });
    write(
        &dir.join("curve.csv"),
        &csv_bytes(&["episode", "reward_sum", "fuel_g", "soc_variation", "length", "terminated"], curve),
    )?;

    let empty = Trajectory::default();
    write_trajectory_files(result.final_eval.trajectory.as_ref().unwrap_or(&empty), dir)?;
    write(&dir.join("qtable.csv"), result.qtable.to_csv().as_bytes())?;
    write(&dir.join("config.toml"), config_toml.as_bytes())?;
    let json = serde_json::to_string_pretty(sidecar).expect("run summary serializes");
    write(&dir.join("run.json"), (json + "\n").as_bytes())
}

/// Writes `soc_trajectory.csv` and `operating_points.csv` for one recorded episode.
pub fn write_trajectory_files(traj: &Trajectory, dir: &Path) -> Result<()> {
    let soc = traj.soc.iter().enumerate().map(|(i, s)| vec![i.to_string(), f(*s)]);
    write(&dir.join("soc_trajectory.csv"), &csv_bytes(&["step", "soc"], soc))?;

    let points = traj.steps.iter().map(|r| {
        vec![
            r.step.to_string(),
            f(r.time),
            f(r.speed),
            f(r.pdem),
            f(r.command),
            r.gear.to_string(),
            f(r.source.load),
            f(r.source.speed),
            f(r.source.efficiency),
            f(r.motor.load),
            f(r.motor.speed),
            f(r.motor.efficiency),
            f(r.soc),
            f(r.fuel_g),
            f(r.reward),
        ]
    });
    write(
        &dir.join("operating_points.csv"),
        &csv_bytes(
            &[
                "step",
                "time_s",
                "speed_mps",
                "pdem_w",
                "command",
                "gear",
                "source_load",
                "source_speed",
                "source_efficiency",
                "motor_torque_nm",
                "motor_speed_rad_s",
                "motor_efficiency",
                "soc",
                "fuel_g",
                "reward",
            ],
            points,
        ),
    )
}

/// JSON summary of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary<'a> {
    pub config_hash: &'a str,
    pub seed: u64,
    pub algorithm: &'a str,
    pub episodes: usize,
    pub fuel_g: f64,
    pub soc_start: f64,
    pub soc_end: f64,
    pub soc_variation: f64,
    pub steps: usize,
    pub terminated: bool,
    pub final_reward: f64,
    pub baseline_reward: f64,
    pub label: Option<i32>,
    pub update_density: super::UpdateDensity,
}

impl<'a> RunSummary<'a> {
    pub fn new(config_hash: &'a str, seed: u64, algorithm: &'a str, episodes: usize, r: &RunResult) -> Self {
        let s = r.final_eval.summary;
        RunSummary {
            config_hash,
            seed,
            algorithm,
            episodes,
            fuel_g: s.fuel_g,
            soc_start: s.soc_start,
            soc_end: s.soc_end,
            soc_variation: s.soc_variation(),
            steps: s.steps,
            terminated: s.terminated,
            final_reward: r.final_eval.reward_sum,
            baseline_reward: r.baseline_reward,
            label: r.label.map(|l| l.index()),
            update_density: qtable_update_density(r.qtable.visits()),
        }
    }
}

#[derive(Serialize)]
struct ManifestRun<'a> {
    index: usize,
    dir: Option<String>,
    config_hash: &'a str,
    seed: u64,
    repetition: usize,
    axis_values: BTreeMap<&'a str, &'a str>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    master_seed: u64,
    axes: &'a [String],
    thresholds: AvailabilityThresholds,
    runs: Vec<ManifestRun<'a>>,
    succeeded: usize,
    failed: usize,
    input_files: BTreeMap<String, String>,
    heatmaps: Vec<String>,
    notes: Vec<String>,
}

fn run_dir(rec: &RunRecord) -> String {
    format!("runs/{:04}_{}", rec.run.index, &rec.run.config_hash[..12])
}

/// Writes per-run folders, `summary.csv`, `availability.csv`, heatmaps and `manifest.json`.
/// An empty record list writes the manifest only. Returns the files written, relative to `out`.
pub fn export_report(records: &[RunRecord], meta: &ReportMeta, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    let mut notes = Vec::new();
    let mut heatmaps = Vec::new();

    if !records.is_empty() {
        for rec in records {
            if let Ok(r) = &rec.outcome {
                let cfg = &rec.run.config;
                let summary = RunSummary::new(
                    &rec.run.config_hash,
                    rec.run.seed,
                    cfg.algorithm.name.name(),
                    cfg.algorithm.episodes,
                    r,
                );
                let dir = run_dir(rec);
                write_run_files(r, &cfg.to_toml(), &summary, &out.join(&dir))?;
                for name in ["curve.csv", "soc_trajectory.csv", "operating_points.csv", "qtable.csv", "config.toml", "run.json"] {
                    written.push(PathBuf::from(&dir).join(name));
                }
            }
        }

        let mut header: Vec<&str> = vec!["index", "repetition", "config_hash", "seed"];
        header.extend(meta.axes.iter().map(String::as_str));
        header.extend([
            "algorithm",
            "status",
            "fuel_g",
            "soc_start",
            "soc_end",
            "soc_variation",
            "steps",
            "terminated",
            "final_reward",
            "baseline_reward",
            "label",
            "visits_total",
            "visits_mean",
            "visits_zero_fraction",
        ]);
        let rows = records.iter().map(|rec| {
            let mut row = vec![
                rec.run.index.to_string(),
                rec.run.repetition.to_string(),
                rec.run.config_hash.clone(),
                rec.run.seed.to_string(),
            ];
            for a in &meta.axes {
                let v = rec.run.axis_values.iter().find(|(p, _)| p == a).map(|(_, v)| v.clone());
                row.push(v.unwrap_or_default());
            }
            row.push(rec.run.config.algorithm.name.name().to_string());
            match &rec.outcome {
                Ok(r) => {
                    let s = r.final_eval.summary;
                    let d = qtable_update_density(r.qtable.visits());
                    row.extend([
                        "ok".to_string(),
                        f(s.fuel_g),
                        f(s.soc_start),
                        f(s.soc_end),
                        f(s.soc_variation()),
                        s.steps.to_string(),
                        s.terminated.to_string(),
                        f(r.final_eval.reward_sum),
                        f(r.baseline_reward),
                        r.label.map(|l| l.index().to_string()).unwrap_or_default(),
                        d.total.to_string(),
                        f(d.mean),
                        f(d.zero_fraction),
                    ]);
                }
                Err(_) => {
                    row.push("failed".to_string());
                    row.extend(std::iter::repeat(String::new()).take(12));
                }
            }
            row
        });
        write(&out.join("summary.csv"), &csv_bytes(&header, rows))?;
        written.push("summary.csv".into());

        let labelled: Vec<_> = records
            .iter()
            .filter_map(|rec| match &rec.outcome {
                Ok(RunResult { label: Some(l), .. }) => Some((rec.run.axis_values.clone(), *l)),
                _ => None,
            })
            .collect();
        let ranking = availability_ranking(&labelled, &meta.axes);
        let rows = ranking
            .iter()
            .map(|r| vec![r.parameter.clone(), r.value.clone(), f(r.mean_index), r.runs.to_string()]);
        write(
            &out.join("availability.csv"),
            &csv_bytes(&["parameter", "value", "mean_index", "runs"], rows),
        )?;
        written.push("availability.csv".into());

        if let Some(spec) = &meta.heatmap {
            let axis_labels = |path: &str| -> Vec<String> {
                let mut seen: Vec<String> = Vec::new();
                for rec in records {
                    if let Some((_, v)) = rec.run.axis_values.iter().find(|(p, _)| p == path) {
                        if !seen.contains(v) {
                            seen.push(v.clone());
                        }
                    }
                }
                seen
            };
            let (rows, cols) = (axis_labels(&spec.rows), axis_labels(&spec.cols));
            let points: Vec<_> = records
                .iter()
                .filter_map(|rec| {
                    let r = rec.outcome.as_ref().ok()?;
                    let get = |p: &str| rec.run.axis_values.iter().find(|(a, _)| a == p).map(|(_, v)| v.clone());
                    Some((get(&spec.rows)?, get(&spec.cols)?, r.cell_input()))
                })
                .collect();
            for metric in HeatmapMetric::ALL {
                match energy_cost_heatmap(&points, &rows, &cols, metric, spec.equivalence_factor) {
                    Ok(h) => {
                        let name = format!("heatmap_{}.csv", metric.name());
                        write(&out.join(&name), &heatmap_csv(&h, &spec.rows, &spec.cols))?;
                        written.push(name.clone().into());
                        heatmaps.push(name);
                    }
                    Err(e) => notes.push(format!("heatmap {} skipped: {e}", metric.name())),
                }
            }
        }
    }

    let mut input_files = BTreeMap::new();
    for rec in records {
        for p in rec.run.config.input_files() {
            let key = p.display().to_string();
            if input_files.contains_key(&key) {
                continue;
            }
            let hash = match fs::read(&p) {
                Ok(bytes) => content_hash(&bytes),
                Err(_) => "unreadable".to_string(),
            };
            input_files.insert(key, hash);
        }
    }
    let succeeded = records.iter().filter(|r| r.outcome.is_ok()).count();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        master_seed: meta.master_seed,
        axes: &meta.axes,
        thresholds: meta.thresholds,
        runs: records
            .iter()
            .map(|rec| ManifestRun {
                index: rec.run.index,
                dir: rec.outcome.is_ok().then(|| run_dir(rec)),
                config_hash: &rec.run.config_hash,
                seed: rec.run.seed,
                repetition: rec.run.repetition,
                axis_values: rec.run.axis_values.iter().map(|(p, v)| (p.as_str(), v.as_str())).collect(),
                status: if rec.outcome.is_ok() { "ok" } else { "failed" },
                error: rec.outcome.as_ref().err().map(String::as_str),
            })
            .collect(),
        succeeded,
        failed: records.len() - succeeded,
        input_files,
        heatmaps,
        notes,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&out.join("manifest.json"), (json + "\n").as_bytes())?;
    written.push("manifest.json".into());
    Ok(written)
}

fn heatmap_csv(h: &Heatmap, rows: &str, cols: &str) -> Vec<u8> {
    let corner = format!("{rows}\\{cols}");
    let mut header = vec![corner.as_str()];
    header.extend(h.cols.iter().map(String::as_str));
    let body = h.rows.iter().zip(&h.cells).map(|(label, cells)| {
        let mut row = vec![label.clone()];
        row.extend(cells.iter().map(|&c| f(c)));
        row
    });
    csv_bytes(&header, body)
}
