//! Configured sweeps over run configs, run metrics and report export.

pub mod metrics;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::envmdp::{equivalence_factor, EmsEnvironment};
use crate::error::{Error, Result};
use crate::tabrl::{train, CurvePoint, Evaluation, QTable};

pub use metrics::{
    availability_ranking, classify_availability, energy_cost_heatmap, qtable_update_density, Availability,
    AvailabilityThresholds, CellInput, Heatmap, HeatmapMetric, RankRow, UpdateDensity,
};
pub use report::{content_hash, export_report, write_run_files, write_trajectory_files, ReportMeta, RunSummary};

/// One sweep axis: a dotted config path and the values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub path: String,
    pub values: Vec<toml::Value>,
}

/// Which two axes a sweep's heatmaps are laid out over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSpec {
    pub rows: String,
    pub cols: String,
    /// Equivalence factor used by the equivalent-consumption metric.
    #[serde(default = "one")]
    pub equivalence_factor: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    base: PathBuf,
    #[serde(default)]
    master_seed: u64,
    #[serde(default = "default_reps")]
    repetitions: usize,
    #[serde(default = "default_max_runs")]
    max_runs: usize,
    #[serde(default)]
    workers: usize,
    #[serde(default)]
    thresholds: AvailabilityThresholds,
    heatmap: Option<HeatmapSpec>,
    /// Fixed overrides applied to the base config, keyed by dotted path.
    #[serde(default)]
    set: std::collections::BTreeMap<String, toml::Value>,
    #[serde(default)]
    axes: Vec<Axis>,
}

fn default_reps() -> usize {
    1
}

fn default_max_runs() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub axes: Vec<Axis>,
    pub repetitions: usize,
    pub master_seed: u64,
    /// Refuse sweeps larger than this.
    pub max_runs: usize,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub thresholds: AvailabilityThresholds,
    pub heatmap: Option<HeatmapSpec>,
}

impl SweepSpec {
    pub fn new(base: RunConfig) -> Self {
        SweepSpec {
            base,
            axes: Vec::new(),
            repetitions: 1,
            master_seed: 0,
            max_runs: default_max_runs(),
            workers: 0,
            thresholds: AvailabilityThresholds::default(),
            heatmap: None,
        }
    }

    /// Reads a sweep file; `base` resolves against the sweep file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SweepFile = toml::from_str(&text).map_err(|e| Error::Config {
            key: e.message().split('`').nth(1).unwrap_or("sweep").to_string(),
            msg: format!("{}: {}", path.display(), e.message().trim()),
        })?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let base_path = if file.base.is_absolute() { file.base.clone() } else { dir.join(&file.base) };
        let mut base = RunConfig::load(&base_path)?;
        for (key, value) in &file.set {
            base = base.with_value(key, value)?;
        }
        let spec = SweepSpec {
            base,
            axes: file.axes,
            repetitions: file.repetitions,
            master_seed: file.master_seed,
            max_runs: file.max_runs,
            workers: file.workers,
            thresholds: file.thresholds,
            heatmap: file.heatmap,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::config("repetitions", "must be at least 1"));
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(Error::config(format!("axes.{}", axis.path), "needs at least one value"));
            }
        }
        let t = &self.thresholds;
        for (key, v) in [
            ("thresholds.window", t.window),
            ("thresholds.valuable_completion", t.valuable_completion),
            ("thresholds.awful_termination", t.awful_termination),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(key, "must be in (0, 1]"));
            }
        }
        if !(t.awful_fraction >= 0.0 && t.awful_fraction.is_finite()) {
            return Err(Error::config("thresholds.awful_fraction", "must be finite and >= 0"));
        }
        if let Some(h) = &self.heatmap {
            for (key, p) in [("heatmap.rows", &h.rows), ("heatmap.cols", &h.cols)] {
                if !self.axes.iter().any(|a| &a.path == p) {
                    return Err(Error::config(key, format!("`{p}` is not a sweep axis")));
                }
            }
        }
        let n = self.size();
        if n > self.max_runs {
            return Err(Error::config("max_runs", format!("sweep has {n} runs, cap is {}", self.max_runs)));
        }
        Ok(())
    }

    /// Product of axis lengths times repetitions.
    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product::<usize>() * self.repetitions
    }

    /// Every run in order: first axis slowest, repetition fastest.
    pub fn expand(&self) -> Result<Vec<PlannedRun>> {
        self.validate()?;
        let mut runs = Vec::with_capacity(self.size());
        let mut idx = vec![0usize; self.axes.len()];
        loop {
            let mut cfg = self.base.clone();
            let mut values = Vec::with_capacity(self.axes.len());
            for (axis, &i) in self.axes.iter().zip(&idx) {
                cfg = cfg.with_value(&axis.path, &axis.values[i])?;
                values.push((axis.path.clone(), value_label(&axis.values[i])));
            }
            let point_hash = cfg.hash();
            for rep in 0..self.repetitions {
                let seed = derive_seed(self.master_seed, &point_hash, rep);
                let mut c = cfg.clone();
                c.algorithm.seed = seed;
                runs.push(PlannedRun {
                    index: runs.len(),
                    repetition: rep,
                    axis_values: values.clone(),
                    config_hash: c.hash(),
                    seed,
                    config: c,
                });
            }
            // odometer over the axes
            let mut k = self.axes.len();
            loop {
                if k == 0 {
                    return Ok(runs);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.axes[k].values.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

/// Axis value as it appears in CSV headers and cells.
pub fn value_label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(n) => n.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        other => other.to_string(),
    }
}

/// First 8 bytes of SHA-256 over (master seed, config hash, repetition).
pub fn derive_seed(master_seed: u64, config_hash: &str, repetition: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(config_hash.as_bytes());
    h.update((repetition as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 8 bytes"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    pub index: usize,
    pub repetition: usize,
    /// (axis path, value label) for every axis.
    pub axis_values: Vec<(String, String)>,
    /// Hash of `config`, seed included.
    pub config_hash: String,
    pub seed: u64,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub qtable: QTable,
    pub curve: Vec<CurvePoint>,
    /// Greedy episode after training, with its trajectory.
    pub final_eval: Evaluation,
    /// Reward sum of the rule-based baseline policy under the same reward.
    pub baseline_reward: f64,
    /// Fuel grams per unit SOC at S = 1.
    pub unit_weight: f64,
    /// `None` when the run kept no learning curve.
    pub label: Option<Availability>,
    pub wall_secs: f64,
}

impl RunResult {
    pub fn cell_input(&self) -> CellInput {
        let s = &self.final_eval.summary;
        CellInput {
            fuel_g: s.fuel_g,
            soc_variation: s.soc_variation(),
            steps: s.steps,
            unit_weight: self.unit_weight,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run: PlannedRun,
    /// Failure message for runs that errored.
    pub outcome: std::result::Result<RunResult, String>,
}

/// Reward sum of the baseline policy from `start_soc`.
pub fn baseline_reward(env: &mut EmsEnvironment, start_soc: f64) -> Result<f64> {
    env.reset(start_soc)?;
    let mut total = 0.0;
    while !env.is_done() {
        let cmd = env.baseline_command();
        total += env.step_command(cmd)?.reward;
    }
    Ok(total)
}

/// Trains one config and measures it.
pub fn run_one(config: &RunConfig, thresholds: &AvailabilityThresholds) -> Result<RunResult> {
    let start = Instant::now();
    config.validate()?;
    let mut env = config.build_env()?;
    let h = config.algorithm.hyperparams();
    let baseline = baseline_reward(&mut env, h.start_soc)?;
    let out = train(config.algorithm.name, &mut env, &h)?;
    let label = match classify_availability(&out.curve, baseline, thresholds) {
        Ok(l) => Some(l),
        Err(Error::EmptyCurve) => None,
        Err(e) => return Err(e),
    };
    let r = &env.reward;
    Ok(RunResult {
        qtable: out.qtable,
        curve: out.curve,
        final_eval: out.final_eval,
        baseline_reward: baseline,
        unit_weight: equivalence_factor(1.0, r.v_bat, r.q_max, r.q_lhv),
        label,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

/// Runs every configuration, in parallel, and returns records in sweep order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<RunRecord>> {
    let plan = spec.expand()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    let thresholds = spec.thresholds;
    Ok(pool.install(|| {
        plan.into_par_iter()
            .map(|run| {
                let outcome = run_one(&run.config, &thresholds).map_err(|e| e.to_string());
                RunRecord { run, outcome }
            })
            .collect()
    }))
}
