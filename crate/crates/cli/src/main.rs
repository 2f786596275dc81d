use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ems_core::config::RunConfig;
use ems_core::dporacle::oracle_suite;
use ems_core::envmdp::Trajectory;
use ems_core::exp::{
    export_report, run_one, run_sweep, write_run_files, write_trajectory_files, AvailabilityThresholds, ReportMeta,
    RunSummary, SweepSpec,
};
use ems_core::powertrain::io::write_reference_data;
use ems_core::tabrl::{eval_rng, evaluate, QTable};
use ems_core::Error;

#[derive(Parser)]
#[command(name = "ems", version, about = "Energy management simulation and tabular RL training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode with a fixed command, a saved Q-table or the rule-based baseline.
    Simulate(SimulateArgs),
    /// Train one config and write its Q-table, learning curve and final evaluation.
    Train(RunArgs),
    /// Run every configuration of a sweep file and write the report.
    Sweep(SweepArgs),
    /// Check the learners against value iteration on small fixture MDPs.
    OracleCheck,
    /// Write the built-in reference component data as CSV files.
    ReferenceData {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Output {
    /// Output directory (default: <output root>/<output.dir from the config>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root for default output directories.
    #[arg(long, env = "EMS_OUTPUT_ROOT", default_value = "out")]
    output_root: PathBuf,
}

impl Output {
    fn dir(&self, config_dir: &Path) -> PathBuf {
        self.out.clone().unwrap_or_else(|| self.output_root.join(config_dir))
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `algorithm.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Fixed command every step: torque split u for a PHEV, fuel-cell power in W for an FCEV.
    #[arg(long, conflicts_with = "qtable")]
    fixed: Option<f64>,
    /// Q-table CSV from `ems train`; followed greedily.
    #[arg(long)]
    qtable: Option<PathBuf>,
    /// Overrides `algorithm.start_soc`.
    #[arg(long)]
    start_soc: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the sweep's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    output: Output,
}

/// Failed oracle check, distinct from config and data errors.
#[derive(Debug)]
struct CheckFailed(usize);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config { .. } => 2,
                e if e.is_data_error() => 3,
                _ => 1,
            };
        }
    }
    1
}

fn load_config(path: &Path) -> Result<RunConfig> {
    if !path.is_file() {
        return Err(Error::Config {
            key: "--config".into(),
            msg: format!("{} is not a readable file", path.display()),
        }
        .into());
    }
    Ok(RunConfig::load(path)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train(a),
        Command::Sweep(a) => sweep(a),
        Command::OracleCheck => oracle_check(),
        Command::ReferenceData { out } => write_reference_data(&out)
            .map(|_| println!("wrote reference data to {}", out.display()))
            .map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[derive(Serialize)]
struct SimulationReport {
    policy: String,
    fuel_g: f64,
    soc_start: f64,
    soc_end: f64,
    soc_variation: f64,
    steps: usize,
    terminated: bool,
    reward_sum: f64,
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let start = a.start_soc.unwrap_or(cfg.algorithm.start_soc);
    if !(0.0..=1.0).contains(&start) {
        return Err(Error::Config {
            key: "--start-soc".into(),
            msg: "must be in [0, 1]".into(),
        }
        .into());
    }
    let mut env = cfg.build_env()?;
    let (policy, reward_sum, trajectory) = if let Some(path) = &a.qtable {
        let q = QTable::read_csv(path, env.n_states(), env.n_actions())?;
        // greedy evaluation draws nothing from the stream, so any seed gives the same episode
        let e = evaluate(&mut env, &q, start, 0.0, &mut eval_rng(0), true)?;
        (format!("qtable:{}", path.display()), e.reward_sum, e.trajectory)
    } else {
        env.set_recording(true);
        env.reset(start)?;
        let mut total = 0.0;
        while !env.is_done() {
            let cmd = a.fixed.unwrap_or_else(|| env.baseline_command());
            total += env.step_command(cmd)?.reward;
        }
        let policy = match a.fixed {
            Some(u) => format!("fixed:{u}"),
            None => "baseline".to_string(),
        };
        (policy, total, env.take_trajectory())
    };
    let s = env.summary();
    let dir = a.output.dir(&cfg.output.dir);
    write_trajectory_files(&trajectory.unwrap_or_else(Trajectory::default), &dir)?;
    let report = SimulationReport {
        policy,
        fuel_g: s.fuel_g,
        soc_start: s.soc_start,
        soc_end: s.soc_end,
        soc_variation: s.soc_variation(),
        steps: s.steps,
        terminated: s.terminated,
        reward_sum,
    };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    let path = dir.join("simulation.json");
    std::fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "{}: fuel {:.3} g, SOC {:.4} -> {:.4} (ΔSOC {:.4}), {} steps{}",
        report.policy,
        s.fuel_g,
        s.soc_start,
        s.soc_end,
        s.soc_variation(),
        s.steps,
        if s.terminated { ", terminated early" } else { "" }
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn train(a: RunArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.algorithm.seed = seed;
    }
    let started = Instant::now();
    let result = run_one(&cfg, &AvailabilityThresholds::default())?;
    let hash = cfg.hash();
    let summary = RunSummary::new(&hash, cfg.algorithm.seed, cfg.algorithm.name.name(), cfg.algorithm.episodes, &result);
    let dir = a.output.dir(&cfg.output.dir);
    write_run_files(&result, &cfg.to_toml(), &summary, &dir)?;
    let s = result.final_eval.summary;
    println!(
        "{} x{} episodes: greedy fuel {:.3} g, ΔSOC {:.4}, {} steps{}, label {}",
        cfg.algorithm.name,
        cfg.algorithm.episodes,
        s.fuel_g,
        s.soc_variation(),
        s.steps,
        if s.terminated { " (terminated)" } else { "" },
        summary.label.map_or("n/a".to_string(), |l| l.to_string()),
    );
    println!("wrote {}", dir.display());
    eprintln!("elapsed {:.2} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    if !a.config.is_file() {
        bail!(Error::Config {
            key: "--config".into(),
            msg: format!("{} is not a readable file", a.config.display()),
        });
    }
    let mut spec = SweepSpec::load(&a.config)?;
    if let Some(seed) = a.seed {
        spec.master_seed = seed;
    }
    if let Some(w) = a.workers {
        spec.workers = w;
    }
    let started = Instant::now();
    let records = run_sweep(&spec)?;
    let dir = a.output.dir(&spec.base.output.dir);
    let meta = ReportMeta {
        master_seed: spec.master_seed,
        axes: spec.axes.iter().map(|x| x.path.clone()).collect(),
        thresholds: spec.thresholds,
        heatmap: spec.heatmap.clone(),
    };
    export_report(&records, &meta, &dir)?;
    let ok = records.iter().filter(|r| r.outcome.is_ok()).count();
    for r in records.iter().filter(|r| r.outcome.is_err()) {
        eprintln!("run {} failed: {}", r.run.index, r.outcome.as_ref().unwrap_err());
    }
    println!("{ok}/{} runs succeeded; report in {}", records.len(), dir.display());
    eprintln!("elapsed {:.2} s", started.elapsed().as_secs_f64());
    if ok == 0 && !records.is_empty() {
        bail!("every run failed");
    }
    Ok(())
}

fn oracle_check() -> Result<()> {
    let checks = oracle_suite()?;
    let mut failed = 0;
    for c in &checks {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        println!("{verdict}  {:<48} residual {:.3e}  (tol {:.1e})", c.name, c.residual, c.tolerance);
        failed += usize::from(!c.passed());
    }
    if failed > 0 {
        return Err(CheckFailed(failed).into());
    }
    Ok(())
}
