//! Browser bindings. Every entry point returns a JSON string so the page needs no glue types.

use std::sync::Arc;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ems_core::cycle::DriveCycle;
use ems_core::envmdp::{EmsEnvironment, EnvSettings, RewardKind};
use ems_core::powertrain::reference::{fcev_motor_map, phev_engine_map, phev_motor_map, reference_phev};
use ems_core::powertrain::{Plant, TorqueSpeedMap};
use ems_core::tabrl::{train, Algorithm, Hyperparams};

/// Cap on training length so a click never hangs the tab.
pub const MAX_EPISODES: u32 = 1000;

fn phev_env(settings: &EnvSettings) -> Result<EmsEnvironment, String> {
    let plant = Arc::new(Plant::Phev(reference_phev()));
    EmsEnvironment::new(plant, Arc::new(DriveCycle::wltc_class3b()), settings).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn error_json(msg: String) -> String {
    to_json(&serde_json::json!({ "error": msg }))
}

#[derive(Serialize)]
struct Episode {
    fuel_g: f64,
    soc_start: f64,
    soc_end: f64,
    steps: usize,
    terminated: bool,
    speed_kph: Vec<f64>,
    soc: Vec<f64>,
}

/// Drives the reference PHEV over WLTC with a constant engine torque share `split` in [0, 1].
#[wasm_bindgen]
pub fn simulate_fixed_split(split: f64, start_soc: f64) -> String {
    let run = || -> Result<Episode, String> {
        if !(0.0..=1.0).contains(&split) || !(0.0..=1.0).contains(&start_soc) {
            return Err("split and start SOC must be in [0, 1]".into());
        }
        let mut env = phev_env(&EnvSettings::default())?;
        env.set_recording(true);
        env.reset(start_soc).map_err(|e| e.to_string())?;
        while !env.is_done() {
            env.step_command(split).map_err(|e| e.to_string())?;
        }
        let s = env.summary();
        let traj = env.take_trajectory().unwrap_or_default();
        Ok(Episode {
            fuel_g: s.fuel_g,
            soc_start: s.soc_start,
            soc_end: s.soc_end,
            steps: s.steps,
            terminated: s.terminated,
            speed_kph: env.cycle().speeds().iter().map(|v| v * 3.6).collect(),
            soc: traj.soc,
        })
    };
    run().map_or_else(error_json, |e| to_json(&e))
}

#[derive(Serialize)]
struct Training {
    episodes: usize,
    curve_episode: Vec<usize>,
    curve_reward: Vec<f64>,
    curve_soc_variation: Vec<f64>,
    greedy: Episode,
}

/// Q-learning on the reference PHEV with the instantaneous equivalent-consumption reward.
#[wasm_bindgen]
pub fn train_qlearning(equivalence_factor: f64, episodes: u32, seed: u32) -> String {
    let run = || -> Result<Training, String> {
        let episodes = episodes.clamp(1, MAX_EPISODES) as usize;
        let settings = EnvSettings {
            reward: RewardKind::EqInstant,
            equivalence_factor,
            ..Default::default()
        };
        let mut env = phev_env(&settings)?;
        let h = Hyperparams {
            alpha_lr: 0.1,
            epsilon: 0.1,
            gamma: 0.9,
            episodes,
            start_soc: 0.6,
            eval_every: (episodes / 25).max(1),
            seed: u64::from(seed),
            ..Default::default()
        };
        let out = train(Algorithm::QLearning, &mut env, &h).map_err(|e| e.to_string())?;
        let s = out.final_eval.summary;
        Ok(Training {
            episodes,
            curve_episode: out.curve.iter().map(|p| p.episode).collect(),
            curve_reward: out.curve.iter().map(|p| p.reward_sum).collect(),
            curve_soc_variation: out.curve.iter().map(|p| p.soc_variation).collect(),
            greedy: Episode {
                fuel_g: s.fuel_g,
                soc_start: s.soc_start,
                soc_end: s.soc_end,
                steps: s.steps,
                terminated: s.terminated,
                speed_kph: env.cycle().speeds().iter().map(|v| v * 3.6).collect(),
                soc: out.final_eval.trajectory.map(|t| t.soc).unwrap_or_default(),
            },
        })
    };
    run().map_or_else(error_json, |t| to_json(&t))
}

#[derive(Serialize)]
struct MapGrid {
    speed_rpm: Vec<f64>,
    torque_nm: Vec<f64>,
    /// `efficiency[torque][speed]`; `null` outside the torque envelope.
    efficiency: Vec<Vec<Option<f64>>>,
}

fn sample(map: &TorqueSpeedMap, n: usize) -> MapGrid {
    let n = n.clamp(2, 200);
    let w_max = map.speed_axis.last().copied().unwrap_or(0.0);
    let t_lo = map.min_torque.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_hi = map.max_torque.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let speeds: Vec<f64> = (0..n).map(|i| at(0.0, w_max, i)).collect();
    let torques: Vec<f64> = (0..n).map(|i| at(t_lo, t_hi, i)).collect();
    let efficiency = torques
        .iter()
        .map(|&t| {
            speeds
                .iter()
                .map(|&w| {
                    let (lo, hi) = map.torque_limits(w);
                    (t >= lo - 1e-9 && t <= hi + 1e-9).then(|| map.efficiency_at(t, w))
                })
                .collect()
        })
        .collect();
    MapGrid {
        speed_rpm: speeds.iter().map(|w| w * 30.0 / std::f64::consts::PI).collect(),
        torque_nm: torques,
        efficiency,
    }
}

/// Efficiency map of `"engine"`, `"motor"` (PHEV) or `"fcev_motor"` on an `n × n` grid.
#[wasm_bindgen]
pub fn efficiency_map(component: &str, n: u32) -> String {
    let map = match component {
        "engine" => phev_engine_map(),
        "motor" => phev_motor_map(),
        "fcev_motor" => fcev_motor_map(),
        other => return error_json(format!("unknown component `{other}`")),
    };
    to_json(&sample(&map, n as usize))
}
