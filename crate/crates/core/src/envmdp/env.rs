use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{ActionKind, ActionSpec, Grid, StateSpec};
use super::reward::{ConstraintSpec, RewardKind, RewardSpec};
use crate::cycle::DriveCycle;
use crate::error::{Error, Result};
use crate::powertrain::{road_load, OperatingPoint, Plant, StepOutcome, VehicleKind, WheelDemand};

/// Grid resolution and reward settings used to build an [`EmsEnvironment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSettings {
    pub pdem_points: usize,
    pub soc_points: usize,
    pub action_points: usize,
    /// SOC grid range; the constraint band when absent.
    pub soc_range: Option<(f64, f64)>,
    pub reward: RewardKind,
    pub tau: f64,
    pub equivalence_factor: f64,
    /// Nominal pack voltage for the equivalence factor; OCV at 50% SOC when absent.
    pub v_bat: Option<f64>,
    pub constraints: ConstraintSpec,
}

impl Default for EnvSettings {
    fn default() -> Self {
        EnvSettings {
            pdem_points: 21,
            soc_points: 21,
            action_points: 11,
            soc_range: None,
            reward: RewardKind::FuelMin,
            tau: 1.0,
            equivalence_factor: 1.0,
            v_bat: None,
            constraints: ConstraintSpec::default(),
        }
    }
}

/// One environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    /// Total reward, penalty included.
    pub reward: f64,
    /// The constraint part of `reward` (≤ 0).
    pub penalty: f64,
    pub next_state: usize,
    pub done: bool,
    /// SOC left the band, or the battery could not supply the request.
    pub violated: bool,
    /// `None` when the plant rejected the command.
    pub info: Option<StepOutcome>,
}

/// Per-step record of an episode, kept only while recording is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub speed: f64,
    pub pdem: f64,
    pub command: f64,
    pub soc: f64,
    pub fuel_g: f64,
    pub reward: f64,
    pub source: OperatingPoint,
    pub motor: OperatingPoint,
    pub gear: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// SOC before the first step and after every step.
    pub soc: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

/// Aggregate numbers for the current (or just finished) episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub fuel_g: f64,
    pub soc_start: f64,
    pub soc_end: f64,
    pub steps: usize,
    /// Ended before the cycle did.
    pub terminated: bool,
}

impl EpisodeSummary {
    /// `soc_start − soc_end`: positive when the battery was drawn down.
    pub fn soc_variation(&self) -> f64 {
        self.soc_start - self.soc_end
    }
}

/// A plant driven along a cycle, exposed as a discrete MDP over (demanded power, SOC).
#[derive(Debug, Clone)]
pub struct EmsEnvironment {
    plant: Arc<Plant>,
    cycle: Arc<DriveCycle>,
    demands: Arc<Vec<WheelDemand>>,
    pub state_spec: StateSpec,
    pub action_spec: ActionSpec,
    pub reward: RewardSpec,
    pub constraints: ConstraintSpec,
    step: usize,
    soc: f64,
    soc_start: f64,
    fuel: f64,
    done: bool,
    terminated: bool,
    recording: Option<Trajectory>,
}

impl EmsEnvironment {
    pub fn new(plant: Arc<Plant>, cycle: Arc<DriveCycle>, settings: &EnvSettings) -> Result<Self> {
        let demands = Arc::new(wheel_demands(&plant, &cycle)?);
        Self::with_demands(plant, cycle, demands, settings)
    }

    /// Like [`EmsEnvironment::new`] but reuses precomputed demands (cheap clones for sweeps).
    pub fn with_demands(
        plant: Arc<Plant>,
        cycle: Arc<DriveCycle>,
        demands: Arc<Vec<WheelDemand>>,
        settings: &EnvSettings,
    ) -> Result<Self> {
        if demands.len() != cycle.len() {
            return Err(Error::invalid("environment", "demand list does not match the cycle"));
        }
        if cycle.is_empty() {
            return Err(Error::invalid("environment", "drive cycle is empty"));
        }
        settings.constraints.validate()?;

        let (lo, hi) = demands
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d.power), hi.max(d.power)));
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
        let pdem = Grid::new(lo, hi, settings.pdem_points).map_err(|e| grid_error("env.pdem_points", e))?;

        let c = settings.constraints;
        let (soc_lo, soc_hi) = settings.soc_range.unwrap_or((c.soc_min, c.soc_max));
        let soc = Grid::new(soc_lo, soc_hi, settings.soc_points).map_err(|e| grid_error("env.soc_points", e))?;

        let action_spec = match plant.kind() {
            VehicleKind::Phev => ActionSpec::torque_split(settings.action_points),
            VehicleKind::Fcev => match plant.as_ref() {
                Plant::Fcev(f) => ActionSpec::fc_power(settings.action_points, f.fuel_cell.max_power),
                Plant::Phev(_) => unreachable!(),
            },
        }
        .map_err(|e| grid_error("env.action_points", e))?;

        let battery = plant.battery();
        let reward = RewardSpec {
            kind: settings.reward,
            tau: settings.tau,
            equivalence_factor: settings.equivalence_factor,
            v_bat: settings.v_bat.unwrap_or_else(|| battery.open_circuit_voltage(0.5)),
            q_max: battery.capacity_ah,
            q_lhv: plant.fuel_lhv(),
        };
        reward.validate()?;

        Ok(EmsEnvironment {
            plant,
            cycle,
            demands,
            state_spec: StateSpec { pdem, soc },
            action_spec,
            reward,
            constraints: c,
            step: 0,
            soc: 0.5,
            soc_start: 0.5,
            fuel: 0.0,
            done: true,
            terminated: false,
            recording: None,
        })
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn cycle(&self) -> &DriveCycle {
        &self.cycle
    }

    pub fn demands(&self) -> &Arc<Vec<WheelDemand>> {
        &self.demands
    }

    pub fn n_states(&self) -> usize {
        self.state_spec.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.action_spec.n_actions()
    }

    pub fn soc(&self) -> f64 {
        self.soc
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            fuel_g: self.fuel,
            soc_start: self.soc_start,
            soc_end: self.soc,
            steps: self.step,
            terminated: self.terminated,
        }
    }

    /// Start keeping a [`Trajectory`]; it restarts at each reset.
    pub fn set_recording(&mut self, on: bool) {
        self.recording = on.then(Trajectory::default);
    }

    pub fn take_trajectory(&mut self) -> Option<Trajectory> {
        self.recording.take()
    }

    fn state_at(&self, step: usize, soc: f64) -> usize {
        let k = step.min(self.demands.len() - 1);
        self.state_spec.encode(self.demands[k].power, soc)
    }

    pub fn reset(&mut self, start_soc: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&start_soc) {
            return Err(Error::config("start_soc", format!("{start_soc} is outside [0, 1]")));
        }
        self.step = 0;
        self.soc = start_soc;
        self.soc_start = start_soc;
        self.fuel = 0.0;
        self.done = false;
        self.terminated = false;
        if let Some(t) = self.recording.as_mut() {
            *t = Trajectory {
                soc: vec![start_soc],
                steps: Vec::new(),
            };
        }
        Ok(self.state_at(0, start_soc))
    }

    /// Step with a discrete action index.
    pub fn step(&mut self, action: usize) -> Result<Transition> {
        if action >= self.n_actions() {
            return Err(Error::IndexOutOfRange {
                index: action,
                len: self.n_actions(),
            });
        }
        let command = self.action_spec.decode(action);
        self.step_with(action, command)
    }

    /// Step with a raw physical command (split fraction or fuel-cell watts); used by fixed
    /// policies. The reported action is the nearest grid index.
    pub fn step_command(&mut self, command: f64) -> Result<Transition> {
        let action = self.action_spec.grid.discretize(command);
        self.step_with(action, command)
    }

    fn step_with(&mut self, action: usize, command: f64) -> Result<Transition> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let k = self.step;
        let state = self.state_at(k, self.soc);
        let demand = self.demands[k];
        let soc_now = self.soc;
        let c = self.constraints;
        let battery = self.plant.battery();

        let outcome = match self.plant.step(soc_now, command, &demand, self.cycle.dt) {
            Ok(o) => Some(o),
            Err(Error::PowerInfeasible { .. }) | Err(Error::PowerOutOfRange { .. }) => None,
            Err(e) => return Err(e),
        };

        self.step += 1;
        let last = self.step >= self.demands.len();
        let (reward, penalty, violated, done) = match &outcome {
            Some(o) => {
                let soc_next = soc_now + o.delta_soc;
                let base = self.reward.reward(o.fuel_g, soc_now, soc_next, self.soc_start);
                let penalty = c.penalty(soc_next);
                let violated = c.violated(soc_next);
                let physical = soc_next < battery.soc_hard_floor || soc_next > battery.soc_hard_ceiling;
                self.soc = soc_next;
                self.fuel += o.fuel_g;
                let stop = physical || (violated && c.terminate_on_violation);
                (base + penalty, penalty, violated, last || stop)
            }
            // one full unit of SOC violation: worse than any in-band outcome
            None => (-c.w_chg, -c.w_chg, true, true),
        };
        self.done = done;
        self.terminated = done && !last;

        if let (Some(t), Some(o)) = (self.recording.as_mut(), &outcome) {
            t.soc.push(self.soc);
            t.steps.push(StepRecord {
                step: k,
                time: k as f64 * self.cycle.dt,
                speed: demand.speed * self.plant.vehicle().wheel_radius,
                pdem: demand.power,
                command,
                soc: self.soc,
                fuel_g: o.fuel_g,
                reward,
                source: o.source_point,
                motor: o.motor_point,
                gear: o.gear,
            });
        }

        Ok(Transition {
            state,
            action,
            reward,
            penalty,
            next_state: self.state_at(self.step, self.soc),
            done,
            violated,
            info: outcome,
        })
    }

    /// Rule-based reference command: engine-only for the PHEV, load following for the FCEV.
    pub fn baseline_command(&self) -> f64 {
        match self.plant.as_ref() {
            Plant::Phev(_) => 1.0,
            Plant::Fcev(f) => {
                let k = self.step.min(self.demands.len() - 1);
                let p = self.demands[k].power;
                p.clamp(0.0, f.fuel_cell.max_power)
            }
        }
    }
}

fn grid_error(key: &str, e: Error) -> Error {
    Error::config(key, e.to_string())
}

/// Wheel demand at every cycle sample.
pub fn wheel_demands(plant: &Plant, cycle: &DriveCycle) -> Result<Vec<WheelDemand>> {
    let v = plant.vehicle();
    v.validate()?;
    (0..cycle.len())
        .map(|k| Ok(road_load(v, cycle.speeds()[k], cycle.accel_at(k)?)))
        .collect()
}

/// Runs one episode with a fixed physical command and returns its summary.
pub fn run_fixed(env: &mut EmsEnvironment, start_soc: f64, command: f64) -> Result<EpisodeSummary> {
    env.reset(start_soc)?;
    while !env.is_done() {
        env.step_command(command)?;
    }
    Ok(env.summary())
}

/// Runs one episode with [`EmsEnvironment::baseline_command`].
pub fn run_baseline(env: &mut EmsEnvironment, start_soc: f64) -> Result<EpisodeSummary> {
    env.reset(start_soc)?;
    while !env.is_done() {
        let cmd = env.baseline_command();
        env.step_command(cmd)?;
    }
    Ok(env.summary())
}

impl ActionKind {
    pub fn label(&self) -> &'static str {
        match self {
            ActionKind::TorqueSplit => "torque_split",
            ActionKind::FcPower => "fc_power",
        }
    }
}
