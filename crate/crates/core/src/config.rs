//! TOML run configuration: vehicle, cycle, environment, algorithm and output sections.
//!
//! Relative file paths resolve against the directory holding the config file. Any component
//! file left out falls back to the built-in reference data.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cycle::{load_cycle, DriveCycle, SpeedUnit};
use crate::envmdp::{EmsEnvironment, EnvSettings};
use crate::error::{Error, Result};
use crate::powertrain::{io, reference, Fcev, Phev, Plant, VehicleKind, VehicleParams};
use crate::tabrl::{Algorithm, Hyperparams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub vehicle: VehicleSection,
    #[serde(default)]
    pub cycle: CycleSection,
    #[serde(default)]
    pub env: EnvSettings,
    #[serde(default)]
    pub algorithm: AlgorithmSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    pub kind: Option<VehicleKind>,
    pub mass: Option<f64>,
    pub drag_coeff: Option<f64>,
    pub frontal_area: Option<f64>,
    pub roll_coeff: Option<f64>,
    pub grade: Option<f64>,
    pub wheel_radius: Option<f64>,
    pub gear_ratios: Option<Vec<f64>>,
    pub final_ratio: Option<f64>,
    pub engine_map: Option<PathBuf>,
    pub engine_limits: Option<PathBuf>,
    pub motor_map: Option<PathBuf>,
    pub motor_limits: Option<PathBuf>,
    pub battery: Option<PathBuf>,
    pub battery_capacity_ah: Option<f64>,
    pub battery_rint: Option<f64>,
    pub fc_power_current: Option<PathBuf>,
    pub fc_current_efficiency: Option<PathBuf>,
    pub fc_max_power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleSection {
    /// CSV speed trace; the bundled WLTC class 3b when absent.
    pub path: Option<PathBuf>,
    pub unit: SpeedUnit,
    /// Keep only the first N samples.
    pub truncate: Option<usize>,
}

impl Default for CycleSection {
    fn default() -> Self {
        CycleSection {
            path: None,
            unit: SpeedUnit::Kph,
            truncate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmSection {
    pub name: Algorithm,
    pub alpha_lr: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub start_soc: f64,
    /// Required for `sarsa_lambda`.
    pub lambda: Option<f64>,
    pub eval_every: usize,
    pub eval_epsilon: f64,
    pub seed: u64,
}

impl Default for AlgorithmSection {
    fn default() -> Self {
        let h = Hyperparams::default();
        AlgorithmSection {
            name: Algorithm::QLearning,
            alpha_lr: h.alpha_lr,
            epsilon: h.epsilon,
            gamma: h.gamma,
            episodes: h.episodes,
            start_soc: h.start_soc,
            lambda: None,
            eval_every: h.eval_every,
            eval_epsilon: h.eval_epsilon,
            seed: h.seed,
        }
    }
}

impl AlgorithmSection {
    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            alpha_lr: self.alpha_lr,
            epsilon: self.epsilon,
            gamma: self.gamma,
            episodes: self.episodes,
            start_soc: self.start_soc,
            lambda: self.lambda.unwrap_or(Hyperparams::default().lambda),
            eval_every: self.eval_every,
            eval_epsilon: self.eval_epsilon,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

fn toml_error(origin: &Path, e: toml::de::Error) -> Error {
    let key = e.message().split('`').nth(1).unwrap_or("").to_string();
    Error::Config {
        key: if key.is_empty() { origin.display().to_string() } else { key },
        msg: format!("{}: {}", origin.display(), e.message().trim()),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path, origin: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| toml_error(origin, e))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Self::from_toml_str(&text, &base, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// A config for the given vehicle with every other section at its defaults.
    pub fn reference(kind: VehicleKind) -> Self {
        RunConfig {
            vehicle: VehicleSection {
                kind: Some(kind),
                ..Default::default()
            },
            cycle: CycleSection::default(),
            env: EnvSettings::default(),
            algorithm: AlgorithmSection::default(),
            output: OutputSection::default(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn kind(&self) -> VehicleKind {
        self.vehicle.kind.unwrap_or(VehicleKind::Phev)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Range checks on every section; file existence is checked when the plant is built.
    pub fn validate(&self) -> Result<()> {
        let c = &self.env.constraints;
        c.validate()?;
        for (key, n) in [
            ("env.pdem_points", self.env.pdem_points),
            ("env.soc_points", self.env.soc_points),
            ("env.action_points", self.env.action_points),
        ] {
            if n < 2 {
                return Err(Error::config(key, format!("needs at least 2 points, got {n}")));
            }
        }
        if let Some((lo, hi)) = self.env.soc_range {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(Error::config("env.soc_range", "need 0 <= lo < hi <= 1"));
            }
        }
        if !self.env.tau.is_finite() {
            return Err(Error::config("env.tau", "must be finite"));
        }
        if !(self.env.equivalence_factor.is_finite() && self.env.equivalence_factor >= 0.0) {
            return Err(Error::config("env.equivalence_factor", "must be finite and >= 0"));
        }
        if let Some(v) = self.env.v_bat {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config("env.v_bat", "must be positive"));
            }
        }
        if self.cycle.truncate == Some(0) {
            return Err(Error::config("cycle.truncate", "must keep at least one sample"));
        }
        let a = &self.algorithm;
        if a.name == Algorithm::SarsaLambda && a.lambda.is_none() {
            return Err(Error::config("algorithm.lambda", "required for sarsa_lambda"));
        }
        a.hyperparams().validate()?;

        let v = &self.vehicle;
        for (key, x) in [
            ("vehicle.battery_capacity_ah", v.battery_capacity_ah),
            ("vehicle.battery_rint", v.battery_rint),
            ("vehicle.fc_max_power", v.fc_max_power),
        ] {
            if let Some(x) = x {
                if !(x.is_finite() && x > 0.0) {
                    return Err(Error::config(key, "must be positive"));
                }
            }
        }
        for (a, b, key) in [
            (&v.engine_map, &v.engine_limits, "vehicle.engine_map"),
            (&v.motor_map, &v.motor_limits, "vehicle.motor_map"),
            (&v.fc_power_current, &v.fc_current_efficiency, "vehicle.fc_power_current"),
        ] {
            if a.is_some() != b.is_some() {
                return Err(Error::config(key, "map and its companion file must be given together"));
            }
        }
        let fcev_only = v.fc_power_current.is_some() || v.fc_max_power.is_some();
        let phev_only = v.engine_map.is_some();
        match self.kind() {
            VehicleKind::Phev if fcev_only => {
                return Err(Error::config("vehicle.kind", "fuel-cell files given for a phev"))
            }
            VehicleKind::Fcev if phev_only => {
                return Err(Error::config("vehicle.kind", "engine files given for an fcev"))
            }
            _ => {}
        }
        self.vehicle_params().validate()
    }

    fn vehicle_params(&self) -> VehicleParams {
        let v = &self.vehicle;
        let mut p = match self.kind() {
            VehicleKind::Phev => VehicleParams::phev_reference(),
            VehicleKind::Fcev => VehicleParams::fcev_reference(),
        };
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(x) = src {
                *dst = x;
            }
        };
        set(&mut p.mass, v.mass);
        set(&mut p.drag_coeff, v.drag_coeff);
        set(&mut p.frontal_area, v.frontal_area);
        set(&mut p.roll_coeff, v.roll_coeff);
        set(&mut p.grade, v.grade);
        set(&mut p.wheel_radius, v.wheel_radius);
        set(&mut p.final_ratio, v.final_ratio);
        if let Some(g) = &v.gear_ratios {
            p.gear_ratios = g.clone();
        }
        p
    }

    /// Every data file the config points at, resolved.
    pub fn input_files(&self) -> Vec<PathBuf> {
        let v = &self.vehicle;
        [
            &v.engine_map,
            &v.engine_limits,
            &v.motor_map,
            &v.motor_limits,
            &v.battery,
            &v.fc_power_current,
            &v.fc_current_efficiency,
            &self.cycle.path,
        ]
        .into_iter()
        .flatten()
        .map(|p| self.resolve(p))
        .collect()
    }

    pub fn build_plant(&self) -> Result<Plant> {
        let v = &self.vehicle;
        let vehicle = self.vehicle_params();
        let read_map = |m: &Option<PathBuf>, l: &Option<PathBuf>| -> Result<Option<_>> {
            match (m, l) {
                (Some(m), Some(l)) => io::read_map(&self.resolve(m), &self.resolve(l)).map(Some),
                _ => Ok(None),
            }
        };
        let battery = |default: crate::powertrain::BatteryModel| -> Result<_> {
            let capacity = v.battery_capacity_ah.unwrap_or(default.capacity_ah);
            let mut b = match &v.battery {
                Some(p) => io::read_battery(&self.resolve(p), capacity, v.battery_rint)?,
                None => default,
            };
            b.capacity_ah = capacity;
            if let Some(r) = v.battery_rint {
                b.resistance = crate::powertrain::Resistance::Constant(r);
            }
            b.validate()?;
            Ok(b)
        };
        let plant = match self.kind() {
            VehicleKind::Phev => {
                let base = reference::reference_phev();
                Plant::Phev(Phev {
                    vehicle,
                    engine: read_map(&v.engine_map, &v.engine_limits)?.unwrap_or(base.engine),
                    motor: read_map(&v.motor_map, &v.motor_limits)?.unwrap_or(base.motor),
                    battery: battery(base.battery)?,
                    engine_speed_bounds: base.engine_speed_bounds,
                    q_lhv: base.q_lhv,
                })
            }
            VehicleKind::Fcev => {
                let base = reference::reference_fcev();
                let max_power = v.fc_max_power.unwrap_or(base.fuel_cell.max_power);
                let fuel_cell = match (&v.fc_power_current, &v.fc_current_efficiency) {
                    (Some(a), Some(b)) => io::read_fuel_cell(&self.resolve(a), &self.resolve(b), max_power)?,
                    _ => base.fuel_cell,
                };
                Plant::Fcev(Fcev {
                    vehicle,
                    motor: read_map(&v.motor_map, &v.motor_limits)?.unwrap_or(base.motor),
                    battery: battery(base.battery)?,
                    fuel_cell,
                    q_lhv_h2: base.q_lhv_h2,
                })
            }
        };
        Ok(plant)
    }

    pub fn build_cycle(&self) -> Result<DriveCycle> {
        let cycle = match &self.cycle.path {
            Some(p) => load_cycle(self.resolve(p), self.cycle.unit)?,
            None => DriveCycle::wltc_class3b(),
        };
        match self.cycle.truncate {
            Some(n) if n < cycle.len() => cycle.truncated(n),
            _ => Ok(cycle),
        }
    }

    pub fn build_env(&self) -> Result<EmsEnvironment> {
        let plant = Arc::new(self.build_plant()?);
        let cycle = Arc::new(self.build_cycle()?);
        EmsEnvironment::new(plant, cycle, &self.env)
    }

    /// Hex SHA-256 of the canonical JSON form (base directory excluded).
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("run config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Sets a dotted `section.key` to `value`. `env.state_points` sets both state grids.
    pub fn with_value(&self, path: &str, value: &toml::Value) -> Result<Self> {
        if path == "env.state_points" {
            return self
                .with_value("env.pdem_points", value)?
                .with_value("env.soc_points", value);
        }
        let mut doc = toml::Value::try_from(self).map_err(|e| Error::config(path, e.to_string()))?;
        let parts: Vec<&str> = path.split('.').collect();
        set_path(&mut doc, &parts, value).map_err(|msg| Error::config(path, msg))?;
        let mut out: RunConfig = doc.try_into().map_err(|e: toml::de::Error| Error::Config {
            key: path.to_string(),
            msg: e.message().trim().to_string(),
        })?;
        out.base_dir = self.base_dir.clone();
        out.validate()?;
        Ok(out)
    }
}

fn set_path(node: &mut toml::Value, parts: &[&str], value: &toml::Value) -> std::result::Result<(), String> {
    let table = node.as_table_mut().ok_or("not a table")?;
    match parts {
        [] => Err("empty path".into()),
        [last] => {
            let coerced = match (table.get(*last), value) {
                (Some(toml::Value::Float(_)), toml::Value::Integer(n)) => toml::Value::Float(*n as f64),
                _ => value.clone(),
            };
            table.insert(last.to_string(), coerced);
            Ok(())
        }
        [head, rest @ ..] => {
            let child = table
                .entry(head.to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()));
            set_path(child, rest, value)
        }
    }
}
