//! One-step backward evaluation of the PHEV and FCEV powertrains.

use serde::{Deserialize, Serialize};

use super::battery::BatteryModel;
use super::fuel_cell::FuelCellCurves;
use super::map::{engine_fuel_rate, motor_power, TorqueSpeedMap};
use super::vehicle::{select_gear, VehicleParams, WheelDemand};
use crate::error::Result;

/// Gasoline lower heating value, J/g.
pub const GASOLINE_LHV: f64 = 42_600.0;
/// Hydrogen lower heating value, J/g.
pub const HYDROGEN_LHV: f64 = 120_000.0;

/// A realized (torque or power, speed, efficiency) triple.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Nm for engines and motors, W for the fuel cell.
    pub load: f64,
    /// rad/s for engines and motors, A for the fuel cell.
    pub speed: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Grams of fuel (PHEV) or hydrogen (FCEV) consumed this step.
    pub fuel_g: f64,
    /// SOC change over the step (positive when charging).
    pub delta_soc: f64,
    /// A, positive when discharging.
    pub battery_current: f64,
    /// W drawn from the battery, positive when discharging.
    pub battery_power: f64,
    /// Engine (PHEV) or fuel cell (FCEV) operating point.
    pub source_point: OperatingPoint,
    pub motor_point: OperatingPoint,
    /// Gear index (PHEV only; 0 for single-speed drives).
    pub gear: usize,
    /// Any torque limit was active.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phev {
    pub vehicle: VehicleParams,
    pub engine: TorqueSpeedMap,
    pub motor: TorqueSpeedMap,
    pub battery: BatteryModel,
    /// Allowed engine speed band for gear selection, rad/s (idle, max).
    pub engine_speed_bounds: (f64, f64),
    pub q_lhv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fcev {
    pub vehicle: VehicleParams,
    pub motor: TorqueSpeedMap,
    pub battery: BatteryModel,
    pub fuel_cell: FuelCellCurves,
    pub q_lhv_h2: f64,
}

fn clamp_flagged(x: f64, lo: f64, hi: f64, flag: &mut bool) -> f64 {
    if x < lo {
        *flag = true;
        lo
    } else if x > hi {
        *flag = true;
        hi
    } else {
        x
    }
}

fn battery_step(battery: &BatteryModel, soc: f64, power: f64, dt: f64) -> Result<(f64, f64)> {
    let current = battery.current(soc, power)?;
    Ok((current, battery.soc_delta(current, dt)))
}

impl Phev {
    /// `split` is the engine's share of positive shaft torque. Negative shaft torque goes to the
    /// motor up to its generating limit; friction brakes absorb the rest.
    pub fn step(&self, soc: f64, split: f64, demand: &WheelDemand, dt: f64) -> Result<StepOutcome> {
        debug_assert!((0.0..=1.0).contains(&split));
        let v = &self.vehicle;
        let gear = select_gear(v, demand.speed, self.engine_speed_bounds);
        let ratio = v.gear_ratios[gear] * v.final_ratio;
        let shaft_torque = demand.torque / ratio;
        let shaft_speed = demand.speed * ratio;
        // map lookups never go below idle
        let lookup_speed = shaft_speed.max(self.engine_speed_bounds.0);

        let mut clamped = false;
        let (engine_torque, motor_torque) = if shaft_torque >= 0.0 {
            let (_, engine_max) = self.engine.torque_limits(lookup_speed);
            let te = clamp_flagged(split * shaft_torque, 0.0, engine_max, &mut clamped);
            let (m_min, m_max) = self.motor.torque_limits(shaft_speed);
            let tm = clamp_flagged(shaft_torque - te, m_min, m_max, &mut clamped);
            (te, tm)
        } else {
            let (m_min, _) = self.motor.torque_limits(shaft_speed);
            (0.0, clamp_flagged(shaft_torque, m_min, 0.0, &mut clamped))
        };

        let fuel_rate = engine_fuel_rate(&self.engine, engine_torque, shaft_speed, self.q_lhv);
        let engine_eff = self.engine.efficiency_at(engine_torque, lookup_speed);
        let motor_eff = self.motor.efficiency_at(motor_torque, shaft_speed);
        let battery_power = motor_power(motor_torque, shaft_speed, motor_eff);
        let (battery_current, delta_soc) = battery_step(&self.battery, soc, battery_power, dt)?;

        Ok(StepOutcome {
            fuel_g: fuel_rate * dt,
            delta_soc,
            battery_current,
            battery_power,
            source_point: OperatingPoint {
                load: engine_torque,
                speed: shaft_speed,
                efficiency: engine_eff,
            },
            motor_point: OperatingPoint {
                load: motor_torque,
                speed: shaft_speed,
                efficiency: motor_eff,
            },
            gear,
            clamped,
        })
    }
}

impl Fcev {
    /// The fuel cell delivers `fc_power` W to the bus; the battery covers the difference to the
    /// motor's electrical demand (and absorbs any surplus).
    pub fn step(&self, soc: f64, fc_power: f64, demand: &WheelDemand, dt: f64) -> Result<StepOutcome> {
        let v = &self.vehicle;
        let ratio = v.gear_ratios[0] * v.final_ratio;
        let speed = demand.speed * ratio;
        let (m_min, m_max) = self.motor.torque_limits(speed);
        let mut clamped = false;
        let torque = clamp_flagged(demand.torque / ratio, m_min, m_max, &mut clamped);
        let motor_eff = self.motor.efficiency_at(torque, speed);
        let motor_electric = motor_power(torque, speed, motor_eff);

        let fc = self.fuel_cell.hydrogen_rate(fc_power, self.q_lhv_h2)?;
        let battery_power = motor_electric - fc_power;
        let (battery_current, delta_soc) = battery_step(&self.battery, soc, battery_power, dt)?;

        Ok(StepOutcome {
            fuel_g: fc.h2_rate * dt,
            delta_soc,
            battery_current,
            battery_power,
            source_point: OperatingPoint {
                load: fc_power,
                speed: fc.current,
                efficiency: fc.efficiency,
            },
            motor_point: OperatingPoint {
                load: torque,
                speed,
                efficiency: motor_eff,
            },
            gear: 0,
            clamped,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleKind {
    Phev,
    Fcev,
}

impl std::fmt::Display for VehicleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VehicleKind::Phev => "phev",
            VehicleKind::Fcev => "fcev",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Plant {
    Phev(Phev),
    Fcev(Fcev),
}

impl Plant {
    pub fn kind(&self) -> VehicleKind {
        match self {
            Plant::Phev(_) => VehicleKind::Phev,
            Plant::Fcev(_) => VehicleKind::Fcev,
        }
    }

    pub fn vehicle(&self) -> &VehicleParams {
        match self {
            Plant::Phev(p) => &p.vehicle,
            Plant::Fcev(p) => &p.vehicle,
        }
    }

    pub fn battery(&self) -> &BatteryModel {
        match self {
            Plant::Phev(p) => &p.battery,
            Plant::Fcev(p) => &p.battery,
        }
    }

    pub fn fuel_lhv(&self) -> f64 {
        match self {
            Plant::Phev(p) => p.q_lhv,
            Plant::Fcev(p) => p.q_lhv_h2,
        }
    }

    /// `command` is the torque split for a PHEV and fuel-cell power in W for an FCEV.
    pub fn step(&self, soc: f64, command: f64, demand: &WheelDemand, dt: f64) -> Result<StepOutcome> {
        match self {
            Plant::Phev(p) => p.step(soc, command, demand, dt),
            Plant::Fcev(p) => p.step(soc, command, demand, dt),
        }
    }
}
