//! Rint equivalent-circuit battery with coulomb-counting SOC.

use serde::{Deserialize, Serialize};

use super::interp::{interp1, strictly_increasing};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Resistance {
    Constant(f64),
    /// Ohms at each point of the battery's SOC axis.
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryModel {
    /// Ah
    pub capacity_ah: f64,
    pub soc_axis: Vec<f64>,
    /// Open-circuit voltage at each SOC point, V.
    pub ocv: Vec<f64>,
    pub resistance: Resistance,
    pub soc_hard_floor: f64,
    pub soc_hard_ceiling: f64,
}

impl BatteryModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid("battery model", msg));
        if !(self.capacity_ah.is_finite() && self.capacity_ah > 0.0) {
            return bad("capacity must be positive");
        }
        if self.soc_axis.len() < 2 || !strictly_increasing(&self.soc_axis) {
            return bad("SOC axis must be strictly increasing with at least two points");
        }
        if self.soc_axis[0] > 0.0 || self.soc_axis[self.soc_axis.len() - 1] < 1.0 {
            return bad("SOC axis must cover [0, 1]");
        }
        if self.ocv.len() != self.soc_axis.len() || self.ocv.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("OCV table must be positive and match the SOC axis");
        }
        match &self.resistance {
            Resistance::Constant(r) if !(r.is_finite() && *r > 0.0) => return bad("resistance must be positive"),
            Resistance::Table(rs) if rs.len() != self.soc_axis.len() => {
                return bad("resistance table must match the SOC axis")
            }
            Resistance::Table(rs) if rs.iter().any(|r| !(r.is_finite() && *r > 0.0)) => {
                return bad("resistance must be positive")
            }
            _ => {}
        }
        if !(0.0 <= self.soc_hard_floor && self.soc_hard_floor < self.soc_hard_ceiling && self.soc_hard_ceiling <= 1.0) {
            return bad("hard SOC limits must satisfy 0 <= floor < ceiling <= 1");
        }
        Ok(())
    }

    pub fn open_circuit_voltage(&self, soc: f64) -> f64 {
        interp1(&self.soc_axis, &self.ocv, soc)
    }

    pub fn internal_resistance(&self, soc: f64) -> f64 {
        match &self.resistance {
            Resistance::Constant(r) => *r,
            Resistance::Table(rs) => interp1(&self.soc_axis, rs, soc),
        }
    }

    /// Terminal current for a power draw of `power` W (positive discharges).
    pub fn current(&self, soc: f64, power: f64) -> Result<f64> {
        battery_current(self.open_circuit_voltage(soc), self.internal_resistance(soc), power)
    }

    /// SOC change over `dt` seconds at constant `current`.
    pub fn soc_delta(&self, current: f64, dt: f64) -> f64 {
        soc_delta(self.capacity_ah, current, dt)
    }

    /// Largest discharge current the circuit can deliver at `soc` (at the peak-power point).
    pub fn peak_current(&self, soc: f64) -> f64 {
        self.open_circuit_voltage(soc) / (2.0 * self.internal_resistance(soc))
    }
}

/// Smaller root of `P = V_oc·I − I²·R`.
///
/// Evaluated as `2P / (V_oc + sqrt(V_oc² − 4RP))`, the same root as
/// `(V_oc − sqrt(V_oc² − 4RP)) / 2R` without the cancellation at small `P`.
pub fn battery_current(voc: f64, rint: f64, power: f64) -> Result<f64> {
    let disc = voc * voc - 4.0 * rint * power;
    if disc < 0.0 {
        return Err(Error::PowerInfeasible { power, voc, rint });
    }
    Ok(2.0 * power / (voc + disc.sqrt()))
}

/// Coulomb counting: `−I·dt / (3600·Q_max)` with Q_max in Ah.
pub fn soc_delta(capacity_ah: f64, current: f64, dt: f64) -> f64 {
    -(current * dt) / (3600.0 * capacity_ah)
}
