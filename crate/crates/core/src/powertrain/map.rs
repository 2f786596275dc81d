//! Quasi-static torque/speed efficiency maps for engines and motors.

use serde::{Deserialize, Serialize};

use super::interp::{bracket, interp1, strictly_increasing};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorqueSpeedMap {
    /// rad/s
    pub speed_axis: Vec<f64>,
    /// Nm
    pub torque_axis: Vec<f64>,
    /// `efficiency[i][j]` at `torque_axis[i]`, `speed_axis[j]`.
    pub efficiency: Vec<Vec<f64>>,
    /// rad/s axis of the limit curves.
    pub limit_speed_axis: Vec<f64>,
    pub min_torque: Vec<f64>,
    pub max_torque: Vec<f64>,
}

impl TorqueSpeedMap {
    pub fn new(
        speed_axis: Vec<f64>,
        torque_axis: Vec<f64>,
        efficiency: Vec<Vec<f64>>,
        limit_speed_axis: Vec<f64>,
        min_torque: Vec<f64>,
        max_torque: Vec<f64>,
    ) -> Result<Self> {
        let map = TorqueSpeedMap {
            speed_axis,
            torque_axis,
            efficiency,
            limit_speed_axis,
            min_torque,
            max_torque,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid("torque/speed map", msg));
        if self.speed_axis.len() < 2 || self.torque_axis.len() < 2 {
            return bad("each axis needs at least two points");
        }
        if !strictly_increasing(&self.speed_axis) || !strictly_increasing(&self.torque_axis) {
            return bad("axes must be strictly increasing");
        }
        if self.efficiency.len() != self.torque_axis.len()
            || self.efficiency.iter().any(|row| row.len() != self.speed_axis.len())
        {
            return bad("efficiency grid shape does not match axes");
        }
        if self
            .efficiency
            .iter()
            .flatten()
            .any(|&e| !(e > 0.0 && e <= 1.0))
        {
            return bad("efficiency values must lie in (0, 1]");
        }
        if self.limit_speed_axis.is_empty() || !strictly_increasing(&self.limit_speed_axis) {
            return bad("limit-curve speed axis must be strictly increasing");
        }
        let n = self.limit_speed_axis.len();
        if self.min_torque.len() != n || self.max_torque.len() != n {
            return bad("limit curves must match their speed axis");
        }
        if self
            .min_torque
            .iter()
            .zip(&self.max_torque)
            .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
        {
            return bad("max torque must be >= min torque at every speed");
        }
        Ok(())
    }

    /// Bilinear interpolation of efficiency; queries outside the grid clamp to its edges.
    pub fn efficiency_at(&self, torque: f64, speed: f64) -> f64 {
        let (i, ti) = bracket(&self.torque_axis, torque);
        let (j, tj) = bracket(&self.speed_axis, speed);
        let at = |a: usize, b: usize| self.efficiency[a][b];
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        let low = lerp(at(i, j), at(i, j + 1), tj);
        let high = lerp(at(i + 1, j), at(i + 1, j + 1), tj);
        lerp(low, high, ti)
    }

    /// (T_min, T_max) at `speed`, linearly interpolated and clamped to the axis range.
    pub fn torque_limits(&self, speed: f64) -> (f64, f64) {
        (
            interp1(&self.limit_speed_axis, &self.min_torque, speed),
            interp1(&self.limit_speed_axis, &self.max_torque, speed),
        )
    }
}

/// Electrical power drawn (positive) or returned (negative) by a motor delivering `torque` at `speed`.
pub fn motor_power(torque: f64, speed: f64, efficiency: f64) -> f64 {
    debug_assert!(efficiency > 0.0 && efficiency <= 1.0);
    let mech = torque * speed;
    if torque >= 0.0 {
        mech / efficiency
    } else {
        mech * efficiency
    }
}

/// Fuel mass rate in g/s for the engine at (`torque`, `speed`); idle fuel is not modelled.
pub fn engine_fuel_rate(map: &TorqueSpeedMap, torque: f64, speed: f64, q_lhv: f64) -> f64 {
    debug_assert!(torque >= 0.0);
    let mech = torque * speed;
    if mech <= 0.0 {
        return 0.0;
    }
    mech / (map.efficiency_at(torque, speed) * q_lhv)
}
