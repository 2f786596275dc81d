use serde::{Deserialize, Serialize};

use super::interp::{interp1, strictly_increasing};
use crate::error::{Error, Result};

/// PEM fuel-cell system characteristics: power→current and current→efficiency curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelCellCurves {
    /// W
    pub power_axis: Vec<f64>,
    /// A at each `power_axis` point.
    pub current_curve: Vec<f64>,
    /// A
    pub current_axis: Vec<f64>,
    pub efficiency_curve: Vec<f64>,
    /// W
    pub max_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelCellPoint {
    pub current: f64,
    pub efficiency: f64,
    /// g/s of hydrogen
    pub h2_rate: f64,
}

impl FuelCellCurves {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid("fuel-cell curves", msg));
        if self.power_axis.len() < 2 || self.current_axis.len() < 2 {
            return bad("curves need at least two points");
        }
        if !strictly_increasing(&self.power_axis) || !strictly_increasing(&self.current_axis) {
            return bad("axes must be strictly increasing");
        }
        if self.current_curve.len() != self.power_axis.len()
            || self.efficiency_curve.len() != self.current_axis.len()
        {
            return bad("curve lengths must match their axes");
        }
        if self.current_curve.iter().any(|i| !i.is_finite()) {
            return bad("currents must be finite");
        }
        if self.efficiency_curve.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return bad("efficiency values must lie in (0, 1]");
        }
        if !(self.max_power.is_finite() && self.max_power > 0.0) {
            return bad("max power must be positive");
        }
        Ok(())
    }

    /// Operating current, efficiency and hydrogen rate for an output of `power` W.
    pub fn hydrogen_rate(&self, power: f64, q_lhv_h2: f64) -> Result<FuelCellPoint> {
        if !(0.0..=self.max_power).contains(&power) {
            return Err(Error::PowerOutOfRange {
                power,
                max: self.max_power,
            });
        }
        let current = interp1(&self.power_axis, &self.current_curve, power);
        let efficiency = interp1(&self.current_axis, &self.efficiency_curve, current);
        let h2_rate = if power == 0.0 {
            0.0
        } else {
            power / (efficiency * q_lhv_h2)
        };
        Ok(FuelCellPoint {
            current,
            efficiency,
            h2_rate,
        })
    }
}
