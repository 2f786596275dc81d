use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` evenly spaced points from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid("grid", format!("need lo < hi, got [{lo}, {hi}]")));
        }
        if n < 2 {
            return Err(Error::invalid("grid", format!("need at least two points, got {n}")));
        }
        Ok(Grid { lo, hi, n })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        if i == self.n - 1 {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }

    /// Index of the nearest point after clamping `x` into `[lo, hi]`; exact midpoints go to the
    /// lower index.
    pub fn discretize(&self, x: f64) -> usize {
        if x.is_nan() || x <= self.lo {
            return 0;
        }
        if x >= self.hi {
            return self.n - 1;
        }
        let pos = (x - self.lo) / self.step();
        ((pos - 0.5).ceil().max(0.0) as usize).min(self.n - 1)
    }
}

/// Discretized (demanded power, SOC) state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub pdem: Grid,
    pub soc: Grid,
}

impl StateSpec {
    pub fn n_states(&self) -> usize {
        self.pdem.n * self.soc.n
    }

    pub fn encode(&self, pdem: f64, soc: f64) -> usize {
        self.pdem.discretize(pdem) * self.soc.n + self.soc.discretize(soc)
    }

    /// (power index, SOC index)
    pub fn decode(&self, state: usize) -> (usize, usize) {
        (state / self.soc.n, state % self.soc.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    /// Engine share of shaft torque, in [0, 1].
    TorqueSplit,
    /// Fuel-cell output power, W.
    FcPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub kind: ActionKind,
    pub grid: Grid,
}

impl ActionSpec {
    pub fn torque_split(n: usize) -> Result<Self> {
        Ok(ActionSpec {
            kind: ActionKind::TorqueSplit,
            grid: Grid::new(0.0, 1.0, n)?,
        })
    }

    pub fn fc_power(n: usize, max_power: f64) -> Result<Self> {
        Ok(ActionSpec {
            kind: ActionKind::FcPower,
            grid: Grid::new(0.0, max_power, n)?,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.grid.n
    }

    pub fn decode(&self, action: usize) -> f64 {
        self.grid.value(action)
    }
}
