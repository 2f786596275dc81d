//! Reward families and SOC constraint penalties.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// τ − fuel
    FuelMin,
    /// τ − (fuel + α·(SOC_t − SOC_t+1))
    EqInstant,
    /// τ − (fuel + β·(SOC_0 − SOC_t+1)²)
    EqOverall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub kind: RewardKind,
    pub tau: f64,
    /// Equivalence factor S.
    pub equivalence_factor: f64,
    /// Nominal battery voltage, V.
    pub v_bat: f64,
    /// Battery capacity, Ah.
    pub q_max: f64,
    /// Fuel lower heating value, J/g.
    pub q_lhv: f64,
}

impl RewardSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() {
            return Err(Error::config("env.reward.tau", "must be finite"));
        }
        if !(self.equivalence_factor.is_finite() && self.equivalence_factor >= 0.0) {
            return Err(Error::config("env.reward.s", "must be finite and >= 0"));
        }
        for (key, v) in [("v_bat", self.v_bat), ("q_max", self.q_max), ("q_lhv", self.q_lhv)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("env.reward.{key}"), "must be positive"));
            }
        }
        Ok(())
    }

    /// Grams of fuel per unit of SOC (the α = β weight).
    pub fn weight(&self) -> f64 {
        equivalence_factor(self.equivalence_factor, self.v_bat, self.q_max, self.q_lhv)
    }

    /// Reward before constraint penalties.
    pub fn reward(&self, fuel_g: f64, soc_now: f64, soc_next: f64, soc_start: f64) -> f64 {
        let cost = match self.kind {
            RewardKind::FuelMin => fuel_g,
            RewardKind::EqInstant => fuel_g + self.weight() * (soc_now - soc_next),
            RewardKind::EqOverall => {
                let drop = soc_start - soc_next;
                fuel_g + self.weight() * drop * drop
            }
        };
        self.tau - cost
    }
}

/// `S · 3600 · V_bat · Q_max / Q_LHV`: fuel grams whose heat equals one full battery.
pub fn equivalence_factor(s: f64, v_bat: f64, q_max: f64, q_lhv: f64) -> f64 {
    s * 3600.0 * v_bat * q_max / q_lhv
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintSpec {
    pub soc_min: f64,
    pub soc_max: f64,
    /// Weight on SOC above `soc_max`.
    pub w_dis: f64,
    /// Weight on SOC below `soc_min`.
    pub w_chg: f64,
    pub terminate_on_violation: bool,
}

impl Default for ConstraintSpec {
    fn default() -> Self {
        ConstraintSpec {
            soc_min: 0.30,
            soc_max: 0.85,
            w_dis: 1000.0,
            w_chg: 1000.0,
            terminate_on_violation: true,
        }
    }
}

impl ConstraintSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(Error::config(
                "env.constraints",
                format!("need 0 <= soc_min < soc_max <= 1, got [{}, {}]", self.soc_min, self.soc_max),
            ));
        }
        if !(self.w_dis >= 0.0 && self.w_chg >= 0.0 && self.w_dis.is_finite() && self.w_chg.is_finite()) {
            return Err(Error::config("env.constraints", "penalty weights must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn violated(&self, soc: f64) -> bool {
        soc < self.soc_min || soc > self.soc_max
    }

    /// Non-positive penalty, linear in the distance outside the band.
    pub fn penalty(&self, soc: f64) -> f64 {
        if soc > self.soc_max {
            -self.w_dis * (soc - self.soc_max)
        } else if soc < self.soc_min {
            -self.w_chg * (self.soc_min - soc)
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(kind: RewardKind, s: f64) -> RewardSpec {
        RewardSpec {
            kind,
            tau: 1.0,
            equivalence_factor: s,
            v_bat: 350.0,
            q_max: 20.8,
            q_lhv: 42_600.0,
        }
    }

    #[test]
    fn factor_examples() {
        assert_eq!(equivalence_factor(0.0, 350.0, 20.8, 42_600.0), 0.0);
        // 3600 * 350 * 20.8 / 42600
        let f = equivalence_factor(1.0, 350.0, 20.8, 42_600.0);
        assert!((f - 615.211267605634).abs() < 1e-9);
        assert!((equivalence_factor(2.0, 350.0, 20.8, 42_600.0) - 2.0 * f).abs() < 1e-12);
    }

    #[test]
    fn reward_examples() {
        assert_eq!(spec(RewardKind::FuelMin, 1.0).reward(0.0, 0.6, 0.59, 0.6), 1.0);
        let inst = spec(RewardKind::EqInstant, 0.0);
        let fuel = spec(RewardKind::FuelMin, 0.0);
        for (f, a, b) in [(0.3, 0.6, 0.59), (0.0, 0.5, 0.52), (1.2, 0.4, 0.4)] {
            assert_eq!(inst.reward(f, a, b, 0.6), fuel.reward(f, a, b, 0.6));
        }
        let overall = spec(RewardKind::EqOverall, 2.0);
        assert_eq!(overall.reward(0.4, 0.55, 0.6, 0.6), 1.0 - 0.4);
        let inst = spec(RewardKind::EqInstant, 1.0);
        let r = inst.reward(0.2, 0.6, 0.599, 0.6);
        assert!((r - (1.0 - 0.2 - 0.615211267605634)).abs() < 1e-9);
    }

    #[test]
    fn penalty_examples() {
        let c = ConstraintSpec {
            soc_min: 0.3,
            soc_max: 0.85,
            w_dis: 100.0,
            w_chg: 100.0,
            terminate_on_violation: true,
        };
        assert_eq!(c.penalty(0.5), 0.0);
        assert!((c.penalty(0.25) + 5.0).abs() < 1e-12);
        assert!((c.penalty(0.9) + 5.0).abs() < 1e-12);
        assert_eq!(c.penalty(0.3), 0.0);
        assert_eq!(c.penalty(0.85), 0.0);
    }

    #[test]
    fn validation() {
        assert!(ConstraintSpec::default().validate().is_ok());
        let c = ConstraintSpec {
            soc_min: 0.9,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        assert!(spec(RewardKind::FuelMin, -1.0).validate().is_err());
    }

    proptest! {
        #[test]
        fn penalty_sign_and_continuity(soc in -0.5f64..1.5) {
            let c = ConstraintSpec::default();
            let p = c.penalty(soc);
            if c.violated(soc) { prop_assert!(p < 0.0) } else { prop_assert_eq!(p, 0.0) }
            let eps = 1e-9;
            prop_assert!(c.penalty(c.soc_min - eps).abs() < 1e-5);
            prop_assert!(c.penalty(c.soc_max + eps).abs() < 1e-5);
        }
    }
}
