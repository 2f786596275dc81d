use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// kg/m³
    pub air_density: f64,
    pub drag_coeff: f64,
    /// m²
    pub frontal_area: f64,
    pub roll_coeff: f64,
    /// m/s²
    pub gravity: f64,
    /// Road grade, radians.
    pub grade: f64,
    /// m
    pub wheel_radius: f64,
    /// Gearbox ratios, 1st gear first. A single-speed drive has one entry of 1.0.
    pub gear_ratios: Vec<f64>,
    pub final_ratio: f64,
}

impl VehicleParams {
    /// 1200 kg parallel PHEV with the 5-speed gearbox and 4.021 final drive.
    pub fn phev_reference() -> Self {
        VehicleParams {
            mass: 1200.0,
            air_density: 1.2,
            drag_coeff: 0.3,
            frontal_area: 2.2,
            roll_coeff: 0.012,
            gravity: 9.81,
            grade: 0.0,
            wheel_radius: 0.32,
            gear_ratios: vec![3.527, 2.025, 1.382, 1.058, 0.958],
            final_ratio: 4.021,
        }
    }

    /// 1200 kg FCEV with a single-speed 7.38 reduction.
    pub fn fcev_reference() -> Self {
        VehicleParams {
            gear_ratios: vec![1.0],
            final_ratio: 7.38,
            ..Self::phev_reference()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("air_density", self.air_density),
            ("drag_coeff", self.drag_coeff),
            ("frontal_area", self.frontal_area),
            ("roll_coeff", self.roll_coeff),
            ("gravity", self.gravity),
            ("wheel_radius", self.wheel_radius),
            ("final_ratio", self.final_ratio),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("vehicle.{key}"), format!("must be positive, got {v}")));
            }
        }
        if !self.grade.is_finite() {
            return Err(Error::config("vehicle.grade", "must be finite"));
        }
        if self.gear_ratios.is_empty() {
            return Err(Error::config("vehicle.gear_ratios", "must not be empty"));
        }
        if self.gear_ratios.iter().any(|r| !(r.is_finite() && *r > 0.0))
            || self.gear_ratios.windows(2).any(|w| w[0] <= w[1])
        {
            return Err(Error::config(
                "vehicle.gear_ratios",
                "ratios must be positive and strictly decreasing",
            ));
        }
        Ok(())
    }
}

/// Force, torque, speed and power demanded at the wheel for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelDemand {
    pub force: f64,
    pub torque: f64,
    pub speed: f64,
    pub power: f64,
}

impl WheelDemand {
    pub const ZERO: WheelDemand = WheelDemand {
        force: 0.0,
        torque: 0.0,
        speed: 0.0,
        power: 0.0,
    };
}

/// The four road-load force terms, in N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceTerms {
    pub traction: f64,
    pub air: f64,
    pub rolling: f64,
    pub gravity: f64,
}

impl ForceTerms {
    pub fn new(p: &VehicleParams, v: f64, a: f64) -> Self {
        ForceTerms {
            traction: p.mass * a,
            air: 0.5 * p.air_density * p.drag_coeff * p.frontal_area * v * v,
            // no rolling resistance at standstill
            rolling: if v > 0.0 {
                p.grade.cos() * p.roll_coeff * p.mass * p.gravity
            } else {
                0.0
            },
            gravity: p.grade.sin() * p.mass * p.gravity,
        }
    }

    pub fn total(&self) -> f64 {
        self.traction + self.air + self.rolling + self.gravity
    }
}

pub fn road_load(p: &VehicleParams, v: f64, a: f64) -> WheelDemand {
    debug_assert!(v >= 0.0);
    let force = ForceTerms::new(p, v, a).total();
    let torque = force * p.wheel_radius;
    let speed = v / p.wheel_radius;
    WheelDemand {
        force,
        torque,
        speed,
        power: torque * speed,
    }
}

/// Highest gear whose engine speed falls inside `bounds`; otherwise the gear with the
/// smallest bound violation (lowest index on ties).
pub fn select_gear(p: &VehicleParams, wheel_speed: f64, bounds: (f64, f64)) -> usize {
    let (lo, hi) = bounds;
    let shaft = |g: usize| wheel_speed * p.gear_ratios[g] * p.final_ratio;

    if let Some(g) = (0..p.gear_ratios.len())
        .rev()
        .find(|&g| (lo..=hi).contains(&shaft(g)))
    {
        return g;
    }

    let violation = |g: usize| {
        let w = shaft(g);
        (lo - w).max(0.0) + (w - hi).max(0.0)
    };
    let mut best = 0;
    for g in 1..p.gear_ratios.len() {
        if violation(g) < violation(best) {
            best = g;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example_params() -> VehicleParams {
        VehicleParams {
            mass: 1200.0,
            air_density: 1.2,
            drag_coeff: 0.3,
            frontal_area: 2.2,
            roll_coeff: 0.012,
            gravity: 9.81,
            ..VehicleParams::phev_reference()
        }
    }

    #[test]
    fn standstill_has_no_demand() {
        let d = road_load(&example_params(), 0.0, 0.0);
        assert_eq!(d.force, 0.0);
        assert_eq!(d.power, 0.0);
    }

    #[test]
    fn hand_evaluated_forces() {
        let p = example_params();
        let terms = ForceTerms::new(&p, 10.0, 0.0);
        assert!((terms.air - 39.6).abs() < 1e-9);
        assert!((terms.rolling - 141.264).abs() < 1e-9);
        assert!((road_load(&p, 10.0, 0.0).force - 180.864).abs() < 1e-9);
        assert!((road_load(&p, 10.0, 1.0).force - 1380.864).abs() < 1e-9);
    }

    #[test]
    fn gear_selection() {
        let p = VehicleParams::phev_reference();
        let bounds = (83.78, 680.68);
        // only 1st gear reaches idle
        let w = 7.0;
        let speeds: Vec<f64> = p.gear_ratios.iter().map(|r| w * r * p.final_ratio).collect();
        assert!(speeds[0] >= bounds.0 && speeds[1] < bounds.0);
        assert_eq!(select_gear(&p, w, bounds), 0);

        assert_eq!(select_gear(&p, 0.0, bounds), 0);

        // gears 3-5 in range -> 5th gear
        let w = 100.0;
        let valid: Vec<bool> = p
            .gear_ratios
            .iter()
            .map(|r| (bounds.0..=bounds.1).contains(&(w * r * p.final_ratio)))
            .collect();
        assert_eq!(valid, vec![false, false, true, true, true]);
        assert_eq!(select_gear(&p, w, bounds), 4);

        // too fast for every gear -> the one closest to the ceiling
        assert_eq!(select_gear(&p, 1000.0, bounds), 4);
    }

    #[test]
    fn validation() {
        assert!(VehicleParams::phev_reference().validate().is_ok());
        let mut p = VehicleParams::phev_reference();
        p.gear_ratios = vec![1.0, 2.0];
        assert!(p.validate().is_err());
        p.gear_ratios.clear();
        assert!(p.validate().is_err());
        let mut p = VehicleParams::phev_reference();
        p.mass = 0.0;
        assert!(matches!(p.validate(), Err(Error::Config { key, .. }) if key == "vehicle.mass"));
    }

    proptest! {
        #[test]
        fn power_is_torque_times_speed(v in 0.0f64..50.0, a in -5.0f64..5.0, grade in -0.2f64..0.2) {
            let p = VehicleParams { grade, ..example_params() };
            let d = road_load(&p, v, a);
            let expect = d.torque * d.speed;
            prop_assert!((d.power - expect).abs() <= 1e-9 * expect.abs().max(1.0));
        }
    }
}
