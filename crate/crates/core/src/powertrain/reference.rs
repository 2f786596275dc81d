//! Synthetic reference component data.
//!
//! Smooth parametric stand-ins for measured maps: an engine with a peak-efficiency island at
//! mid speed and high-mid torque, motors with a symmetric efficiency bowl, a fuel cell whose
//! system efficiency peaks at partial load, and LFP-like OCV curves. Headline ratings follow
//! the reference vehicles (165 Nm engine, 307 Nm / 126 kW PHEV motor, 2500 Nm / 249 kW FCEV
//! motor, 55 kW fuel cell, 20.8 Ah and 88 Ah packs).

use std::f64::consts::PI;

use super::battery::{BatteryModel, Resistance};
use super::fuel_cell::FuelCellCurves;
use super::map::TorqueSpeedMap;
use super::plant::{Fcev, Phev, GASOLINE_LHV, HYDROGEN_LHV};
use super::vehicle::VehicleParams;

pub fn rpm(r: f64) -> f64 {
    r * PI / 30.0
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub const ENGINE_IDLE_RPM: f64 = 800.0;
pub const ENGINE_MAX_RPM: f64 = 6500.0;
pub const ENGINE_MAX_TORQUE: f64 = 165.0;

pub fn phev_engine_map() -> TorqueSpeedMap {
    let mut rpms = vec![ENGINE_IDLE_RPM];
    rpms.extend((0..23).map(|i| 1000.0 + 250.0 * i as f64));
    let speed_axis: Vec<f64> = rpms.iter().map(|&r| rpm(r)).collect();
    let torque_axis = linspace(0.0, ENGINE_MAX_TORQUE, 23);

    // Willans line: indicated efficiency times the share of torque left after friction, with
    // enrichment losses above the best-torque line.
    let best_rpm = 2750.0;
    let best_torque = 0.7 * ENGINE_MAX_TORQUE;
    let friction = 18.0;
    let indicated = 0.37 * (best_torque + friction) / best_torque;
    let efficiency = torque_axis
        .iter()
        .map(|&t| {
            rpms.iter()
                .map(|&r| {
                    let x = (r - best_rpm) / (ENGINE_MAX_RPM - best_rpm);
                    let speed_factor = 1.0 - 0.3 * x * x;
                    let willans = indicated * t.min(best_torque) / (t.min(best_torque) + friction);
                    let enrichment = if t <= best_torque {
                        1.0
                    } else {
                        let z = (t - best_torque) / (ENGINE_MAX_TORQUE - best_torque);
                        1.0 - 0.12 * z * z
                    };
                    (willans * speed_factor * enrichment).max(0.02)
                })
                .collect()
        })
        .collect();

    let max_torque = rpms
        .iter()
        .map(|&r| {
            let ramp = ((r - ENGINE_IDLE_RPM) / (1500.0 - ENGINE_IDLE_RPM)).clamp(0.0, 1.0);
            ENGINE_MAX_TORQUE * (0.75 + 0.25 * ramp)
        })
        .collect();
    let min_torque = vec![0.0; rpms.len()];

    TorqueSpeedMap::new(speed_axis.clone(), torque_axis, efficiency, speed_axis, min_torque, max_torque)
        .expect("reference engine map is valid")
}

/// Efficiency bowl over normalized |torque| and speed.
fn motor_bowl(tn: f64, wn: f64) -> f64 {
    let core = 0.95 - 0.08 * ((wn - 0.4) / 0.6).powi(2) - 0.10 * ((tn - 0.35) / 0.65).powi(2);
    let low_speed = 1.0 - 0.3 * (-wn / 0.05).exp();
    let low_torque = 1.0 - 0.3 * (-tn / 0.05).exp();
    (core * low_speed * low_torque).clamp(0.5, 0.96)
}

fn motor_map(
    torque_axis: Vec<f64>,
    max_speed: f64,
    max_torque: f64,
    max_power: f64,
    torque_scale: f64,
) -> TorqueSpeedMap {
    let speed_axis = linspace(0.0, max_speed, 31);
    let efficiency = torque_axis
        .iter()
        .map(|&t| {
            speed_axis
                .iter()
                .map(|&w| motor_bowl((t.abs() / torque_scale).min(1.0), w / max_speed))
                .collect()
        })
        .collect();
    let max_curve: Vec<f64> = speed_axis
        .iter()
        .map(|&w| if w > 0.0 { max_torque.min(max_power / w) } else { max_torque })
        .collect();
    let min_curve = max_curve.iter().map(|t| -t).collect();
    TorqueSpeedMap::new(speed_axis.clone(), torque_axis, efficiency, speed_axis, min_curve, max_curve)
        .expect("reference motor map is valid")
}

/// 307 Nm / 126 kW motor on the gearbox input shaft (same speed range as the engine).
pub fn phev_motor_map() -> TorqueSpeedMap {
    motor_map(linspace(-307.0, 307.0, 41), rpm(ENGINE_MAX_RPM), 307.0, 126_000.0, 307.0)
}

/// 2500 Nm / 249 kW traction motor. The speed axis reaches 9000 rpm so the whole WLTC
/// speed range stays on the map through the 7.38 reduction; the torque axis is dense
/// near zero where road loads sit.
pub fn fcev_motor_map() -> TorqueSpeedMap {
    let positive = [
        0.0, 25.0, 50.0, 75.0, 100.0, 150.0, 200.0, 300.0, 400.0, 600.0, 800.0, 1200.0, 1600.0, 2000.0, 2500.0,
    ];
    let mut axis: Vec<f64> = positive.iter().rev().filter(|&&t| t > 0.0).map(|t| -t).collect();
    axis.extend_from_slice(&positive);
    motor_map(axis, rpm(9000.0), 2500.0, 249_000.0, 400.0)
}

pub const FUEL_CELL_MAX_POWER: f64 = 55_000.0;

pub fn fuel_cell_curves() -> FuelCellCurves {
    let i_max = 340.0;
    let cell_voltage = |i: f64| 0.95 - 0.03 * (1.0 + i / 2.0).ln() - 0.0009 * i;
    // stack size chosen so the last point delivers exactly the rated power
    let cells = FUEL_CELL_MAX_POWER / (cell_voltage(i_max) * i_max);

    let current_axis = linspace(0.0, i_max, 35);
    let mut power_axis: Vec<f64> = current_axis.iter().map(|&i| cells * cell_voltage(i) * i).collect();
    let last = power_axis.len() - 1;
    power_axis[last] = FUEL_CELL_MAX_POWER;
    let efficiency_curve = current_axis
        .iter()
        .map(|&i| {
            let stack = 0.95 * cell_voltage(i) / 1.253;
            let balance_of_plant = 1.0 - 0.55 * (-i / 15.0).exp() - 0.08 * i / i_max;
            stack * balance_of_plant
        })
        .collect();

    let curves = FuelCellCurves {
        power_axis,
        current_curve: current_axis.clone(),
        current_axis,
        efficiency_curve,
        max_power: FUEL_CELL_MAX_POWER,
    };
    curves.validate().expect("reference fuel-cell curves are valid");
    curves
}

/// LFP cell open-circuit voltage: steep knees at both ends, flat plateau in between.
fn lfp_cell_ocv(soc: f64) -> f64 {
    3.0 + 0.25 * (1.0 - (-soc / 0.05).exp()) + 0.08 * soc + 0.15 * (-(1.0 - soc) / 0.04).exp()
}

fn soc_axis() -> Vec<f64> {
    linspace(0.0, 1.0, 21)
}

pub const PHEV_NOMINAL_VOLTAGE: f64 = 350.0;
pub const FCEV_NOMINAL_VOLTAGE: f64 = 600.0;

/// 20.8 Ah, ~350 V pack with an SOC-dependent resistance.
pub fn phev_battery() -> BatteryModel {
    let soc = soc_axis();
    let ocv = soc.iter().map(|&s| 106.0 * lfp_cell_ocv(s)).collect();
    let rint = soc
        .iter()
        .map(|&s| 0.09 + 0.05 * (-s / 0.1).exp() + 0.02 * (-(1.0 - s) / 0.1).exp())
        .collect();
    BatteryModel {
        capacity_ah: 20.8,
        soc_axis: soc,
        ocv,
        resistance: Resistance::Table(rint),
        soc_hard_floor: 0.0,
        soc_hard_ceiling: 1.0,
    }
}

/// 88 Ah, ~600 V pack with a fixed 0.06317 ohm resistance.
pub fn fcev_battery() -> BatteryModel {
    let soc = soc_axis();
    let ocv = soc.iter().map(|&s| 182.0 * lfp_cell_ocv(s)).collect();
    BatteryModel {
        capacity_ah: 88.0,
        soc_axis: soc,
        ocv,
        resistance: Resistance::Constant(0.06317),
        soc_hard_floor: 0.0,
        soc_hard_ceiling: 1.0,
    }
}

pub fn reference_phev() -> Phev {
    Phev {
        vehicle: VehicleParams::phev_reference(),
        engine: phev_engine_map(),
        motor: phev_motor_map(),
        battery: phev_battery(),
        engine_speed_bounds: (rpm(ENGINE_IDLE_RPM), rpm(ENGINE_MAX_RPM)),
        q_lhv: GASOLINE_LHV,
    }
}

pub fn reference_fcev() -> Fcev {
    Fcev {
        vehicle: VehicleParams::fcev_reference(),
        motor: fcev_motor_map(),
        battery: fcev_battery(),
        fuel_cell: fuel_cell_curves(),
        q_lhv_h2: HYDROGEN_LHV,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_data_is_valid() {
        let phev = reference_phev();
        phev.vehicle.validate().unwrap();
        phev.battery.validate().unwrap();
        let fcev = reference_fcev();
        fcev.vehicle.validate().unwrap();
        fcev.battery.validate().unwrap();
        fcev.fuel_cell.validate().unwrap();
    }

    #[test]
    fn engine_shape() {
        let m = phev_engine_map();
        let peak = m.efficiency.iter().flatten().cloned().fold(0.0, f64::max);
        assert!(peak > 0.35 && peak <= 0.37);
        // low load is much worse than the island
        assert!(m.efficiency_at(10.0, rpm(2750.0)) < 0.5 * m.efficiency_at(115.0, rpm(2750.0)));
        assert_eq!(m.torque_limits(rpm(3000.0)), (0.0, 165.0));
    }

    #[test]
    fn motor_shape() {
        let m = phev_motor_map();
        let (lo, hi) = m.torque_limits(rpm(2000.0));
        assert_eq!((lo, hi), (-307.0, 307.0));
        let (_, hi) = m.torque_limits(rpm(6500.0));
        assert!((hi * rpm(6500.0) - 126_000.0).abs() < 1e-6);
        // symmetric bowl
        assert!((m.efficiency_at(100.0, 300.0) - m.efficiency_at(-100.0, 300.0)).abs() < 1e-12);
    }

    #[test]
    fn fuel_cell_peaks_at_partial_load() {
        let c = fuel_cell_curves();
        let (imax, emax) = c
            .current_axis
            .iter()
            .zip(&c.efficiency_curve)
            .fold((0.0, 0.0), |acc, (&i, &e)| if e > acc.1 { (i, e) } else { acc });
        assert!(imax > 0.0 && imax < 0.5 * 340.0);
        assert!(emax < 0.7);
        assert_eq!(*c.power_axis.last().unwrap(), 55_000.0);
    }

    #[test]
    fn pack_voltages() {
        assert!((phev_battery().open_circuit_voltage(0.5) - PHEV_NOMINAL_VOLTAGE).abs() < 5.0);
        assert!((fcev_battery().open_circuit_voltage(0.5) - FCEV_NOMINAL_VOLTAGE).abs() < 5.0);
        assert_eq!(fcev_battery().internal_resistance(0.3), 0.06317);
    }
}
