//! Backward (kinematic) vehicle and component models.

pub mod battery;
pub mod fuel_cell;
mod interp;
pub mod io;
pub mod map;
pub mod plant;
pub mod reference;
pub mod vehicle;

pub use battery::{battery_current, soc_delta, BatteryModel, Resistance};
pub use fuel_cell::{FuelCellCurves, FuelCellPoint};
pub use map::{engine_fuel_rate, motor_power, TorqueSpeedMap};
pub use plant::{Fcev, OperatingPoint, Phev, Plant, StepOutcome, VehicleKind, GASOLINE_LHV, HYDROGEN_LHV};
pub use vehicle::{road_load, select_gear, ForceTerms, VehicleParams, WheelDemand};
