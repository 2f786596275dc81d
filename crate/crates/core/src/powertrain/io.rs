//! CSV formats for component data.
//!
//! * efficiency map: a `# map v1` line, then a grid whose first row holds the speed axis
//!   (rad/s, first cell ignored), first column the torque axis (Nm), body the efficiency;
//! * limit curves: `speed,Tmin,Tmax`;
//! * fuel cell: `power_W,current_A` and `current_A,efficiency`;
//! * battery: `soc,voc_V[,rint_ohm]`.
//!
//! Axis columns must be strictly increasing.

use std::fmt::Write as _;
use std::path::Path;

use super::battery::{BatteryModel, Resistance};
use super::fuel_cell::FuelCellCurves;
use super::interp::strictly_increasing;
use super::map::TorqueSpeedMap;
use crate::error::{Error, Result};

const MAP_MAGIC: &str = "# map v1";

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Numeric rows of a CSV body. A non-numeric first row is treated as a header.
fn numeric_rows(text: &str, origin: &Path) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: origin.into(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(vals) if vals.iter().all(|v| v.is_finite()) => rows.push((line, vals)),
            _ if rows.is_empty() => continue,
            _ => {
                return Err(Error::Parse {
                    path: origin.into(),
                    line,
                    msg: "expected numeric fields".into(),
                })
            }
        }
    }
    Ok(rows)
}

fn columns(text: &str, origin: &Path, min: usize, max: usize) -> Result<Vec<Vec<f64>>> {
    let rows = numeric_rows(text, origin)?;
    let width = rows.first().map(|r| r.1.len()).unwrap_or(0);
    if !(min..=max).contains(&width) {
        return Err(Error::Parse {
            path: origin.into(),
            line: rows.first().map(|r| r.0).unwrap_or(1),
            msg: format!("expected {min}..={max} columns, found {width}"),
        });
    }
    let mut cols = vec![Vec::with_capacity(rows.len()); width];
    for (line, row) in rows {
        if row.len() != width {
            return Err(Error::Parse {
                path: origin.into(),
                line,
                msg: format!("expected {width} columns, found {}", row.len()),
            });
        }
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    Ok(cols)
}

fn require_axis(axis: &[f64], what: &str, origin: &Path) -> Result<()> {
    if axis.len() < 2 || !strictly_increasing(axis) {
        return Err(Error::invalid(
            origin.display().to_string(),
            format!("{what} must be strictly increasing with at least two points"),
        ));
    }
    Ok(())
}

fn with_origin<T>(r: Result<T>, origin: &Path) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidData { what, msg } => Error::InvalidData {
            what: format!("{} ({what})", origin.display()),
            msg,
        },
        other => other,
    })
}

pub fn parse_map(map_text: &str, map_origin: &Path, limits_text: &str, limits_origin: &Path) -> Result<TorqueSpeedMap> {
    let first = map_text.lines().next().unwrap_or("").trim();
    if first != MAP_MAGIC {
        return Err(Error::Parse {
            path: map_origin.into(),
            line: 1,
            msg: format!("missing `{MAP_MAGIC}` header"),
        });
    }
    let rows = numeric_rows(map_text, map_origin)?;
    let Some(((_, head), body)) = rows.split_first() else {
        return Err(Error::Parse {
            path: map_origin.into(),
            line: 2,
            msg: "empty map".into(),
        });
    };
    let speed_axis = head[1..].to_vec();
    let mut torque_axis = Vec::with_capacity(body.len());
    let mut efficiency = Vec::with_capacity(body.len());
    for (line, row) in body {
        if row.len() != head.len() {
            return Err(Error::Parse {
                path: map_origin.into(),
                line: *line,
                msg: format!("expected {} columns, found {}", head.len(), row.len()),
            });
        }
        torque_axis.push(row[0]);
        efficiency.push(row[1..].to_vec());
    }
    require_axis(&speed_axis, "speed axis", map_origin)?;
    require_axis(&torque_axis, "torque axis", map_origin)?;

    let limits = columns(limits_text, limits_origin, 3, 3)?;
    require_axis(&limits[0], "limit speed axis", limits_origin)?;
    let [limit_speeds, tmin, tmax]: [Vec<f64>; 3] = limits.try_into().expect("three columns");

    with_origin(
        TorqueSpeedMap::new(speed_axis, torque_axis, efficiency, limit_speeds, tmin, tmax),
        map_origin,
    )
}

pub fn read_map(map_path: &Path, limits_path: &Path) -> Result<TorqueSpeedMap> {
    parse_map(&read_text(map_path)?, map_path, &read_text(limits_path)?, limits_path)
}

/// Returns (map CSV, limits CSV).
pub fn format_map(map: &TorqueSpeedMap) -> (String, String) {
    let mut grid = format!("{MAP_MAGIC}\n0");
    for w in &map.speed_axis {
        let _ = write!(grid, ",{w}");
    }
    grid.push('\n');
    for (t, row) in map.torque_axis.iter().zip(&map.efficiency) {
        let _ = write!(grid, "{t}");
        for e in row {
            let _ = write!(grid, ",{e}");
        }
        grid.push('\n');
    }
    let mut limits = String::from("speed,Tmin,Tmax\n");
    for ((w, lo), hi) in map.limit_speed_axis.iter().zip(&map.min_torque).zip(&map.max_torque) {
        let _ = writeln!(limits, "{w},{lo},{hi}");
    }
    (grid, limits)
}

pub fn write_map(map: &TorqueSpeedMap, map_path: &Path, limits_path: &Path) -> Result<()> {
    let (grid, limits) = format_map(map);
    write_text(map_path, &grid)?;
    write_text(limits_path, &limits)
}

pub fn parse_fuel_cell(
    pi_text: &str,
    pi_origin: &Path,
    eff_text: &str,
    eff_origin: &Path,
    max_power: f64,
) -> Result<FuelCellCurves> {
    let pi = columns(pi_text, pi_origin, 2, 2)?;
    require_axis(&pi[0], "power axis", pi_origin)?;
    let eff = columns(eff_text, eff_origin, 2, 2)?;
    require_axis(&eff[0], "current axis", eff_origin)?;
    let [power_axis, current_curve]: [Vec<f64>; 2] = pi.try_into().expect("two columns");
    let [current_axis, efficiency_curve]: [Vec<f64>; 2] = eff.try_into().expect("two columns");
    let curves = FuelCellCurves {
        power_axis,
        current_curve,
        current_axis,
        efficiency_curve,
        max_power,
    };
    with_origin(curves.validate(), eff_origin)?;
    Ok(curves)
}

pub fn read_fuel_cell(pi_path: &Path, eff_path: &Path, max_power: f64) -> Result<FuelCellCurves> {
    parse_fuel_cell(&read_text(pi_path)?, pi_path, &read_text(eff_path)?, eff_path, max_power)
}

/// Returns (power→current CSV, current→efficiency CSV).
pub fn format_fuel_cell(c: &FuelCellCurves) -> (String, String) {
    let mut pi = String::from("power_W,current_A\n");
    for (p, i) in c.power_axis.iter().zip(&c.current_curve) {
        let _ = writeln!(pi, "{p},{i}");
    }
    let mut eff = String::from("current_A,efficiency\n");
    for (i, e) in c.current_axis.iter().zip(&c.efficiency_curve) {
        let _ = writeln!(eff, "{i},{e}");
    }
    (pi, eff)
}

pub fn write_fuel_cell(c: &FuelCellCurves, pi_path: &Path, eff_path: &Path) -> Result<()> {
    let (pi, eff) = format_fuel_cell(c);
    write_text(pi_path, &pi)?;
    write_text(eff_path, &eff)
}

/// `constant_rint` is required when the file has no resistance column and ignored otherwise.
pub fn parse_battery(text: &str, origin: &Path, capacity_ah: f64, constant_rint: Option<f64>) -> Result<BatteryModel> {
    let cols = columns(text, origin, 2, 3)?;
    require_axis(&cols[0], "SOC axis", origin)?;
    let mut cols = cols.into_iter();
    let soc_axis = cols.next().expect("soc column");
    let ocv = cols.next().expect("voc column");
    let resistance = match (cols.next(), constant_rint) {
        (Some(table), _) => Resistance::Table(table),
        (None, Some(r)) => Resistance::Constant(r),
        (None, None) => {
            return Err(Error::invalid(
                origin.display().to_string(),
                "no rint_ohm column and no constant resistance configured",
            ))
        }
    };
    let model = BatteryModel {
        capacity_ah,
        soc_axis,
        ocv,
        resistance,
        soc_hard_floor: 0.0,
        soc_hard_ceiling: 1.0,
    };
    with_origin(model.validate(), origin)?;
    Ok(model)
}

pub fn read_battery(path: &Path, capacity_ah: f64, constant_rint: Option<f64>) -> Result<BatteryModel> {
    parse_battery(&read_text(path)?, path, capacity_ah, constant_rint)
}

pub fn format_battery(b: &BatteryModel) -> String {
    let mut out = String::new();
    match &b.resistance {
        Resistance::Table(rs) => {
            out.push_str("soc,voc_V,rint_ohm\n");
            for ((s, v), r) in b.soc_axis.iter().zip(&b.ocv).zip(rs) {
                let _ = writeln!(out, "{s},{v},{r}");
            }
        }
        Resistance::Constant(_) => {
            out.push_str("soc,voc_V\n");
            for (s, v) in b.soc_axis.iter().zip(&b.ocv) {
                let _ = writeln!(out, "{s},{v}");
            }
        }
    }
    out
}

pub fn write_battery(b: &BatteryModel, path: &Path) -> Result<()> {
    write_text(path, &format_battery(b))
}

/// Writes every reference dataset into `dir` using the file names the shipped configs expect.
pub fn write_reference_data(dir: &Path) -> Result<()> {
    use super::reference as r;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_map(&r::phev_engine_map(), &dir.join("phev_engine_map.csv"), &dir.join("phev_engine_limits.csv"))?;
    write_map(&r::phev_motor_map(), &dir.join("phev_motor_map.csv"), &dir.join("phev_motor_limits.csv"))?;
    write_map(&r::fcev_motor_map(), &dir.join("fcev_motor_map.csv"), &dir.join("fcev_motor_limits.csv"))?;
    write_fuel_cell(&r::fuel_cell_curves(), &dir.join("fc_power_current.csv"), &dir.join("fc_current_efficiency.csv"))?;
    write_battery(&r::phev_battery(), &dir.join("phev_battery.csv"))?;
    write_battery(&r::fcev_battery(), &dir.join("fcev_battery.csv"))
}
