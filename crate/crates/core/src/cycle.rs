//! Drive cycles: uniformly sampled speed traces that drive the backward simulation.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// WLTC class 3b, 1 Hz, km/h. Bundled so demos and tests run without a data directory.
pub const WLTC_CLASS3B_CSV: &str = include_str!("../../../data/wltc_class3b.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeedUnit {
    Mps,
    Kph,
}

impl SpeedUnit {
    fn to_mps(self, v: f64) -> f64 {
        match self {
            SpeedUnit::Mps => v,
            SpeedUnit::Kph => v / 3.6,
        }
    }
}

impl FromStr for SpeedUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mps" => Ok(SpeedUnit::Mps),
            "kph" => Ok(SpeedUnit::Kph),
            other => Err(Error::config("cycle.unit", format!("unknown speed unit `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveCycle {
    pub name: String,
    pub dt: f64,
    speeds: Vec<f64>,
}

impl DriveCycle {
    pub fn new(name: impl Into<String>, dt: f64, speeds: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("drive cycle", format!("dt must be positive, got {dt}")));
        }
        if speeds.len() < 2 {
            return Err(Error::invalid("drive cycle", "needs at least two samples"));
        }
        for (row, &speed) in speeds.iter().enumerate() {
            if !speed.is_finite() {
                return Err(Error::invalid("drive cycle", format!("non-finite speed at row {row}")));
            }
            if speed < 0.0 {
                return Err(Error::NegativeSpeed { row, speed });
            }
        }
        Ok(DriveCycle {
            name: name.into(),
            dt,
            speeds,
        })
    }

    /// The bundled WLTC class 3b cycle.
    pub fn wltc_class3b() -> Self {
        Self::from_csv_str("wltc_class3b", WLTC_CLASS3B_CSV, SpeedUnit::Kph, Path::new("<bundled>"))
            .expect("bundled WLTC data is valid")
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.speeds.len() - 1) as f64
    }

    /// Forward-difference acceleration; zero at the last sample.
    pub fn accel_at(&self, k: usize) -> Result<f64> {
        let len = self.speeds.len();
        if k >= len {
            return Err(Error::IndexOutOfRange { index: k, len });
        }
        if k + 1 == len {
            return Ok(0.0);
        }
        Ok((self.speeds[k + 1] - self.speeds[k]) / self.dt)
    }

    /// First `n` samples as a new cycle.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let n = n.min(self.len());
        DriveCycle::new(format!("{}[..{n}]", self.name), self.dt, self.speeds[..n].to_vec())
    }

    pub fn from_csv_str(name: &str, text: &str, unit: SpeedUnit, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());

        let mut times = Vec::new();
        let mut speeds = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 1;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            if rec.len() != 2 {
                return Err(parse_err(line, format!("expected 2 columns, found {}", rec.len())));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            let (t, v) = match parsed {
                (Ok(t), Ok(v)) => (t, v),
                // header row is optional
                _ if times.is_empty() && line == 1 => continue,
                _ => return Err(parse_err(line, format!("cannot parse `{},{}`", &rec[0], &rec[1]))),
            };
            if !t.is_finite() || !v.is_finite() {
                return Err(parse_err(line, "non-finite value".into()));
            }
            if v < 0.0 {
                return Err(Error::NegativeSpeed { row: speeds.len(), speed: v });
            }
            times.push(t);
            speeds.push(unit.to_mps(v));
        }

        if times.len() < 2 {
            return Err(parse_err(times.len(), "a cycle needs at least two rows".into()));
        }
        let dt = times[1] - times[0];
        if dt <= 0.0 {
            return Err(parse_err(2, "times must be strictly increasing".into()));
        }
        let tol = 1e-9 * dt.max(1.0);
        for row in 1..times.len() {
            let step = times[row] - times[row - 1];
            if step <= 0.0 {
                return Err(parse_err(row + 1, "times must be strictly increasing".into()));
            }
            if (step - dt).abs() > tol {
                return Err(Error::NonUniformTimestep {
                    row,
                    expected: dt,
                    got: step,
                });
            }
        }
        DriveCycle::new(name, dt, speeds)
    }

    /// Serializes as `time_s,speed` in m/s with round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,speed\n");
        for (k, v) in self.speeds.iter().enumerate() {
            let _ = writeln!(out, "{},{}", k as f64 * self.dt, v);
        }
        out
    }
}

pub fn load_cycle(path: impl AsRef<Path>, unit: SpeedUnit) -> Result<DriveCycle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cycle".into());
    DriveCycle::from_csv_str(&name, &text, unit, path)
}
