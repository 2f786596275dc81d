use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabrl::CurvePoint;

/// Thresholds of the availability classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AvailabilityThresholds {
    /// Trailing share of evaluations that is averaged.
    pub window: f64,
    /// Runs below `baseline − awful_fraction·|baseline|` are awful.
    pub awful_fraction: f64,
    /// Valuable runs complete at least this share of the window.
    pub valuable_completion: f64,
    /// Runs terminated in at least this share of the window are awful.
    pub awful_termination: f64,
}

impl Default for AvailabilityThresholds {
    fn default() -> Self {
        AvailabilityThresholds {
            window: 0.1,
            awful_fraction: 0.5,
            valuable_completion: 0.9,
            awful_termination: 0.5,
        }
    }
}

/// +1 valuable, 0 defective, −1 awful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Availability {
    Awful = -1,
    Defective = 0,
    Valuable = 1,
}

impl Availability {
    pub fn index(self) -> i32 {
        self as i32
    }
}

pub fn classify_availability(
    curve: &[CurvePoint],
    baseline: f64,
    t: &AvailabilityThresholds,
) -> Result<Availability> {
    if curve.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let n = ((curve.len() as f64 * t.window).ceil() as usize).clamp(1, curve.len());
    let tail = &curve[curve.len() - n..];
    let mean = tail.iter().map(|p| p.reward_sum).sum::<f64>() / n as f64;
    let terminated = tail.iter().filter(|p| p.terminated).count() as f64 / n as f64;
    let awful_line = baseline - t.awful_fraction * baseline.abs();

    Ok(if terminated >= t.awful_termination || mean < awful_line {
        Availability::Awful
    } else if mean >= baseline && 1.0 - terminated >= t.valuable_completion {
        Availability::Valuable
    } else {
        Availability::Defective
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub parameter: String,
    pub value: String,
    pub mean_index: f64,
    pub runs: usize,
}

/// Mean availability per (parameter, value); rows grouped by parameter in the order given, best
/// value first inside each group. `labelled` holds, per run, its axis values and label.
pub fn availability_ranking(labelled: &[(Vec<(String, String)>, Availability)], parameters: &[String]) -> Vec<RankRow> {
    let mut rows = Vec::new();
    for param in parameters {
        let mut groups: Vec<(String, i64, usize)> = Vec::new();
        for (values, label) in labelled {
            let Some((_, v)) = values.iter().find(|(p, _)| p == param) else {
                continue;
            };
            match groups.iter_mut().find(|g| &g.0 == v) {
                Some(g) => {
                    g.1 += label.index() as i64;
                    g.2 += 1;
                }
                None => groups.push((v.clone(), label.index() as i64, 1)),
            }
        }
        let mut group_rows: Vec<RankRow> = groups
            .into_iter()
            .map(|(value, sum, runs)| RankRow {
                parameter: param.clone(),
                value,
                mean_index: sum as f64 / runs as f64,
                runs,
            })
            .collect();
        // stable: equal means keep first-seen order
        group_rows.sort_by(|a, b| b.mean_index.total_cmp(&a.mean_index));
        rows.extend(group_rows);
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMetric {
    FuelGPerStep,
    SocDelta,
    EquivalentGPerStep,
}

impl HeatmapMetric {
    pub const ALL: [HeatmapMetric; 3] = [
        HeatmapMetric::FuelGPerStep,
        HeatmapMetric::SocDelta,
        HeatmapMetric::EquivalentGPerStep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HeatmapMetric::FuelGPerStep => "fuel_g_per_step",
            HeatmapMetric::SocDelta => "soc_delta",
            HeatmapMetric::EquivalentGPerStep => "equivalent_g_per_step",
        }
    }
}

/// Final-evaluation numbers one heatmap cell is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellInput {
    pub fuel_g: f64,
    pub soc_variation: f64,
    pub steps: usize,
    /// Fuel grams per unit SOC at S = 1.
    pub unit_weight: f64,
}

impl CellInput {
    pub fn metric(&self, metric: HeatmapMetric, s: f64) -> f64 {
        let steps = self.steps.max(1) as f64;
        match metric {
            HeatmapMetric::FuelGPerStep => self.fuel_g / steps,
            HeatmapMetric::SocDelta => self.soc_variation,
            HeatmapMetric::EquivalentGPerStep => (self.fuel_g + s * self.unit_weight * self.soc_variation) / steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub metric: HeatmapMetric,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// `cells[row][col]`, averaged over repetitions.
    pub cells: Vec<Vec<f64>>,
}

/// Grid of a final-evaluation metric over two sweep axes. Repetitions are averaged.
pub fn energy_cost_heatmap(
    points: &[(String, String, CellInput)],
    rows: &[String],
    cols: &[String],
    metric: HeatmapMetric,
    s: f64,
) -> Result<Heatmap> {
    let mut sums = vec![vec![(0.0, 0usize); cols.len()]; rows.len()];
    for (r, c, input) in points {
        let (Some(i), Some(j)) = (rows.iter().position(|x| x == r), cols.iter().position(|x| x == c)) else {
            continue;
        };
        sums[i][j].0 += input.metric(metric, s);
        sums[i][j].1 += 1;
    }
    let mut cells = vec![vec![0.0; cols.len()]; rows.len()];
    for (i, row) in sums.iter().enumerate() {
        for (j, &(sum, n)) in row.iter().enumerate() {
            if n == 0 {
                return Err(Error::MissingCell {
                    state_n: i,
                    action_n: j,
                });
            }
            cells[i][j] = sum / n as f64;
        }
    }
    Ok(Heatmap {
        metric,
        rows: rows.to_vec(),
        cols: cols.to_vec(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateDensity {
    pub total: u64,
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: u64,
    pub zero_fraction: f64,
}

/// Summary of Q-table update counts (nearest-rank percentiles).
pub fn qtable_update_density(visits: &[u64]) -> UpdateDensity {
    if visits.is_empty() {
        return UpdateDensity {
            total: 0,
            mean: 0.0,
            p50: 0.0,
            p90: 0.0,
            p99: 0.0,
            max: 0,
            zero_fraction: 1.0,
        };
    }
    let mut sorted = visits.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let pct = |p: f64| sorted[((p * n as f64).ceil() as usize).clamp(1, n) - 1] as f64;
    let total: u64 = sorted.iter().sum();
    UpdateDensity {
        total,
        mean: total as f64 / n as f64,
        p50: pct(0.5),
        p90: pct(0.9),
        p99: pct(0.99),
        max: sorted[n - 1],
        zero_fraction: sorted.iter().filter(|&&v| v == 0).count() as f64 / n as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(episode: usize, reward_sum: f64, terminated: bool) -> CurvePoint {
        CurvePoint {
            episode,
            reward_sum,
            fuel_g: 0.0,
            soc_variation: 0.0,
            length: 10,
            terminated,
        }
    }

    #[test]
    fn classifier_branches() {
        let t = AvailabilityThresholds::default();
        assert!(matches!(classify_availability(&[], 0.0, &t), Err(Error::EmptyCurve)));
        let all_term: Vec<_> = (1..=20).map(|e| point(e, 500.0, true)).collect();
        assert_eq!(classify_availability(&all_term, 100.0, &t).unwrap(), Availability::Awful);
        let improving: Vec<_> = (1..=20).map(|e| point(e, e as f64 * 10.0, false)).collect();
        assert_eq!(classify_availability(&improving, 150.0, &t).unwrap(), Availability::Valuable);
        // just under baseline, one termination in the 4-point window
        let mut wobble: Vec<_> = (1..=40).map(|e| point(e, 95.0 + (e % 2) as f64, false)).collect();
        wobble[39].terminated = true;
        assert_eq!(classify_availability(&wobble, 100.0, &t).unwrap(), Availability::Defective);
        // negative baseline: far below is awful
        let bad: Vec<_> = (1..=10).map(|e| point(e, -300.0, false)).collect();
        assert_eq!(classify_availability(&bad, -100.0, &t).unwrap(), Availability::Awful);
    }

    #[test]
    fn ranking_means() {
        let v = |a: &str| vec![("alpha".to_string(), a.to_string())];
        let labelled = vec![
            (v("0.1"), Availability::Valuable),
            (v("0.1"), Availability::Awful),
            (v("0.3"), Availability::Awful),
            (v("0.5"), Availability::Valuable),
        ];
        let rows = availability_ranking(&labelled, &["alpha".into()]);
        let got: Vec<_> = rows.iter().map(|r| (r.value.as_str(), r.mean_index)).collect();
        assert_eq!(got, vec![("0.5", 1.0), ("0.1", 0.0), ("0.3", -1.0)]);
    }

    #[test]
    fn heatmap_shape_and_missing() {
        let names: Vec<String> = ["5", "11"].iter().map(|s| s.to_string()).collect();
        let cell = |fuel: f64, dsoc: f64| CellInput {
            fuel_g: fuel,
            soc_variation: dsoc,
            steps: 10,
            unit_weight: 600.0,
        };
        let mut pts = vec![
            ("5".to_string(), "5".to_string(), cell(10.0, 0.0)),
            ("5".to_string(), "11".to_string(), cell(20.0, 0.1)),
            ("11".to_string(), "5".to_string(), cell(30.0, 0.0)),
        ];
        assert!(matches!(
            energy_cost_heatmap(&pts, &names, &names, HeatmapMetric::FuelGPerStep, 1.0),
            Err(Error::MissingCell { state_n: 1, action_n: 1 })
        ));
        pts.push(("11".to_string(), "11".to_string(), cell(40.0, 0.0)));
        let h = energy_cost_heatmap(&pts, &names, &names, HeatmapMetric::FuelGPerStep, 1.0).unwrap();
        assert_eq!(h.cells, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let soc = energy_cost_heatmap(&pts, &names, &names, HeatmapMetric::SocDelta, 1.0).unwrap();
        assert_eq!(soc.cells[0][0], 0.0);
        let eq0 = energy_cost_heatmap(&pts, &names, &names, HeatmapMetric::EquivalentGPerStep, 0.0).unwrap();
        assert_eq!(eq0.cells, h.cells);
        let eq1 = energy_cost_heatmap(&pts, &names, &names, HeatmapMetric::EquivalentGPerStep, 1.0).unwrap();
        assert!((eq1.cells[0][1] - (20.0 + 60.0) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn density() {
        let d = qtable_update_density(&[0; 12]);
        assert_eq!((d.total, d.zero_fraction), (0, 1.0));
        let d = qtable_update_density(&[0, 0, 4, 4, 8, 8, 10, 10, 10, 100]);
        assert_eq!(d.total, 154);
        assert_eq!(d.max, 100);
        assert_eq!(d.p50, 8.0);
        assert_eq!(d.zero_fraction, 0.2);
    }
}
