use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Dense action-value table with per-cell update counts.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        QTable {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
            visits: vec![0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    fn idx(&self, s: usize, a: usize) -> usize {
        debug_assert!(s < self.n_states && a < self.n_actions);
        s * self.n_actions + a
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[self.idx(s, a)]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, q: f64) {
        let i = self.idx(s, a);
        self.values[i] = q;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn visits(&self) -> &[u64] {
        &self.visits
    }

    pub fn visit_count(&self, s: usize, a: usize) -> u64 {
        self.visits[self.idx(s, a)]
    }

    pub fn total_visits(&self) -> u64 {
        self.visits.iter().sum()
    }

    #[inline]
    pub(crate) fn record_visit(&mut self, s: usize, a: usize) {
        let i = self.idx(s, a);
        self.visits[i] += 1;
    }

    #[inline]
    pub(crate) fn add(&mut self, s: usize, a: usize, delta: f64) {
        let i = self.idx(s, a);
        self.values[i] += delta;
    }

    /// Greedy action; the lowest index wins ties.
    pub fn argmax(&self, s: usize) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for (a, &q) in row.iter().enumerate().skip(1) {
            if q > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn greedy_policy(&self) -> Vec<usize> {
        (0..self.n_states).map(|s| self.argmax(s)).collect()
    }

    /// CSV with header `state_index,action_index,q,visits`, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state_index,action_index,q,visits\n");
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let i = self.idx(s, a);
                writeln!(out, "{s},{a},{:?},{}", self.values[i], self.visits[i]).unwrap();
            }
        }
        out
    }

    pub fn from_csv(text: &str, n_states: usize, n_actions: usize, origin: &Path) -> Result<Self> {
        let mut table = QTable::zeros(n_states, n_actions);
        let mut seen = vec![false; n_states * n_actions];
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        for (k, rec) in reader.records().enumerate() {
            let line = k + 2;
            let parse_err = |msg: String| Error::Parse {
                path: origin.to_path_buf(),
                line,
                msg,
            };
            let rec = rec.map_err(|e| parse_err(e.to_string()))?;
            if rec.len() != 4 {
                return Err(parse_err(format!("expected 4 fields, got {}", rec.len())));
            }
            let field = |i: usize| rec[i].trim();
            let s: usize = field(0).parse().map_err(|e| parse_err(format!("state_index: {e}")))?;
            let a: usize = field(1).parse().map_err(|e| parse_err(format!("action_index: {e}")))?;
            let q: f64 = field(2).parse().map_err(|e| parse_err(format!("q: {e}")))?;
            let v: u64 = field(3).parse().map_err(|e| parse_err(format!("visits: {e}")))?;
            if s >= n_states || a >= n_actions {
                return Err(parse_err(format!("cell ({s}, {a}) outside a {n_states}x{n_actions} table")));
            }
            let i = table.idx(s, a);
            table.values[i] = q;
            table.visits[i] = v;
            seen[i] = true;
        }
        if let Some(missing) = seen.iter().position(|&x| !x) {
            return Err(Error::invalid(
                origin.display().to_string(),
                format!("missing cell ({}, {})", missing / n_actions, missing % n_actions),
            ));
        }
        Ok(table)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, n_states: usize, n_actions: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, n_states, n_actions, path)
    }
}

/// With probability `epsilon` a uniform action, otherwise the greedy one. `epsilon = 0` draws
/// nothing from `rng`.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &QTable, s: usize, epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        rng.gen_range(0..q.n_actions())
    } else {
        q.argmax(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tie_break_and_dominant() {
        let mut q = QTable::zeros(1, 3);
        q.set(0, 1, 5.0);
        q.set(0, 2, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(epsilon_greedy(&q, 0, 0.0, &mut rng), 1);
        q.set(0, 2, 6.0);
        for _ in 0..100 {
            assert_eq!(epsilon_greedy(&q, 0, 0.0, &mut rng), 2);
        }
    }

    #[test]
    fn pure_exploration_is_uniform() {
        let q = QTable::zeros(1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0.0f64; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[epsilon_greedy(&q, 0, 1.0, &mut rng)] += 1.0;
        }
        let e = n as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
        // 3 dof, p = 0.001 critical value
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut q = QTable::zeros(3, 2);
        q.set(0, 1, 0.1 + 0.2);
        q.set(2, 0, -1e-300);
        q.set(1, 1, 123456.789e10);
        q.record_visit(2, 1);
        let back = QTable::from_csv(&q.to_csv(), 3, 2, Path::new("q.csv")).unwrap();
        assert_eq!(back, q);
        assert!(QTable::from_csv(&q.to_csv(), 2, 2, Path::new("q.csv")).is_err());
        let truncated: String = q.to_csv().lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(QTable::from_csv(&truncated, 3, 2, Path::new("q.csv")).is_err());
    }
}
