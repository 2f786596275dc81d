//! Exact value iteration on small explicit MDPs, and the fixtures the learners are checked against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envmdp::EpisodeSummary;
use crate::error::{Error, Result};
use crate::tabrl::{train_observed, Algorithm, EnvStep, Environment, Hyperparams, QTable, TrainOutcome};

/// Finite MDP with explicit transition distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitMdp {
    pub n_states: usize,
    pub n_actions: usize,
    /// `transitions[s][a]` lists `(next_state, probability)`.
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
    pub reward: Vec<Vec<f64>>,
    pub terminal: Vec<bool>,
    pub gamma: f64,
}

impl ExplicitMdp {
    /// Deterministic MDP from a `next[s][a]` table.
    pub fn deterministic(next: Vec<Vec<usize>>, reward: Vec<Vec<f64>>, terminal: Vec<bool>, gamma: f64) -> Result<Self> {
        let n_actions = next.first().map_or(0, Vec::len);
        let mdp = ExplicitMdp {
            n_states: next.len(),
            n_actions,
            transitions: next
                .into_iter()
                .map(|row| row.into_iter().map(|s2| vec![(s2, 1.0)]).collect())
                .collect(),
            reward,
            terminal,
            gamma,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid("explicit MDP", msg));
        if self.n_states == 0 || self.n_actions == 0 {
            return bad("needs at least one state and one action".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1]", self.gamma));
        }
        if self.transitions.len() != self.n_states
            || self.reward.len() != self.n_states
            || self.terminal.len() != self.n_states
        {
            return bad("per-state tables have the wrong length".into());
        }
        for s in 0..self.n_states {
            if self.transitions[s].len() != self.n_actions || self.reward[s].len() != self.n_actions {
                return bad(format!("state {s} has the wrong number of actions"));
            }
            for a in 0..self.n_actions {
                if !self.reward[s][a].is_finite() {
                    return bad(format!("reward at ({s}, {a}) is not finite"));
                }
                let dist = &self.transitions[s][a];
                if dist.iter().any(|&(s2, p)| s2 >= self.n_states || !(p >= 0.0)) {
                    return bad(format!("bad transition at ({s}, {a})"));
                }
                let total: f64 = dist.iter().map(|d| d.1).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("transition probabilities at ({s}, {a}) sum to {total}"));
                }
            }
        }
        Ok(())
    }

    fn backup(&self, v: &[f64], s: usize, a: usize) -> f64 {
        if self.terminal[s] {
            return 0.0;
        }
        let next: f64 = self.transitions[s][a].iter().map(|&(s2, p)| p * v[s2]).sum();
        self.reward[s][a] + self.gamma * next
    }

    /// Action with the largest immediate reward (lowest index on ties).
    pub fn reward_argmax(&self, s: usize) -> usize {
        let row = &self.reward[s];
        (1..row.len()).fold(0, |best, a| if row[a] > row[best] { a } else { best })
    }
}

/// Bellman optimality iteration until the max-norm change drops below `tol`.
/// Returns `(V*, Q*)`; terminal states are worth 0.
pub fn value_iteration(mdp: &ExplicitMdp, tol: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut v = vec![0.0; mdp.n_states];
    let mut q = vec![vec![0.0; mdp.n_actions]; mdp.n_states];
    loop {
        let mut change = 0.0f64;
        for s in 0..mdp.n_states {
            for a in 0..mdp.n_actions {
                q[s][a] = mdp.backup(&v, s, a);
            }
        }
        for s in 0..mdp.n_states {
            let best = q[s].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            change = change.max((best - v[s]).abs());
            v[s] = best;
        }
        if change < tol {
            return (v, q);
        }
    }
}

/// Largest one-step Bellman optimality residual of `v`.
pub fn bellman_residual(mdp: &ExplicitMdp, v: &[f64]) -> f64 {
    (0..mdp.n_states)
        .map(|s| {
            let best = (0..mdp.n_actions)
                .map(|a| mdp.backup(v, s, a))
                .fold(f64::NEG_INFINITY, f64::max);
            (best - v[s]).abs()
        })
        .fold(0.0, f64::max)
}

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// States `0..n` in a line; left/right moves, −1 per step, terminal at `n − 1`, left at 0 stays put.
pub fn build_chain_mdp(n: usize, gamma: f64) -> ExplicitMdp {
    assert!(n >= 2, "chain needs at least two states");
    let next = (0..n).map(|s| vec![s.saturating_sub(1), (s + 1).min(n - 1)]).collect();
    let reward = vec![vec![-1.0; 2]; n];
    let terminal = (0..n).map(|s| s == n - 1).collect();
    ExplicitMdp::deterministic(next, reward, terminal, gamma).expect("chain is valid")
}

/// Two live states and a terminal. In state 0, action 0 pays +1 and usually (p = 0.9) moves on
/// to state 1, otherwise ends; action 1 ends at once for 0. In state 1, action 0 ends for +2 and
/// action 1 ends for +1.
pub fn two_state_mdp(gamma: f64) -> ExplicitMdp {
    let mdp = ExplicitMdp {
        n_states: 3,
        n_actions: 2,
        transitions: vec![
            vec![vec![(1, 0.9), (2, 0.1)], vec![(2, 1.0)]],
            vec![vec![(2, 1.0)], vec![(2, 1.0)]],
            vec![vec![(2, 1.0)], vec![(2, 1.0)]],
        ],
        reward: vec![vec![1.0, 0.0], vec![2.0, 1.0], vec![0.0, 0.0]],
        terminal: vec![false, false, true],
        gamma,
    };
    mdp.validate().expect("fixture is valid");
    mdp
}

/// Random rewards; action 0 steps to the next state (so every state is reachable from any
/// other), the rest jump to random states. No terminal states.
pub fn random_reward_mdp(n_states: usize, n_actions: usize, gamma: f64, seed: u64) -> ExplicitMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let next = (0..n_states)
        .map(|s| {
            (0..n_actions)
                .map(|a| if a == 0 { (s + 1) % n_states } else { rng.gen_range(0..n_states) })
                .collect()
        })
        .collect();
    let reward = (0..n_states)
        .map(|_| (0..n_actions).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    ExplicitMdp::deterministic(next, reward, vec![false; n_states], gamma).expect("random MDP is valid")
}

/// An [`ExplicitMdp`] as a learner environment. Episodes end at terminal states or after
/// `max_steps` (a truncation, not a terminal).
#[derive(Debug, Clone)]
pub struct MdpEnv<'a> {
    mdp: &'a ExplicitMdp,
    start: usize,
    max_steps: usize,
    state: usize,
    steps: usize,
    rng: ChaCha8Rng,
}

impl<'a> MdpEnv<'a> {
    pub fn new(mdp: &'a ExplicitMdp, start: usize, max_steps: usize) -> Self {
        assert!(start < mdp.n_states && max_steps > 0);
        MdpEnv {
            mdp,
            start,
            max_steps,
            state: start,
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(0x5eed),
        }
    }

    fn sample(&mut self, s: usize, a: usize) -> usize {
        let dist = &self.mdp.transitions[s][a];
        if dist.len() == 1 {
            return dist[0].0;
        }
        let mut u: f64 = self.rng.gen();
        for &(s2, p) in dist {
            if u < p {
                return s2;
            }
            u -= p;
        }
        dist[dist.len() - 1].0
    }
}

impl Environment for MdpEnv<'_> {
    fn n_states(&self) -> usize {
        self.mdp.n_states
    }

    fn n_actions(&self) -> usize {
        self.mdp.n_actions
    }

    fn reset(&mut self, _start_soc: f64) -> Result<usize> {
        self.state = self.start;
        self.steps = 0;
        Ok(self.state)
    }

    fn step(&mut self, action: usize) -> Result<EnvStep> {
        if self.mdp.terminal[self.state] || self.steps >= self.max_steps {
            return Err(Error::EpisodeFinished);
        }
        if action >= self.mdp.n_actions {
            return Err(Error::IndexOutOfRange {
                index: action,
                len: self.mdp.n_actions,
            });
        }
        let reward = self.mdp.reward[self.state][action];
        self.state = self.sample(self.state, action);
        self.steps += 1;
        let terminal = self.mdp.terminal[self.state];
        let capped = self.steps >= self.max_steps;
        Ok(EnvStep {
            next_state: self.state,
            reward,
            done: terminal || capped,
            truncated: capped && !terminal,
        })
    }

    fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            fuel_g: 0.0,
            soc_start: 0.0,
            soc_end: 0.0,
            steps: self.steps,
            terminated: false,
        }
    }
}

/// One oracle comparison: `residual` must stay at or below `tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Signature of a learner under test; [`train_observed`] is the real one.
pub type Trainer =
    dyn Fn(Algorithm, &mut dyn Environment, &Hyperparams, &mut dyn FnMut(&QTable)) -> Result<TrainOutcome>;

/// Learners against exact values on the fixture MDPs.
pub fn oracle_suite() -> Result<Vec<OracleCheck>> {
    oracle_suite_with(&|alg, env, h, obs| train_observed(alg, env, h, obs))
}

pub fn oracle_suite_with(trainer: &Trainer) -> Result<Vec<OracleCheck>> {
    let quiet = |seed| Hyperparams {
        eval_every: 0,
        seed,
        ..Default::default()
    };
    let mut checks = Vec::new();

    let chain = build_chain_mdp(5, 0.99);
    let (v, _) = value_iteration(&chain, 1e-12);
    checks.push(OracleCheck {
        name: "value iteration Bellman residual (chain)",
        residual: bellman_residual(&chain, &v),
        tolerance: 1e-9,
    });

    let h = Hyperparams {
        alpha_lr: 0.1,
        epsilon: 0.2,
        gamma: 0.99,
        episodes: 5000,
        ..quiet(11)
    };
    let out = trainer(Algorithm::QLearning, &mut MdpEnv::new(&chain, 0, 1000), &h, &mut |_| {})?;
    checks.push(OracleCheck {
        name: "q-learning max_a Q vs V* (chain)",
        residual: (0..chain.n_states).map(|s| (out.qtable.max(s) - v[s]).abs()).fold(0.0, f64::max),
        tolerance: 1e-6,
    });

    let chain9 = build_chain_mdp(5, 0.9);
    let h = Hyperparams {
        alpha_lr: 0.1,
        epsilon: 0.3,
        gamma: 0.9,
        episodes: 100,
        lambda: 0.0,
        ..quiet(11)
    };
    let mut a = Vec::new();
    let mut b = Vec::new();
    trainer(Algorithm::Sarsa, &mut MdpEnv::new(&chain9, 0, 500), &h, &mut |q| a.push(q.values().to_vec()))?;
    trainer(Algorithm::SarsaLambda, &mut MdpEnv::new(&chain9, 0, 500), &h, &mut |q| b.push(q.values().to_vec()))?;
    let gap = if a.len() != b.len() || a.is_empty() {
        f64::INFINITY
    } else {
        a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    checks.push(OracleCheck {
        name: "sarsa(lambda=0) vs sarsa Q trajectory",
        residual: gap,
        tolerance: 0.0,
    });

    let two = two_state_mdp(0.9);
    let (_, qstar) = value_iteration(&two, 1e-12);
    let h = Hyperparams {
        alpha_lr: 0.01,
        epsilon: 0.05,
        gamma: 0.9,
        episodes: 10_000,
        ..quiet(11)
    };
    let out = trainer(Algorithm::MonteCarlo, &mut MdpEnv::new(&two, 0, 200), &h, &mut |_| {})?;
    let residual = (0..two.n_states)
        .filter(|&s| !two.terminal[s])
        .map(|s| {
            let a = out.qtable.argmax(s);
            (out.qtable.get(s, a) - qstar[s][a]).abs()
        })
        .fold(0.0, f64::max);
    checks.push(OracleCheck {
        name: "monte carlo greedy Q vs Q* (two-state)",
        residual,
        tolerance: 0.05,
    });

    let rnd = random_reward_mdp(6, 3, 0.0, 3);
    let mut mismatches = 0.0;
    for alg in Algorithm::ALL {
        let h = Hyperparams {
            alpha_lr: 0.2,
            epsilon: 0.5,
            gamma: 0.0,
            episodes: 300,
            lambda: 0.5,
            ..quiet(5)
        };
        let out = trainer(alg, &mut MdpEnv::new(&rnd, 0, 50), &h, &mut |_| {})?;
        mismatches += (0..rnd.n_states)
            .filter(|&s| out.qtable.argmax(s) != rnd.reward_argmax(s))
            .count() as f64;
    }
    checks.push(OracleCheck {
        name: "gamma=0 greedy vs reward argmax (all learners)",
        residual: mismatches,
        tolerance: 0.0,
    });
    Ok(checks)
}
