//! Tabular control: Monte Carlo, SARSA, Q-learning and SARSA(λ) with ε-greedy behavior.

mod qtable;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envmdp::{EmsEnvironment, EpisodeSummary, Trajectory};
use crate::error::{Error, Result};

pub use qtable::{epsilon_greedy, QTable};

/// What the learners need from an environment.
pub trait Environment {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Starts an episode; `start_soc` is ignored by environments without a battery.
    fn reset(&mut self, start_soc: f64) -> Result<usize>;
    fn step(&mut self, action: usize) -> Result<EnvStep>;
    fn summary(&self) -> EpisodeSummary;
    fn set_recording(&mut self, _on: bool) {}
    fn take_trajectory(&mut self) -> Option<Trajectory> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvStep {
    pub next_state: usize,
    pub reward: f64,
    /// The episode is over.
    pub done: bool,
    /// Over because of a step cap, not a terminal state: learners still bootstrap.
    pub truncated: bool,
}

impl EnvStep {
    fn terminal(&self) -> bool {
        self.done && !self.truncated
    }
}

impl Environment for EmsEnvironment {
    fn n_states(&self) -> usize {
        EmsEnvironment::n_states(self)
    }
    fn n_actions(&self) -> usize {
        EmsEnvironment::n_actions(self)
    }
    fn reset(&mut self, start_soc: f64) -> Result<usize> {
        EmsEnvironment::reset(self, start_soc)
    }
    fn step(&mut self, action: usize) -> Result<EnvStep> {
        let t = EmsEnvironment::step(self, action)?;
        Ok(EnvStep {
            next_state: t.next_state,
            reward: t.reward,
            done: t.done,
            truncated: false,
        })
    }
    fn summary(&self) -> EpisodeSummary {
        EmsEnvironment::summary(self)
    }
    fn set_recording(&mut self, on: bool) {
        EmsEnvironment::set_recording(self, on)
    }
    fn take_trajectory(&mut self) -> Option<Trajectory> {
        EmsEnvironment::take_trajectory(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[serde(rename = "mc")]
    MonteCarlo,
    Sarsa,
    #[serde(rename = "qlearning")]
    QLearning,
    SarsaLambda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::MonteCarlo,
        Algorithm::Sarsa,
        Algorithm::QLearning,
        Algorithm::SarsaLambda,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::MonteCarlo => "mc",
            Algorithm::Sarsa => "sarsa",
            Algorithm::QLearning => "qlearning",
            Algorithm::SarsaLambda => "sarsa_lambda",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config("algorithm.name", format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub alpha_lr: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub start_soc: f64,
    pub lambda: f64,
    /// 0 disables periodic evaluation.
    pub eval_every: usize,
    pub eval_epsilon: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha_lr: 0.03,
            epsilon: 0.3,
            gamma: 0.995,
            episodes: 2000,
            start_soc: 0.6,
            lambda: 0.9,
            eval_every: 100,
            eval_epsilon: 0.3,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let check = |key: &str, ok: bool, range: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("algorithm.{key}"), format!("must lie in {range}")))
            }
        };
        check("alpha_lr", self.alpha_lr > 0.0 && self.alpha_lr <= 1.0, "(0, 1]")?;
        check("epsilon", (0.0..=1.0).contains(&self.epsilon), "[0, 1]")?;
        check("gamma", (0.0..=1.0).contains(&self.gamma), "[0, 1]")?;
        check("start_soc", (0.0..=1.0).contains(&self.start_soc), "[0, 1]")?;
        check("lambda", (0.0..=1.0).contains(&self.lambda), "[0, 1]")?;
        check("eval_epsilon", (0.0..=1.0).contains(&self.eval_epsilon), "[0, 1]")
    }
}

/// One periodic evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Training episodes completed before this evaluation.
    pub episode: usize,
    pub reward_sum: f64,
    pub fuel_g: f64,
    pub soc_variation: f64,
    pub length: usize,
    pub terminated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub reward_sum: f64,
    pub summary: EpisodeSummary,
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub qtable: QTable,
    pub curve: Vec<CurvePoint>,
    /// Greedy (ε = 0) episode after training, with its trajectory when the environment records one.
    pub final_eval: Evaluation,
}

/// Trace entries below this are dropped.
const TRACE_CUTOFF: f64 = 1e-8;

struct Learner<'a, F: FnMut(&QTable)> {
    q: QTable,
    h: &'a Hyperparams,
    rng: ChaCha8Rng,
    observe: F,
    /// Sparse eligibility trace: (state, action, value).
    trace: Vec<(usize, usize, f64)>,
    states: Vec<usize>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
}

impl<F: FnMut(&QTable)> Learner<'_, F> {
    fn act(&mut self, s: usize) -> usize {
        epsilon_greedy(&self.q, s, self.h.epsilon, &mut self.rng)
    }

    fn td_update(&mut self, s: usize, a: usize, target: f64) {
        let q = self.q.get(s, a);
        self.q.set(s, a, q + self.h.alpha_lr * (target - q));
        self.q.record_visit(s, a);
        (self.observe)(&self.q);
    }

    fn episode<E: Environment + ?Sized>(&mut self, alg: Algorithm, env: &mut E) -> Result<()> {
        let h = self.h;
        let mut s = env.reset(h.start_soc)?;
        match alg {
            Algorithm::QLearning => loop {
                let a = self.act(s);
                let st = env.step(a)?;
                let boot = if st.terminal() { 0.0 } else { self.q.max(st.next_state) };
                self.td_update(s, a, st.reward + h.gamma * boot);
                if st.done {
                    return Ok(());
                }
                s = st.next_state;
            },
            Algorithm::Sarsa => {
                let mut a = self.act(s);
                loop {
                    let st = env.step(a)?;
                    if st.terminal() {
                        self.td_update(s, a, st.reward);
                        return Ok(());
                    }
                    let a2 = self.act(st.next_state);
                    let target = st.reward + h.gamma * self.q.get(st.next_state, a2);
                    self.td_update(s, a, target);
                    if st.done {
                        return Ok(());
                    }
                    s = st.next_state;
                    a = a2;
                }
            }
            Algorithm::SarsaLambda => {
                self.trace.clear();
                let decay = h.gamma * h.lambda;
                let mut a = self.act(s);
                loop {
                    let st = env.step(a)?;
                    let a2 = if st.terminal() { 0 } else { self.act(st.next_state) };
                    let boot = if st.terminal() { 0.0 } else { self.q.get(st.next_state, a2) };
                    let delta = st.reward + h.gamma * boot - self.q.get(s, a);

                    self.trace.retain_mut(|e| {
                        e.2 *= decay;
                        e.2 >= TRACE_CUTOFF
                    });
                    match self.trace.iter_mut().find(|e| e.0 == s && e.1 == a) {
                        Some(e) => e.2 += 1.0,
                        None => self.trace.push((s, a, 1.0)),
                    }
                    for &(ts, ta, e) in &self.trace {
                        self.q.add(ts, ta, h.alpha_lr * delta * e);
                    }
                    self.q.record_visit(s, a);
                    (self.observe)(&self.q);

                    if st.done {
                        return Ok(());
                    }
                    s = st.next_state;
                    a = a2;
                }
            }
            Algorithm::MonteCarlo => {
                self.states.clear();
                self.actions.clear();
                self.rewards.clear();
                loop {
                    let a = self.act(s);
                    let st = env.step(a)?;
                    self.states.push(s);
                    self.actions.push(a);
                    self.rewards.push(st.reward);
                    if st.done {
                        break;
                    }
                    s = st.next_state;
                }
                // returns overwrite the reward buffer in place
                let mut g = 0.0;
                for r in self.rewards.iter_mut().rev() {
                    g = *r + h.gamma * g;
                    *r = g;
                }
                for t in 0..self.states.len() {
                    let (s, a, g) = (self.states[t], self.actions[t], self.rewards[t]);
                    self.td_update(s, a, g);
                }
                Ok(())
            }
        }
    }
}

/// Runs one episode following ε-greedy on `q` without learning.
pub fn evaluate<E: Environment + ?Sized>(
    env: &mut E,
    q: &QTable,
    start_soc: f64,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
    record: bool,
) -> Result<Evaluation> {
    env.set_recording(record);
    let mut s = env.reset(start_soc)?;
    let mut reward_sum = 0.0;
    loop {
        let st = env.step(epsilon_greedy(q, s, epsilon, rng))?;
        reward_sum += st.reward;
        if st.done {
            break;
        }
        s = st.next_state;
    }
    let trajectory = env.take_trajectory();
    env.set_recording(false);
    Ok(Evaluation {
        reward_sum,
        summary: env.summary(),
        trajectory,
    })
}

/// Separate stream for evaluation episodes so they never perturb training draws.
pub fn eval_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

pub fn train<E: Environment + ?Sized>(alg: Algorithm, env: &mut E, h: &Hyperparams) -> Result<TrainOutcome> {
    train_observed(alg, env, h, |_| {})
}

/// [`train`] with a callback after every Q-table update.
pub fn train_observed<E, F>(alg: Algorithm, env: &mut E, h: &Hyperparams, observe: F) -> Result<TrainOutcome>
where
    E: Environment + ?Sized,
    F: FnMut(&QTable),
{
    h.validate()?;
    let mut learner = Learner {
        q: QTable::zeros(env.n_states(), env.n_actions()),
        h,
        rng: ChaCha8Rng::seed_from_u64(h.seed),
        observe,
        trace: Vec::new(),
        states: Vec::new(),
        actions: Vec::new(),
        rewards: Vec::new(),
    };
    let mut eval_stream = eval_rng(h.seed);
    let mut curve = Vec::new();
    env.set_recording(false);
    for ep in 1..=h.episodes {
        learner.episode(alg, env)?;
        if h.eval_every > 0 && ep % h.eval_every == 0 {
            let e = evaluate(env, &learner.q, h.start_soc, h.eval_epsilon, &mut eval_stream, false)?;
            curve.push(CurvePoint {
                episode: ep,
                reward_sum: e.reward_sum,
                fuel_g: e.summary.fuel_g,
                soc_variation: e.summary.soc_variation(),
                length: e.summary.steps,
                terminated: e.summary.terminated,
            });
        }
    }
    let final_eval = evaluate(env, &learner.q, h.start_soc, 0.0, &mut eval_stream, true)?;
    Ok(TrainOutcome {
        qtable: learner.q,
        curve,
        final_eval,
    })
}
