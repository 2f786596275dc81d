//! Reinforcement-learning energy management for multi-power-source electric vehicles.
//!
//! The crate is organized bottom-up:
//!
//! * [`cycle`]: drive cycles (time/speed traces);
//! * [`powertrain`]: backward vehicle, engine, motor, fuel-cell and battery models and the
//!   one-step PHEV/FCEV plant evaluation;
//! * [`envmdp`]: the discretized episodic MDP wrapped around a plant and a cycle, with reward
//!   families and SOC constraint penalties;
//! * [`tabrl`]: Q-table, ε-greedy policy, Monte Carlo, SARSA, Q-learning and SARSA(λ);
//! * [`dporacle`]: exact value iteration on small explicit MDPs, used to check the learners;
//! * [`config`] and [`exp`]: run configuration, sweeps, metrics and report export.

pub mod config;
pub mod cycle;
pub mod dporacle;
pub mod envmdp;
mod error;
pub mod exp;
pub mod powertrain;
pub mod tabrl;

pub use error::{Error, Result};
