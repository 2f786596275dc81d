//! Drive cycle plus plant wrapped as a discrete episodic MDP.

pub mod env;
pub mod grid;
pub mod reward;

pub use env::{
    run_baseline, run_fixed, wheel_demands, EmsEnvironment, EnvSettings, EpisodeSummary, StepRecord, Trajectory,
    Transition,
};
pub use grid::{ActionKind, ActionSpec, Grid, StateSpec};
pub use reward::{equivalence_factor, ConstraintSpec, RewardKind, RewardSpec};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::cycle::DriveCycle;
    use crate::powertrain::reference::{reference_fcev, reference_phev};
    use crate::powertrain::Plant;
    use crate::Error;

    fn phev_env(cycle: DriveCycle, settings: &EnvSettings) -> EmsEnvironment {
        EmsEnvironment::new(Arc::new(Plant::Phev(reference_phev())), Arc::new(cycle), settings).unwrap()
    }

    fn short_wltc(n: usize) -> DriveCycle {
        DriveCycle::wltc_class3b().truncated(n).unwrap()
    }

    #[test]
    fn zero_speed_cycle_gives_tau() {
        let cycle = DriveCycle::new("idle", 1.0, vec![0.0; 5]).unwrap();
        let mut env = phev_env(cycle, &EnvSettings::default());
        env.reset(0.6).unwrap();
        for a in 0..env.n_actions() {
            let t = env.step(a).unwrap();
            assert_eq!(t.reward, 1.0);
            assert_eq!(t.info.unwrap().delta_soc, 0.0);
            if t.done {
                break;
            }
        }
    }

    #[test]
    fn reset_examples() {
        let settings = EnvSettings {
            soc_range: Some((0.0, 1.0)),
            soc_points: 11,
            ..Default::default()
        };
        let mut env = phev_env(short_wltc(50), &settings);
        let s = env.reset(0.65).unwrap();
        // 0.65 sits exactly between 0.6 and 0.7
        assert_eq!(env.state_spec.decode(s).1, 6);
        assert_eq!(env.reset(0.65).unwrap(), s);
        let s = env.reset(0.0).unwrap();
        assert_eq!(env.state_spec.decode(s).1, 0);
        assert!(env.reset(1.5).is_err());
    }

    #[test]
    fn episode_runs_full_cycle_and_then_refuses() {
        let mut env = phev_env(short_wltc(120), &EnvSettings::default());
        let summary = run_fixed(&mut env, 0.6, 1.0).unwrap();
        assert_eq!(summary.steps, 120);
        assert!(!summary.terminated);
        assert!(summary.fuel_g > 0.0);
        assert!(matches!(env.step(0), Err(Error::EpisodeFinished)));
    }

    #[test]
    fn violation_terminates_with_penalty() {
        let mut env = phev_env(DriveCycle::wltc_class3b(), &EnvSettings::default());
        env.reset(env.constraints.soc_min + 0.01).unwrap();
        let mut last = None;
        while !env.is_done() {
            last = Some(env.step_command(0.0).unwrap());
        }
        let last = last.unwrap();
        assert!(last.done && last.violated);
        assert!(last.penalty < 0.0);
        assert!(env.summary().terminated);
        assert!(env.summary().steps < env.cycle().len());
    }

    #[test]
    fn telescoping_eq_instant() {
        let settings = EnvSettings {
            reward: RewardKind::EqInstant,
            equivalence_factor: 2.0,
            constraints: ConstraintSpec {
                w_dis: 0.0,
                w_chg: 0.0,
                terminate_on_violation: false,
                ..Default::default()
            },
            ..Default::default()
        };
        let mut env = phev_env(short_wltc(400), &settings);
        env.reset(0.6).unwrap();
        let mut total = 0.0;
        let mut k = 0;
        while !env.is_done() {
            total += env.step(k % env.n_actions()).unwrap().reward;
            k += 1;
        }
        let s = env.summary();
        let expect = s.steps as f64 - (s.fuel_g + env.reward.weight() * (s.soc_start - s.soc_end));
        assert!((total - expect).abs() < 1e-9, "{total} vs {expect}");
    }

    #[test]
    fn fcev_baseline_and_recording() {
        let plant = Arc::new(Plant::Fcev(reference_fcev()));
        let mut env = EmsEnvironment::new(plant, Arc::new(short_wltc(300)), &EnvSettings::default()).unwrap();
        assert_eq!(env.action_spec.kind, ActionKind::FcPower);
        env.set_recording(true);
        let s = run_baseline(&mut env, 0.6).unwrap();
        assert_eq!(s.steps, 300);
        assert!(s.fuel_g > 0.0);
        let traj = env.take_trajectory().unwrap();
        assert_eq!(traj.soc.len(), 301);
        assert_eq!(traj.steps.len(), 300);
        assert_eq!(*traj.soc.last().unwrap(), s.soc_end);
    }

    #[test]
    fn deterministic_steps() {
        let mut a = phev_env(short_wltc(200), &EnvSettings::default());
        let mut b = a.clone();
        a.reset(0.5).unwrap();
        b.reset(0.5).unwrap();
        for k in 0..200 {
            assert_eq!(a.step(k % 11).unwrap(), b.step(k % 11).unwrap());
        }
    }
}
