use rand::seq::IteratorRandom;

use crate::env::EnvState;
use crate::error::Result;
use crate::instances::ProblemInstance;
use crate::plan::RoutePlan;
use crate::rng::{stream_rng, Domain};

/// Plays the environment choosing uniformly among feasible actions until
/// the episode ends (all served and home, or the round cap).
pub fn random_policy(instance: &ProblemInstance, seed: u64, round_cap: usize) -> Result<RoutePlan> {
    let mut rng = stream_rng(seed, Domain::RandomPolicy, 0);
    let mut state = EnvState::with_round_cap(instance, round_cap);
    while !state.is_terminal() {
        let mask = state.feasible_actions();
        let action = mask
            .feasible_nodes()
            .choose(&mut rng)
            .expect("some action is always feasible");
        state.step(action)?;
    }
    state.finalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::default_round_cap;
    use crate::instances::{generate_instance, Customer, ExperimentConfig, Point};

    #[test]
    fn seeded_runs_repeat() {
        let inst = generate_instance(&ExperimentConfig::vrp10(), 3).unwrap();
        let a = random_policy(&inst, 9, 20).unwrap();
        assert_eq!(a, random_policy(&inst, 9, 20).unwrap());
        assert_ne!(a, random_policy(&inst, 10, 20).unwrap());
    }

    #[test]
    fn forced_path_has_single_outcome() {
        let c = Customer {
            coord: Point::new(0.0, 1.0),
            demand: 4,
        };
        let inst = ProblemInstance::new("one", Point::new(0.0, 0.0), vec![c], &[10]).unwrap();
        for seed in 0..5 {
            let plan = random_policy(&inst, seed, default_round_cap(1)).unwrap();
            assert!(plan.feasible);
            assert!((plan.total_length - 2.0).abs() < 1e-12);
        }
    }
}
