use cmvrp_autodiff::{Array, Graph, NodeId};

use super::actor::{attention_logits, decode_step, encode_customers, encode_vehicles, ActorNodes};
use super::distribution::{DecodeChoice, StepDistribution};
use crate::env::EnvState;
use crate::error::{CoreError, Result};
use crate::instances::ProblemInstance;
use crate::plan::RoutePlan;
use crate::rng::StreamRng;

/// Action selection for a whole episode.
#[derive(Debug)]
pub enum DecodeMode<'r> {
    Greedy,
    Sample(&'r mut StreamRng),
    /// Re-plays a recorded action sequence, rebuilding its log-probabilities.
    Replay(&'r [usize]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub agent: usize,
    /// [`EnvState::snapshot_hash`] before the action.
    pub state_hash: u64,
    pub mask: Vec<bool>,
    pub action: usize,
    pub log_prob: f64,
    /// Scalar graph node holding `log_prob`.
    pub log_prob_node: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub steps: Vec<StepRecord>,
    pub plan: RoutePlan,
}

impl Episode {
    pub fn actions(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.action).collect()
    }

    /// Log-probability of the whole trajectory under the policy.
    pub fn log_prob(&self) -> f64 {
        self.steps.iter().map(|s| s.log_prob).sum()
    }

    /// Number of decisions taken by each agent.
    pub fn steps_per_agent(&self, num_agents: usize) -> Vec<usize> {
        let mut counts = vec![0; num_agents];
        for s in &self.steps {
            counts[s.agent] += 1;
        }
        counts
    }
}

/// Runs one episode with vehicles acting in fleet order. `actors[j]` must be
/// bound in `g`. The decoder stream is shared: every step advances it with
/// the acting vehicle's decoder, fed the coordinates of the previous action
/// (the depot at the start).
pub fn play_episode(
    g: &mut Graph<'_>,
    actors: &[ActorNodes],
    instance: &ProblemInstance,
    round_cap: usize,
    mut mode: DecodeMode<'_>,
) -> Result<Episode> {
    if actors.len() != instance.num_vehicles() {
        return Err(CoreError::Contract(format!(
            "{} actors for a fleet of {}",
            actors.len(),
            instance.num_vehicles()
        )));
    }
    let hidden_dim = g.value(actors[0].dec_embed_b).cols();
    let mut hidden = g.constant(Array::zeros(&[1, hidden_dim]))?;
    let mut prev = instance.depot;
    let mut state = EnvState::with_round_cap(instance, round_cap);
    let mut steps = Vec::new();
    while !state.is_terminal() {
        let agent = state.acting_agent;
        let state_hash = state.snapshot_hash();
        let nodes = &actors[agent];
        let mask = state.feasible_actions().feasible;
        let cust = encode_customers(g, &state, nodes)?;
        let veh = encode_vehicles(g, &state, nodes)?;
        hidden = decode_step(g, prev, hidden, nodes)?;
        let logits = attention_logits(g, cust, veh, hidden, nodes)?;
        let log_probs = g.masked_log_softmax(logits, &mask)?;
        let choice = match &mut mode {
            DecodeMode::Greedy => DecodeChoice::Greedy,
            DecodeMode::Sample(rng) => DecodeChoice::Sample(rng),
            DecodeMode::Replay(actions) => match actions.get(steps.len()) {
                Some(&a) => DecodeChoice::Forced(a),
                None => {
                    return Err(CoreError::Contract(format!(
                        "replayed trajectory ends after {} steps before the episode does",
                        steps.len()
                    )))
                }
            },
        };
        let dist = StepDistribution::choose(g.value(log_probs).data().to_vec(), mask, choice)?;
        let log_prob_node = g.element(log_probs, dist.chosen)?;
        state.step(dist.chosen)?;
        prev = instance.coord(dist.chosen);
        steps.push(StepRecord {
            agent,
            state_hash,
            mask: dist.mask,
            action: dist.chosen,
            log_prob: dist.chosen_log_prob,
            log_prob_node,
        });
    }
    if let DecodeMode::Replay(actions) = mode {
        if actions.len() != steps.len() {
            return Err(CoreError::Contract(format!(
                "episode ended after {} steps but {} were given",
                steps.len(),
                actions.len()
            )));
        }
    }
    Ok(Episode {
        steps,
        plan: state.finalize()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::default_round_cap;
    use crate::instances::{generate_instance, ExperimentConfig};
    use crate::policy::{Actor, PolicyDims};
    use crate::rng::{stream_rng, Domain};

    fn setup(seed: u64) -> (ProblemInstance, Vec<Actor>) {
        let inst = generate_instance(&ExperimentConfig::vrp10(), seed).unwrap();
        let dims = PolicyDims::new(16, 16, 3).unwrap();
        let actors = (0..3).map(|j| Actor::init(j, dims, 11).unwrap()).collect();
        (inst, actors)
    }

    fn run(inst: &ProblemInstance, actors: &[Actor], mode: DecodeMode<'_>) -> Episode {
        let mut g = Graph::new();
        let nodes: Vec<_> = actors.iter().map(|a| a.bind(&mut g).unwrap()).collect();
        play_episode(&mut g, &nodes, inst, default_round_cap(inst.num_customers()), mode).unwrap()
    }

    #[test]
    fn greedy_is_deterministic_and_agents_alternate() {
        let (inst, actors) = setup(1);
        let a = run(&inst, &actors, DecodeMode::Greedy);
        let b = run(&inst, &actors, DecodeMode::Greedy);
        assert_eq!(a.plan, b.plan);
        assert_eq!(a.actions(), b.actions());
        for (t, s) in a.steps.iter().enumerate() {
            assert_eq!(s.agent, t % 3);
            assert!(s.mask[s.action]);
        }
    }

    #[test]
    fn trajectory_log_prob_is_sum_of_steps_and_replay_matches() {
        let (inst, actors) = setup(2);
        let mut rng = stream_rng(3, Domain::Sampling, 0);
        let sampled = run(&inst, &actors, DecodeMode::Sample(&mut rng));
        let actions = sampled.actions();
        let replayed = run(&inst, &actors, DecodeMode::Replay(&actions));
        assert_eq!(replayed.plan, sampled.plan);
        let direct: f64 = replayed.steps.iter().map(|s| s.log_prob).sum();
        assert!((replayed.log_prob() - direct).abs() <= 1e-12);
        assert_eq!(replayed.log_prob(), sampled.log_prob());
    }

    #[test]
    fn replay_rejects_wrong_lengths_and_masked_actions() {
        let (inst, actors) = setup(4);
        let actions = run(&inst, &actors, DecodeMode::Greedy).actions();
        let mut g = Graph::new();
        let nodes: Vec<_> = actors.iter().map(|a| a.bind(&mut g).unwrap()).collect();
        let cap = default_round_cap(10);
        assert!(play_episode(&mut g, &nodes, &inst, cap, DecodeMode::Replay(&actions[..3])).is_err());
        let mut longer = actions.clone();
        longer.push(0);
        assert!(play_episode(&mut g, &nodes, &inst, cap, DecodeMode::Replay(&longer)).is_err());
        // The first vehicle cannot stay at the depot while demand remains.
        assert!(play_episode(&mut g, &nodes, &inst, cap, DecodeMode::Replay(&[0])).is_err());
        assert!(play_episode(&mut g, &nodes[..2], &inst, cap, DecodeMode::Greedy).is_err());
    }

    #[test]
    fn episode_respects_round_cap() {
        let (inst, actors) = setup(5);
        let mut g = Graph::new();
        let nodes: Vec<_> = actors.iter().map(|a| a.bind(&mut g).unwrap()).collect();
        let ep = play_episode(&mut g, &nodes, &inst, 2, DecodeMode::Greedy).unwrap();
        assert!(ep.steps.len() <= 6);
        assert_eq!(ep.steps_per_agent(3).iter().sum::<usize>(), ep.steps.len());
    }
}
