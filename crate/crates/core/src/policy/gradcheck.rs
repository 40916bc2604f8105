//! Finite-difference trials for whole actor episodes and the critic on
//! small fleets (four customers, two vehicles).

use cmvrp_autodiff::gradcheck::{cases::STEP, check};
use cmvrp_autodiff::{Array, Graph, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{play_episode, Actor, Critic, CriticNodes, DecodeMode, PolicyDims};
use crate::env::default_round_cap;
use crate::error::Result;
use crate::instances::{generate_instance, ExperimentConfig};
use crate::rng::{stream_rng, Domain};

pub fn toy_experiment(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: "toy".into(),
        num_customers: 4,
        num_vehicles: 2,
        capacities: vec![10, 15],
        test_set_size: 1,
        seed,
    }
}

/// Samples an episode, then checks the gradient of a random weighting of
/// its per-step log-probabilities with respect to both actors' parameters
/// (three coordinates per tensor). Returns the worst relative error.
pub fn actor_episode_trial(trial: u64) -> Result<f64> {
    let dims = PolicyDims::new(4, 3, 2)?;
    let inst = generate_instance(&toy_experiment(trial), trial)?;
    let actors = (0..2)
        .map(|j| Actor::init(j, dims, 1000 + trial))
        .collect::<Result<Vec<_>>>()?;
    let cap = default_round_cap(inst.num_customers());
    let mut sample_rng = stream_rng(trial, Domain::Sampling, 0);
    let actions = {
        let mut g = Graph::new();
        let nodes = actors.iter().map(|a| a.bind(&mut g)).collect::<Result<Vec<_>>>()?;
        play_episode(&mut g, &nodes, &inst, cap, DecodeMode::Sample(&mut sample_rng))?.actions()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(trial);
    let weights: Vec<f64> = (0..actions.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let inputs: Vec<Array> = actors.iter().flat_map(|a| a.params.values().to_vec()).collect();
    let split = actors[0].params.len();
    let report = check(
        &inputs,
        |g, ids| {
            let nodes = vec![
                actors[0].attach(g, ids[..split].to_vec()).map_err(as_autodiff)?,
                actors[1].attach(g, ids[split..].to_vec()).map_err(as_autodiff)?,
            ];
            let ep = play_episode(g, &nodes, &inst, cap, DecodeMode::Replay(&actions)).map_err(as_autodiff)?;
            let lps: Vec<NodeId> = ep.steps.iter().map(|s| s.log_prob_node).collect();
            weighted_sum(g, &lps, &weights)
        },
        STEP,
        Some(3),
    )?;
    Ok(report.max_relative_error)
}

/// Checks the gradient of `(V(s) − target)²` with respect to every critic
/// parameter. Biases are randomized: at zero a whole ReLU layer can sit on
/// its kink, where one-sided derivatives and central differences disagree.
pub fn critic_trial(trial: u64) -> Result<f64> {
    let dims = PolicyDims::new(6, 6, 2)?;
    let inst = generate_instance(&toy_experiment(trial), trial)?;
    let mut critic = Critic::init(dims, trial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(trial);
    for v in critic.params.values_mut() {
        if v.rows() == 1 {
            v.data_mut().iter_mut().for_each(|b| *b = rng.gen_range(-0.3..0.3));
        }
    }
    let target = 1.0 + trial as f64 / 50.0;
    let report = check(
        critic.params.values(),
        |g, ids| {
            let nodes = CriticNodes { params: ids.to_vec() };
            let v = critic.forward(g, &nodes, &inst).map_err(as_autodiff)?;
            let t = g.constant(Array::scalar(target))?;
            let diff = g.sub(v, t)?;
            g.mul(diff, diff)
        },
        STEP,
        None,
    )?;
    Ok(report.max_relative_error)
}

fn weighted_sum(g: &mut Graph<'_>, nodes: &[NodeId], weights: &[f64]) -> cmvrp_autodiff::Result<NodeId> {
    let mut total = g.scale(nodes[0], weights[0])?;
    for (&n, &w) in nodes[1..].iter().zip(&weights[1..]) {
        let term = g.scale(n, w)?;
        total = g.add(total, term)?;
    }
    Ok(total)
}

fn as_autodiff(e: crate::CoreError) -> cmvrp_autodiff::AutodiffError {
    match e {
        crate::CoreError::Autodiff(inner) => inner,
        other => panic!("policy evaluation failed inside a gradient check: {other}"),
    }
}
