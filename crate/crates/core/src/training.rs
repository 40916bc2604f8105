//! Advantage actor-critic training.
//!
//! Every iteration samples a batch of instances, plays each one with the
//! current actors, and follows the score-function gradient of the episode
//! cost with the critic's estimate as baseline. Vehicles share one
//! whole-episode advantage. Episodes run in parallel but their gradients are
//! summed in batch order, so results do not depend on the thread count.

use std::collections::BTreeMap;
use std::time::Instant;

use cmvrp_autodiff::{checkpoint, AdamConfig, AdamState, Checkpoint, GradMap, Graph, NodeId, ParamGroup};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::default_round_cap;
use crate::error::{CoreError, Result};
use crate::instances::{generate_range, ExperimentConfig, ProblemInstance};
use crate::plan::RoutePlan;
use crate::policy::{play_episode, Actor, ActorNodes, Critic, DecodeMode, Episode, PolicyDims};
use crate::rng::{stream_rng, Domain, TRAINING_STREAM_BASE, VALIDATION_STREAM_BASE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub iterations: usize,
    /// Rounds per episode; 0 selects twice the number of customers.
    pub round_cap: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Cost added per unit of demand left unserved when an episode hits the
    /// round cap.
    pub penalty: f64,
    /// Greedy validation every this many iterations (and after the last);
    /// 0 validates only at the end.
    pub eval_every: usize,
    pub validation_size: usize,
    /// Checkpoint cadence in iterations; 0 writes only the final one.
    pub checkpoint_every: usize,
    pub seed: u64,
    pub embed_dim: usize,
    pub attention_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            iterations: 1000,
            round_cap: 0,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            penalty: 2.0,
            eval_every: 50,
            validation_size: 100,
            checkpoint_every: 0,
            seed: 0,
            embed_dim: 128,
            attention_dim: 128,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(CoreError::Validation(msg.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.penalty >= 0.0 && self.penalty.is_finite()) {
            return bad("penalty must be a finite non-negative number");
        }
        if !(self.actor_lr > 0.0 && self.actor_lr.is_finite() && self.critic_lr > 0.0 && self.critic_lr.is_finite()) {
            return bad("learning rates must be positive and finite");
        }
        if self.validation_size == 0 {
            return bad("validation_size must be at least 1");
        }
        self.dims(1).validate()
    }

    pub fn dims(&self, num_vehicles: usize) -> PolicyDims {
        PolicyDims {
            embed_dim: self.embed_dim,
            attention_dim: self.attention_dim,
            num_vehicles,
        }
    }

    pub fn rounds(&self, experiment: &ExperimentConfig) -> usize {
        if self.round_cap == 0 {
            default_round_cap(experiment.num_customers)
        } else {
            self.round_cap
        }
    }

    fn canonical(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }
}

/// Cost of an episode as seen by training: plan length plus the penalty on
/// undelivered demand.
pub fn episode_return(plan: &RoutePlan, penalty: f64) -> f64 {
    plan.total_length + penalty * plan.residual_demand as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub agent: usize,
    pub state_hash: u64,
    pub mask: Vec<bool>,
    pub action: usize,
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub instance_id: String,
    pub steps: Vec<TrajectoryStep>,
    /// Sum of chosen log-probabilities per vehicle.
    pub agent_log_probs: Vec<f64>,
    pub plan: RoutePlan,
    pub cost: f64,
}

impl Trajectory {
    fn from_episode(episode: &Episode, instance: &ProblemInstance, penalty: f64) -> Self {
        let mut agent_log_probs = vec![0.0; instance.num_vehicles()];
        for s in &episode.steps {
            agent_log_probs[s.agent] += s.log_prob;
        }
        Self {
            instance_id: instance.instance_id.clone(),
            steps: episode
                .steps
                .iter()
                .map(|s| TrajectoryStep {
                    agent: s.agent,
                    state_hash: s.state_hash,
                    mask: s.mask.clone(),
                    action: s.action,
                    log_prob: s.log_prob,
                })
                .collect(),
            agent_log_probs,
            cost: episode_return(&episode.plan, penalty),
            plan: episode.plan.clone(),
        }
    }

    pub fn actions(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.action).collect()
    }

    pub fn log_prob(&self) -> f64 {
        self.steps.iter().map(|s| s.log_prob).sum()
    }

    pub fn steps_per_agent(&self) -> Vec<usize> {
        let mut counts = vec![0; self.agent_log_probs.len()];
        for s in &self.steps {
            counts[s.agent] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutMode {
    Greedy,
    /// Episode `k` samples from stream `first_stream + k` of `seed`.
    Sample { seed: u64, first_stream: u64 },
}

fn check_actors(actors: &[Actor], instance: &ProblemInstance) -> Result<()> {
    if actors.len() != instance.num_vehicles() {
        return Err(CoreError::Contract(format!(
            "{} actors for instance {} with {} vehicles",
            actors.len(),
            instance.instance_id,
            instance.num_vehicles()
        )));
    }
    Ok(())
}

fn bind_all<'p>(g: &mut Graph<'p>, actors: &'p [Actor]) -> Result<Vec<ActorNodes>> {
    actors.iter().map(|a| a.bind(g)).collect()
}

/// Plays every instance to termination. Output order follows `instances`.
pub fn rollout_batch(
    instances: &[ProblemInstance],
    actors: &[Actor],
    round_cap: usize,
    penalty: f64,
    mode: RolloutMode,
) -> Result<Vec<Trajectory>> {
    instances
        .par_iter()
        .enumerate()
        .map(|(k, inst)| {
            check_actors(actors, inst)?;
            let mut g = Graph::new();
            let nodes = bind_all(&mut g, actors)?;
            let episode = match mode {
                RolloutMode::Greedy => play_episode(&mut g, &nodes, inst, round_cap, DecodeMode::Greedy)?,
                RolloutMode::Sample { seed, first_stream } => {
                    let mut rng = stream_rng(seed, Domain::Sampling, first_stream + k as u64);
                    play_episode(&mut g, &nodes, inst, round_cap, DecodeMode::Sample(&mut rng))?
                }
            };
            Ok(Trajectory::from_episode(&episode, inst, penalty))
        })
        .collect()
}

/// Greedy plan of the actors on one instance.
pub fn greedy_plan(actors: &[Actor], instance: &ProblemInstance, round_cap: usize) -> Result<RoutePlan> {
    check_actors(actors, instance)?;
    let mut g = Graph::new();
    let nodes = bind_all(&mut g, actors)?;
    Ok(play_episode(&mut g, &nodes, instance, round_cap, DecodeMode::Greedy)?.plan)
}

/// `Σ_t A / (B · T_j) · log π(a_t)` where `j` is the vehicle acting at step
/// `t` and `T_j` its number of steps in this episode.
fn surrogate(g: &mut Graph<'_>, episode: &Episode, advantage: f64, batch: usize) -> Result<NodeId> {
    let counts = episode.steps_per_agent(episode.steps.iter().map(|s| s.agent + 1).max().unwrap_or(1));
    let mut total: Option<NodeId> = None;
    for s in &episode.steps {
        let coef = advantage / (batch as f64 * counts[s.agent] as f64);
        let term = g.scale(s.log_prob_node, coef)?;
        total = Some(match total {
            Some(t) => g.add(t, term)?,
            None => term,
        });
    }
    total.ok_or_else(|| CoreError::Contract("episode without steps".into()))
}

/// Per-vehicle gradients of the surrogate. One backward pass covers all
/// vehicles: since the decoder stream is shared, a vehicle's parameters
/// also receive credit through the later decisions of the others.
fn episode_gradients(
    g: &mut Graph<'_>,
    nodes: &[ActorNodes],
    episode: &Episode,
    advantage: f64,
    batch: usize,
) -> Result<Vec<GradMap>> {
    let loss = surrogate(g, episode, advantage, batch)?;
    let grads = g.backward(loss)?;
    Ok(nodes
        .iter()
        .map(|n| GradMap::from_arrays(n.params.iter().map(|&p| grads.get(p)).collect()))
        .collect())
}

fn accumulate_into(total: &mut Option<Vec<GradMap>>, part: Vec<GradMap>) {
    match total {
        Some(t) => t.iter_mut().zip(&part).for_each(|(a, b)| a.accumulate(b)),
        None => *total = Some(part),
    }
}

/// Episodes are processed in chunks: parallel inside a chunk, summed in
/// batch order. Bounds memory to a few episodes' worth of gradients.
fn chunk_len() -> usize {
    2 * rayon::current_num_threads().max(1)
}

/// Policy gradients for every vehicle from recorded trajectories, replayed
/// under the current parameters. `critic_values[k]` is the baseline of
/// `instances[k]`.
pub fn actor_gradients(
    instances: &[ProblemInstance],
    trajectories: &[Trajectory],
    critic_values: &[f64],
    actors: &[Actor],
    round_cap: usize,
) -> Result<Vec<GradMap>> {
    if instances.is_empty() {
        return Err(CoreError::Contract("empty batch".into()));
    }
    if trajectories.len() != instances.len() || critic_values.len() != instances.len() {
        return Err(CoreError::Contract(format!(
            "{} instances, {} trajectories, {} critic values",
            instances.len(),
            trajectories.len(),
            critic_values.len()
        )));
    }
    let batch = instances.len();
    let mut total = None;
    let indices: Vec<usize> = (0..batch).collect();
    for chunk in indices.chunks(chunk_len()) {
        let parts = chunk
            .par_iter()
            .map(|&k| {
                let inst = &instances[k];
                check_actors(actors, inst)?;
                let mut g = Graph::new();
                let nodes = bind_all(&mut g, actors)?;
                let actions = trajectories[k].actions();
                let episode = play_episode(&mut g, &nodes, inst, round_cap, DecodeMode::Replay(&actions))?;
                let advantage = trajectories[k].cost - critic_values[k];
                episode_gradients(&mut g, &nodes, &episode, advantage, batch)
            })
            .collect::<Result<Vec<_>>>()?;
        parts.into_iter().for_each(|p| accumulate_into(&mut total, p));
    }
    Ok(total.expect("non-empty batch"))
}

pub fn actor_gradient(
    instances: &[ProblemInstance],
    trajectories: &[Trajectory],
    critic_values: &[f64],
    actors: &[Actor],
    round_cap: usize,
    agent: usize,
) -> Result<GradMap> {
    if agent >= actors.len() {
        return Err(CoreError::Contract(format!("no actor {agent}")));
    }
    Ok(actor_gradients(instances, trajectories, critic_values, actors, round_cap)?.swap_remove(agent))
}

/// Gradient and value of `(1/B) Σ_k (V(s_k) − R_k)²`.
pub fn critic_gradient(instances: &[ProblemInstance], costs: &[f64], critic: &Critic) -> Result<(GradMap, f64)> {
    if instances.is_empty() {
        return Err(CoreError::Contract("empty batch".into()));
    }
    if costs.len() != instances.len() {
        return Err(CoreError::Contract(format!(
            "{} instances but {} costs",
            instances.len(),
            costs.len()
        )));
    }
    let scale = 1.0 / instances.len() as f64;
    let parts = instances
        .par_iter()
        .zip(costs)
        .map(|(inst, &cost)| {
            let mut g = Graph::new();
            let nodes = critic.bind(&mut g)?;
            let v = critic.forward(&mut g, &nodes, inst)?;
            let target = g.constant(cmvrp_autodiff::Array::scalar(cost))?;
            let diff = g.sub(v, target)?;
            let sq = g.mul(diff, diff)?;
            let loss = g.scale(sq, scale)?;
            let grads = g.backward(loss)?;
            let map = GradMap::from_arrays(nodes.params.iter().map(|&p| grads.get(p)).collect());
            Ok((map, g.value(loss).item()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut iter = parts.into_iter();
    let (mut total, mut loss) = iter.next().expect("non-empty batch");
    for (g, l) in iter {
        total.accumulate(&g);
        loss += l;
    }
    Ok((total, loss))
}

pub fn critic_values(instances: &[ProblemInstance], critic: &Critic) -> Result<Vec<f64>> {
    instances.par_iter().map(|i| crate::policy::critic_value(i, critic)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    /// 1-based.
    pub iteration: usize,
    pub mean_cost: f64,
    pub val_cost: Option<f64>,
    pub advantage_mean: f64,
    pub advantage_std: f64,
    pub critic_loss: f64,
    pub actor_grad_norms: Vec<f64>,
    pub critic_grad_norm: f64,
    pub wall_ms: f64,
}

impl IterationStats {
    /// One log line; `wall_ms` is always the last field.
    pub fn log_line(&self) -> String {
        let val = self.val_cost.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        let norms: Vec<String> = self.actor_grad_norms.iter().map(|n| format!("{n:.6e}")).collect();
        format!(
            "iter={} mean_cost={:.6} val_cost={} adv_mean={:.6} adv_std={:.6} critic_loss={:.6} actor_grad_norms={} critic_grad_norm={:.6e} wall_ms={:.1}",
            self.iteration,
            self.mean_cost,
            val,
            self.advantage_mean,
            self.advantage_std,
            self.critic_loss,
            norms.join(","),
            self.critic_grad_norm,
            self.wall_ms
        )
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Actors and critic bound to the experiment they were trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub experiment: ExperimentConfig,
    pub config: TrainConfig,
    pub actors: Vec<Actor>,
    pub critic: Critic,
}

impl TrainedModel {
    /// Loads the networks from a checkpoint, refusing one trained for a
    /// different experiment.
    pub fn from_checkpoint(ckpt: &Checkpoint, experiment: &ExperimentConfig) -> Result<Self> {
        let expected = experiment_hash(experiment);
        if ckpt.config_hash != expected {
            return Err(CoreError::Validation(format!(
                "checkpoint was trained for a different experiment (hash {}, expected {expected})",
                ckpt.config_hash
            )));
        }
        let config: TrainConfig = match ckpt.metadata.get("train_config") {
            Some(text) => serde_json::from_str(text)
                .map_err(|e| CoreError::parse("metadata.train_config", e.to_string()))?,
            None => return Err(CoreError::parse("metadata.train_config", "missing")),
        };
        let dims = config.dims(experiment.num_vehicles);
        let group = |name: &str| {
            ckpt.groups
                .iter()
                .find(|g| g.name == name)
                .ok_or_else(|| CoreError::parse("groups", format!("missing group {name}")))
        };
        let actors = (0..experiment.num_vehicles)
            .map(|j| Actor::from_params(j, dims, group(&Actor::prefix(j))?.params.clone()))
            .collect::<Result<Vec<_>>>()?;
        let critic = Critic::from_params(dims, group("critic")?.params.clone())?;
        Ok(Self {
            experiment: experiment.clone(),
            config,
            actors,
            critic,
        })
    }

    pub fn greedy_plan(&self, instance: &ProblemInstance) -> Result<RoutePlan> {
        greedy_plan(&self.actors, instance, self.config.rounds(&self.experiment))
    }
}

/// Hash binding a checkpoint to the experiment it was trained for.
pub fn experiment_hash(experiment: &ExperimentConfig) -> String {
    checkpoint::config_hash(&serde_json::to_string(experiment).expect("plain data serializes"))
}

/// Mutable training state: networks, optimizers and the iteration counter.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub experiment: ExperimentConfig,
    pub actors: Vec<Actor>,
    pub critic: Critic,
    actor_opts: Vec<AdamState>,
    critic_opt: AdamState,
    pub iteration: usize,
    validation: Vec<ProblemInstance>,
}

impl Trainer {
    pub fn new(config: TrainConfig, experiment: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        experiment.validate()?;
        let dims = config.dims(experiment.num_vehicles);
        let actors = (0..experiment.num_vehicles)
            .map(|j| Actor::init(j, dims, config.seed))
            .collect::<Result<Vec<_>>>()?;
        let critic = Critic::init(dims, config.seed)?;
        Self::assemble(config, experiment, actors, critic, None, 0)
    }

    fn assemble(
        config: TrainConfig,
        experiment: ExperimentConfig,
        actors: Vec<Actor>,
        critic: Critic,
        optimizers: Option<(Vec<AdamState>, AdamState)>,
        iteration: usize,
    ) -> Result<Self> {
        let (actor_opts, critic_opt) = optimizers.unwrap_or_else(|| {
            (
                actors
                    .iter()
                    .map(|a| AdamState::new(&a.params, AdamConfig::with_lr(config.actor_lr)))
                    .collect(),
                AdamState::new(&critic.params, AdamConfig::with_lr(config.critic_lr)),
            )
        });
        let validation = generate_range(&experiment, VALIDATION_STREAM_BASE, config.validation_size)?;
        Ok(Self {
            config,
            experiment,
            actors,
            critic,
            actor_opts,
            critic_opt,
            iteration,
            validation,
        })
    }

    pub fn validation_set(&self) -> &[ProblemInstance] {
        &self.validation
    }

    fn round_cap(&self) -> usize {
        self.config.rounds(&self.experiment)
    }

    /// Training instances of iteration `iteration` (0-based), drawn with the
    /// training seed from streams disjoint from test and validation sets.
    pub fn batch_instances(&self, iteration: usize) -> Result<Vec<ProblemInstance>> {
        let b = self.config.batch_size as u64;
        let source = ExperimentConfig {
            seed: self.config.seed,
            ..self.experiment.clone()
        };
        generate_range(&source, TRAINING_STREAM_BASE + iteration as u64 * b, self.config.batch_size)
    }

    /// Mean greedy episode cost on the validation set.
    pub fn validate(&self) -> Result<f64> {
        let trajectories = rollout_batch(
            &self.validation,
            &self.actors,
            self.round_cap(),
            self.config.penalty,
            RolloutMode::Greedy,
        )?;
        Ok(trajectories.iter().map(|t| t.cost).sum::<f64>() / trajectories.len() as f64)
    }

    /// Samples a batch and returns its trajectories with the summed
    /// per-vehicle gradients, computed on the sampling graphs directly.
    fn sample_with_gradients(
        &self,
        instances: &[ProblemInstance],
        values: &[f64],
    ) -> Result<(Vec<Trajectory>, Vec<GradMap>)> {
        let batch = instances.len();
        let first_stream = self.iteration as u64 * batch as u64;
        let round_cap = self.round_cap();
        let mut trajectories = Vec::with_capacity(batch);
        let mut total = None;
        let indices: Vec<usize> = (0..batch).collect();
        for chunk in indices.chunks(chunk_len()) {
            let parts = chunk
                .par_iter()
                .map(|&k| {
                    let inst = &instances[k];
                    let mut g = Graph::new();
                    let nodes = bind_all(&mut g, &self.actors)?;
                    let mut rng = stream_rng(self.config.seed, Domain::Sampling, first_stream + k as u64);
                    let episode = play_episode(&mut g, &nodes, inst, round_cap, DecodeMode::Sample(&mut rng))?;
                    let trajectory = Trajectory::from_episode(&episode, inst, self.config.penalty);
                    let grads = episode_gradients(&mut g, &nodes, &episode, trajectory.cost - values[k], batch)?;
                    Ok((trajectory, grads))
                })
                .collect::<Result<Vec<_>>>()?;
            for (t, g) in parts {
                trajectories.push(t);
                accumulate_into(&mut total, g);
            }
        }
        Ok((trajectories, total.expect("non-empty batch")))
    }

    /// One A2C iteration: sample, differentiate, apply Adam to every actor
    /// then the critic.
    pub fn step(&mut self) -> Result<IterationStats> {
        let started = Instant::now();
        let instances = self.batch_instances(self.iteration)?;
        let values = critic_values(&instances, &self.critic)?;
        let (trajectories, actor_grads) = self
            .sample_with_gradients(&instances, &values)
            .map_err(|e| self.diverged("actor update", e))?;
        let costs: Vec<f64> = trajectories.iter().map(|t| t.cost).collect();
        let (critic_grad, critic_loss) =
            critic_gradient(&instances, &costs, &self.critic).map_err(|e| self.diverged("critic update", e))?;
        if !actor_grads.iter().all(GradMap::is_finite) || !critic_grad.is_finite() {
            return Err(self.diverged("gradient check", CoreError::Contract("non-finite gradient".into())));
        }
        for ((actor, opt), grad) in self.actors.iter_mut().zip(&mut self.actor_opts).zip(&actor_grads) {
            opt.step(&mut actor.params, grad)?;
        }
        self.critic_opt.step(&mut self.critic.params, &critic_grad)?;
        self.iteration += 1;

        let advantages: Vec<f64> = costs.iter().zip(&values).map(|(c, v)| c - v).collect();
        let (advantage_mean, advantage_std) = mean_std(&advantages);
        let eval_due = (self.config.eval_every > 0 && self.iteration.is_multiple_of(self.config.eval_every))
            || self.iteration == self.config.iterations;
        let val_cost = if eval_due { Some(self.validate()?) } else { None };
        Ok(IterationStats {
            iteration: self.iteration,
            mean_cost: mean_std(&costs).0,
            val_cost,
            advantage_mean,
            advantage_std,
            critic_loss,
            actor_grad_norms: actor_grads.iter().map(GradMap::norm).collect(),
            critic_grad_norm: critic_grad.norm(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }

    fn diverged(&self, stage: &str, cause: CoreError) -> CoreError {
        let norms: Vec<String> = self
            .actors
            .iter()
            .map(|a| format!("{}={:.6e}", Actor::prefix(a.agent), a.params.values().iter().map(|v| v.squared_norm()).sum::<f64>().sqrt()))
            .collect();
        CoreError::Diverged(format!(
            "{stage} failed at iteration {}: {cause}; parameter norms: {}",
            self.iteration + 1,
            norms.join(", ")
        ))
    }

    pub fn model(&self) -> TrainedModel {
        TrainedModel {
            experiment: self.experiment.clone(),
            config: self.config.clone(),
            actors: self.actors.clone(),
            critic: self.critic.clone(),
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut metadata = BTreeMap::new();
        metadata.insert("iteration".to_string(), self.iteration.to_string());
        metadata.insert("train_config".to_string(), self.config.canonical());
        metadata.insert(
            "experiment".to_string(),
            serde_json::to_string(&self.experiment).expect("plain data serializes"),
        );
        let mut groups: Vec<ParamGroup> = self
            .actors
            .iter()
            .zip(&self.actor_opts)
            .map(|(a, opt)| ParamGroup {
                name: Actor::prefix(a.agent),
                params: a.params.clone(),
                optimizer: Some(opt.clone()),
            })
            .collect();
        groups.push(ParamGroup {
            name: "critic".to_string(),
            params: self.critic.params.clone(),
            optimizer: Some(self.critic_opt.clone()),
        });
        Checkpoint {
            config_hash: experiment_hash(&self.experiment),
            metadata,
            groups,
        }
    }

    /// Resumes from a checkpoint written by [`Trainer::checkpoint`].
    pub fn from_checkpoint(ckpt: &Checkpoint, experiment: &ExperimentConfig) -> Result<Self> {
        let model = TrainedModel::from_checkpoint(ckpt, experiment)?;
        let iteration = ckpt
            .metadata
            .get("iteration")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CoreError::parse("metadata.iteration", "missing or not an integer"))?;
        let optimizer = |name: &str| -> Result<AdamState> {
            ckpt.groups
                .iter()
                .find(|g| g.name == name)
                .and_then(|g| g.optimizer.clone())
                .ok_or_else(|| CoreError::parse("groups", format!("missing optimizer state for {name}")))
        };
        let actor_opts = (0..experiment.num_vehicles)
            .map(|j| optimizer(&Actor::prefix(j)))
            .collect::<Result<Vec<_>>>()?;
        let critic_opt = optimizer("critic")?;
        Self::assemble(
            model.config,
            model.experiment,
            model.actors,
            model.critic,
            Some((actor_opts, critic_opt)),
            iteration,
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<IterationStats>,
}

/// Runs `config.iterations` iterations from scratch. `on_iteration` sees
/// the trainer after every update (for logging and checkpoint cadence).
pub fn train(
    config: &TrainConfig,
    experiment: &ExperimentConfig,
    mut on_iteration: impl FnMut(&Trainer, &IterationStats) -> Result<()>,
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(config.clone(), experiment.clone())?;
    let mut log = Vec::with_capacity(config.iterations);
    while trainer.iteration < config.iterations {
        let stats = trainer.step()?;
        on_iteration(&trainer, &stats)?;
        log.push(stats);
    }
    Ok(TrainOutcome {
        checkpoint: trainer.checkpoint(),
        log,
    })
}
