//! Acceptance suite: one PASS/FAIL line per criterion with the measured
//! values, then a tally. Criterion failures are reported, not raised; the
//! process fails only on internal errors.
//!
//! The full training criterion (5000 iterations, 1000-instance test set)
//! runs when `CMVRP_FULL_ACCEPTANCE=1`, or evaluates an existing checkpoint
//! given in `CMVRP_FULL_CHECKPOINT`; otherwise only its smoke variant runs.

use std::error::Error;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use cmvrp_autodiff::gradcheck::cases;
use cmvrp_autodiff::{Checkpoint, Graph};
use cmvrp_core::baselines::{brute_force_optimal, clarke_wright, random_policy, sweep};
use cmvrp_core::env::{default_round_cap, EnvState};
use cmvrp_core::instances::{generate_instance, generate_test_set, Customer, ExperimentConfig, Point, ProblemInstance};
use cmvrp_core::plan::RoutePlan;
use cmvrp_core::policy::gradcheck::{actor_episode_trial, critic_trial};
use cmvrp_core::policy::{play_episode, DecodeMode};
use cmvrp_core::training::{episode_return, train, TrainConfig, TrainedModel, Trainer};
use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome<T = ()> = Result<T, Box<dyn Error>>;

const GRADIENT_TOLERANCE: f64 = 1e-4;
const GRADIENT_TRIALS: usize = 100;
const DOMINANCE_TOLERANCE: f64 = 1e-9;
const SWEEP_REFERENCE: f64 = 5.510;
const CW_REFERENCE: f64 = 6.884;
const HEURISTIC_BAND: f64 = 0.10;
const SMOKE_IMPROVEMENT: f64 = 0.10;
const FULL_IMPROVEMENT: f64 = 0.25;
const FULL_ITERATIONS: usize = 5000;
const COST_TOLERANCE: f64 = 1e-9;

#[derive(Default)]
struct Tally {
    passed: usize,
    failed: usize,
    skipped: usize,
}

impl Tally {
    fn record(&mut self, id: &str, pass: bool, detail: String) {
        if pass {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        println!("{} [{id}] {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn skip(&mut self, id: &str, detail: &str) {
        self.skipped += 1;
        println!("SKIP [{id}] {detail}");
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn model_from(checkpoint: &Checkpoint, experiment: &ExperimentConfig) -> Outcome<TrainedModel> {
    Ok(TrainedModel::from_checkpoint(checkpoint, experiment)?)
}

fn train_model(config: &TrainConfig, experiment: &ExperimentConfig) -> Outcome<(TrainedModel, Option<f64>)> {
    let outcome = train(config, experiment, |_, _| Ok(()))?;
    let val = outcome.log.last().and_then(|s| s.val_cost);
    Ok((model_from(&outcome.checkpoint, experiment)?, val))
}

fn gradient_correctness(tally: &mut Tally) -> Outcome {
    let started = Instant::now();
    let mut worst: Vec<(String, f64)> = Vec::new();
    for (name, case) in cases::ALL {
        worst.push((name.to_string(), cases::run(name, case, GRADIENT_TRIALS)?));
    }
    let trials = 0..GRADIENT_TRIALS as u64;
    let actor = trials.clone().map(actor_episode_trial).collect::<Result<Vec<_>, _>>()?;
    let critic = trials.map(critic_trial).collect::<Result<Vec<_>, _>>()?;
    worst.push(("actor_episode".into(), actor.into_iter().fold(0.0, f64::max)));
    worst.push(("critic".into(), critic.into_iter().fold(0.0, f64::max)));
    let secs = started.elapsed().as_secs_f64();
    let max = worst.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    let worst_case = worst.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map_or("", |w| w.0.as_str());
    tally.record(
        "1 gradient correctness",
        max < GRADIENT_TOLERANCE && secs < 60.0,
        format!(
            "{} groups x {GRADIENT_TRIALS} trials; max relative error {max:.2e} ({worst_case}) < {GRADIENT_TOLERANCE:.0e}; {secs:.1} s < 60 s",
            worst.len()
        ),
    );
    Ok(())
}

fn oracle_dominance(tally: &mut Tally) -> Outcome {
    let started = Instant::now();
    let experiment = ExperimentConfig {
        name: "oracle".into(),
        num_customers: 5,
        num_vehicles: 2,
        capacities: vec![15, 20],
        test_set_size: 50,
        seed: 2024,
    };
    let config = TrainConfig {
        batch_size: 32,
        iterations: 300,
        actor_lr: 1e-3,
        embed_dim: 32,
        attention_dim: 32,
        eval_every: 0,
        validation_size: 20,
        seed: 1,
        ..TrainConfig::default()
    };
    let (model, _) = train_model(&config, &experiment)?;
    let mut violations = Vec::new();
    let mut drl_truncated = 0;
    let mut gaps = [f64::INFINITY; 3];
    for inst in generate_test_set(&experiment)? {
        let exact = brute_force_optimal(&inst)?.total_length;
        let drl = model.greedy_plan(&inst)?;
        if !drl.feasible {
            drl_truncated += 1;
        }
        let others = [("cw", clarke_wright(&inst)), ("sweep", sweep(&inst)), ("drl", drl)];
        for (k, (name, plan)) in others.iter().enumerate() {
            if !plan.feasible {
                continue;
            }
            gaps[k] = gaps[k].min(plan.total_length - exact);
            if exact > plan.total_length + DOMINANCE_TOLERANCE {
                violations.push(format!("{} {name} {:.6} < exact {exact:.6}", inst.instance_id, plan.total_length));
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    tally.record(
        "2 oracle dominance",
        violations.is_empty() && secs < 120.0,
        format!(
            "50 instances M=5 N=2; exact <= cw/sweep/drl-greedy + {DOMINANCE_TOLERANCE:.0e}: {} violations{}; smallest gaps cw {:.3e} sweep {:.3e} drl {:.3e}; drl truncated {drl_truncated}; {secs:.1} s < 120 s",
            violations.len(),
            if violations.is_empty() { String::new() } else { format!(" ({})", violations.join("; ")) },
            gaps[0],
            gaps[1],
            gaps[2],
        ),
    );
    Ok(())
}

fn heuristic_reproduction(tally: &mut Tally) -> Outcome {
    let started = Instant::now();
    let set = generate_test_set(&ExperimentConfig::vrp10())?;
    let sweep_mean = mean(set.iter().map(|i| sweep(i).total_length));
    let cw_mean = mean(set.iter().map(|i| clarke_wright(i).total_length));
    let secs = started.elapsed().as_secs_f64();
    for (name, value, reference) in [("sweep", sweep_mean, SWEEP_REFERENCE), ("cw", cw_mean, CW_REFERENCE)] {
        let rel = (value - reference) / reference;
        tally.record(
            &format!("3 heuristic reproduction ({name})"),
            rel.abs() <= HEURISTIC_BAND && secs < 60.0,
            format!(
                "VRP10 1000 instances: mean {value:.3} vs reference {reference:.3} ({:+.1}%, band ±{:.0}%); {secs:.1} s < 60 s",
                100.0 * rel,
                100.0 * HEURISTIC_BAND
            ),
        );
    }
    Ok(())
}

/// Mean training return of the random policy on `instances`.
fn random_mean(instances: &[ProblemInstance], seed: u64, round_cap: usize, penalty: f64) -> Outcome<f64> {
    let plans = instances
        .iter()
        .map(|i| random_policy(i, seed, round_cap))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean(plans.iter().map(|p| episode_return(p, penalty))))
}

fn smoke_config() -> TrainConfig {
    TrainConfig {
        batch_size: 64,
        iterations: 500,
        actor_lr: 1e-3,
        critic_lr: 1e-3,
        embed_dim: 64,
        attention_dim: 64,
        eval_every: 0,
        validation_size: 100,
        seed: 0,
        ..TrainConfig::default()
    }
}

fn training_smoke(tally: &mut Tally) -> Outcome<TrainedModel> {
    let started = Instant::now();
    let experiment = ExperimentConfig::vrp10();
    let config = smoke_config();
    let (model, val) = train_model(&config, &experiment)?;
    let val = val.ok_or("final iteration was not validated")?;
    let validation = Trainer::new(config.clone(), experiment.clone())?.validation_set().to_vec();
    let random = random_mean(&validation, config.seed, config.rounds(&experiment), config.penalty)?;
    let secs = started.elapsed().as_secs_f64();
    let improvement = 1.0 - val / random;
    tally.record(
        "4a training efficacy (500-iteration smoke)",
        improvement >= SMOKE_IMPROVEMENT && secs < 600.0,
        format!(
            "VRP10 B=64: greedy validation {val:.3} vs random {random:.3}, {:.1}% below (need >= {:.0}%); {secs:.0} s < 600 s",
            100.0 * improvement,
            100.0 * SMOKE_IMPROVEMENT
        ),
    );
    Ok(model)
}

fn training_full(tally: &mut Tally) -> Outcome {
    let experiment = ExperimentConfig::vrp10();
    let model = if let Ok(path) = std::env::var("CMVRP_FULL_CHECKPOINT") {
        let text = std::fs::read_to_string(&path)?;
        let model = model_from(&Checkpoint::from_json(&text)?, &experiment)?;
        if model.config.iterations > FULL_ITERATIONS || model.config.batch_size != 64 {
            return Err(format!(
                "{path}: trained for {} iterations with batch {}; need <= {FULL_ITERATIONS} with batch 64",
                model.config.iterations, model.config.batch_size
            )
            .into());
        }
        model
    } else if std::env::var("CMVRP_FULL_ACCEPTANCE").is_ok_and(|v| v == "1") {
        let config = TrainConfig {
            iterations: FULL_ITERATIONS,
            ..smoke_config()
        };
        train_model(&config, &experiment)?.0
    } else {
        tally.skip(
            "4 training efficacy (full)",
            "set CMVRP_FULL_ACCEPTANCE=1 or CMVRP_FULL_CHECKPOINT=<checkpoint> to run",
        );
        return Ok(());
    };
    let set = generate_test_set(&experiment)?;
    let penalty = model.config.penalty;
    let plans = set.iter().map(|i| model.greedy_plan(i)).collect::<Result<Vec<_>, _>>()?;
    let drl = mean(plans.iter().map(|p| episode_return(p, penalty)));
    let truncated = plans.iter().filter(|p| !p.feasible).count();
    let random = random_mean(&set, model.config.seed, model.config.rounds(&experiment), penalty)?;
    let cw = mean(set.iter().map(|i| clarke_wright(i).total_length));
    let improvement = 1.0 - drl / random;
    let iterations = model.config.iterations;
    tally.record(
        "4a training efficacy (full)",
        improvement >= FULL_IMPROVEMENT,
        format!(
            "{iterations} iterations, 1000 test instances: greedy {drl:.3} vs random {random:.3}, {:.1}% below (need >= {:.0}%); {truncated} truncated",
            100.0 * improvement,
            100.0 * FULL_IMPROVEMENT
        ),
    );
    tally.record(
        "4b training efficacy (full)",
        drl <= cw,
        format!("{iterations} iterations, 1000 test instances: greedy {drl:.3} vs cw {cw:.3}"),
    );
    Ok(())
}

/// Mask rules for the acting vehicle, derived directly from the state.
fn expected_mask(state: &EnvState<'_>) -> Vec<bool> {
    let j = state.acting_agent;
    let here = state.positions[j];
    (0..state.instance.num_nodes())
        .map(|node| match node {
            0 => here != 0 || state.total_remaining() == 0,
            c => state.loads[j] > 0 && state.remaining(c) > 0 && here != c,
        })
        .collect()
}

fn feasibility_invariants(tally: &mut Tally, model: &TrainedModel) -> Outcome {
    let experiment = &model.experiment;
    let cap = default_round_cap(experiment.num_customers);
    let mut violations: Vec<String> = Vec::new();
    let mut steps = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for stream in 0..10_000u64 {
        let inst = generate_instance(experiment, stream)?;
        let mut state = EnvState::with_round_cap(&inst, cap);
        while !state.is_terminal() {
            let mask = state.feasible_actions();
            if mask.feasible != expected_mask(&state) || mask.count() == 0 {
                violations.push(format!("{}: mask at step {steps}", inst.instance_id));
            }
            let action = mask.feasible_nodes().choose(&mut rng).ok_or("empty mask")?;
            state.step(action)?;
            steps += 1;
            if let Err(e) = state.check_invariants() {
                violations.push(format!("{}: {e}", inst.instance_id));
            }
        }
        state.finalize()?.check(&inst, false)?;
    }
    let random_steps = steps;
    for stream in 0..1000u64 {
        let inst = generate_instance(experiment, 1_000_000 + stream)?;
        let mut g = Graph::new();
        let nodes = model.actors.iter().map(|a| a.bind(&mut g)).collect::<Result<Vec<_>, _>>()?;
        let episode = play_episode(&mut g, &nodes, &inst, cap, DecodeMode::Greedy)?;
        let mut state = EnvState::with_round_cap(&inst, cap);
        for step in &episode.steps {
            if step.mask != expected_mask(&state) || !step.mask[step.action] {
                violations.push(format!("{}: greedy mask at step {steps}", inst.instance_id));
            }
            state.step(step.action)?;
            steps += 1;
            if let Err(e) = state.check_invariants() {
                violations.push(format!("{}: {e}", inst.instance_id));
            }
        }
        if state.finalize()? != episode.plan {
            violations.push(format!("{}: greedy plan differs from replay", inst.instance_id));
        }
        episode.plan.check(&inst, false)?;
    }
    tally.record(
        "5 feasibility invariants",
        violations.is_empty(),
        format!(
            "10000 random rollouts ({random_steps} steps) + 1000 greedy rollouts ({} steps): {} violations of mask, demand conservation, load bounds or cost agreement to {COST_TOLERANCE:.0e}{}",
            steps - random_steps,
            violations.len(),
            violations.first().map_or(String::new(), |v| format!(" (first: {v})"))
        ),
    );
    Ok(())
}

fn run_cli(args: &[&str]) -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_cmvrp")).args(args).output()?;
    if !out.status.success() {
        return Err(format!("cmvrp {args:?}: {}", String::from_utf8_lossy(&out.stderr)).into());
    }
    Ok(())
}

fn read(path: &Path) -> Outcome<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn strip_log_wall_time(log: &str) -> String {
    log.lines().map(|l| l.split(" wall_ms=").next().unwrap_or(l)).collect::<Vec<_>>().join("\n")
}

fn strip_csv_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism(tally: &mut Tally) -> Outcome {
    let dir = tempfile::tempdir()?;
    let s = |p: &Path| p.to_str().expect("utf-8 temp path").to_string();
    let exp = dir.path().join("det.toml");
    std::fs::write(
        &exp,
        "name = \"det\"\nnum_customers = 10\nnum_vehicles = 3\ncapacities = [10, 15, 20]\ntest_set_size = 100\nseed = 8\n",
    )?;
    let train_flags = [
        "--iterations", "20", "--batch-size", "8", "--embed-dim", "16", "--attention-dim", "16",
        "--validation-size", "10", "--eval-every", "10", "--checkpoint-every", "10", "--seed", "3", "--quiet",
    ];
    let runs = [dir.path().join("train_a"), dir.path().join("train_b")];
    for out in &runs {
        let mut args = vec!["train".to_string(), "--experiment".into(), s(&exp), "--jobs".into(), "1".into()];
        args.extend(["--out-dir".to_string(), s(out)]);
        args.extend(train_flags.iter().map(|f| f.to_string()));
        run_cli(&args.iter().map(String::as_str).collect::<Vec<_>>())?;
    }
    let mut mismatches = Vec::new();
    for file in ["checkpoint_10.json", "checkpoint.json"] {
        if std::fs::read(runs[0].join(file))? != std::fs::read(runs[1].join(file))? {
            mismatches.push(file.to_string());
        }
    }
    let (log_a, log_b) = (read(&runs[0].join("train.log"))?, read(&runs[1].join("train.log"))?);
    if strip_log_wall_time(&log_a) != strip_log_wall_time(&log_b) {
        mismatches.push("train.log".into());
    }

    let set = dir.path().join("set");
    run_cli(&["generate", "--experiment", &s(&exp), "--out-dir", &s(&set)])?;
    let ckpt = runs[0].join("checkpoint.json");
    let mut csvs = Vec::new();
    for (name, jobs) in [("eval_serial_a", "1"), ("eval_serial_b", "1"), ("eval_parallel", "4")] {
        let out = dir.path().join(name);
        run_cli(&[
            "eval", "--test-set", &s(&set), "--checkpoint", &s(&ckpt), "--methods", "drl,cw,sweep,random", "--jobs",
            jobs, "--out-dir", &s(&out),
        ])?;
        csvs.push(strip_csv_wall_time(&read(&out.join("results.csv"))?));
    }
    if csvs[0] != csvs[1] {
        mismatches.push("serial results.csv".into());
    }
    if csvs[0] != csvs[2] {
        mismatches.push("parallel results.csv".into());
    }
    let rows = csvs[0].lines().count() - 1;
    tally.record(
        "6 determinism",
        mismatches.is_empty(),
        format!(
            "serial train x2 (2 checkpoints + log), eval serial x2 and --jobs 4 ({rows} rows), wall-time fields excluded: {}",
            if mismatches.is_empty() { "identical".to_string() } else { format!("differ in {}", mismatches.join(", ")) }
        ),
    );
    Ok(())
}

fn spot_instance(id: &str, customers: &[(f64, f64, u32)], capacities: &[u32]) -> Outcome<ProblemInstance> {
    let customers = customers
        .iter()
        .map(|&(x, y, demand)| Customer {
            coord: Point::new(x, y),
            demand,
        })
        .collect();
    Ok(ProblemInstance::new(id, Point::new(0.0, 0.0), customers, capacities)?)
}

fn optimal_spot_check(tally: &mut Tally, fleet_model: &TrainedModel) -> Outcome {
    // A single-vehicle policy for the two-customer case.
    let solo = ExperimentConfig {
        name: "solo".into(),
        num_customers: 2,
        num_vehicles: 1,
        capacities: vec![10],
        test_set_size: 1,
        seed: 6,
    };
    let solo_config = TrainConfig {
        batch_size: 32,
        iterations: 300,
        actor_lr: 1e-3,
        embed_dim: 16,
        attention_dim: 16,
        eval_every: 0,
        validation_size: 10,
        seed: 2,
        ..TrainConfig::default()
    };
    let (solo_model, _) = train_model(&solo_config, &solo)?;

    let (x, y) = (0.3, 0.4);
    let single = spot_instance("single", &[(x, y, 7)], &[10, 15, 20])?;
    let forced = spot_instance("forced", &[(1.0, 0.0, 9), (0.0, 1.0, 9)], &[10])?;
    let cases: [(&ProblemInstance, f64, &TrainedModel); 2] =
        [(&single, 2.0 * (x * x + y * y).sqrt(), fleet_model), (&forced, 4.0, &solo_model)];
    for (inst, expected, model) in cases {
        let cap = default_round_cap(inst.num_customers());
        let plans: Vec<(&str, RoutePlan)> = vec![
            ("drl", model.greedy_plan(inst)?),
            ("cw", clarke_wright(inst)),
            ("sweep", sweep(inst)),
            ("random", random_policy(inst, 0, cap)?),
            ("exact", brute_force_optimal(inst)?),
        ];
        let off: Vec<String> = plans
            .iter()
            .filter(|(_, p)| !p.feasible || (p.total_length - expected).abs() > COST_TOLERANCE)
            .map(|(m, p)| format!("{m} {:.6}", p.total_length))
            .collect();
        let random_hits = (0..100u64)
            .map(|seed| random_policy(inst, seed, cap))
            .collect::<Result<Vec<_>, _>>()?
            .iter()
            .filter(|p| (p.total_length - expected).abs() <= COST_TOLERANCE)
            .count();
        tally.record(
            &format!("7 optimal spot check ({})", inst.instance_id),
            off.is_empty(),
            format!(
                "expected {expected:.6} within {COST_TOLERANCE:.0e} for drl, cw, sweep, random (seed 0), exact: {}; random hits it for {random_hits}/100 seeds",
                if off.is_empty() { "all match".to_string() } else { format!("off: {}", off.join(", ")) }
            ),
        );
    }
    Ok(())
}

fn main() -> Outcome {
    let mut tally = Tally::default();
    gradient_correctness(&mut tally)?;
    oracle_dominance(&mut tally)?;
    heuristic_reproduction(&mut tally)?;
    let smoke_model = training_smoke(&mut tally)?;
    training_full(&mut tally)?;
    feasibility_invariants(&mut tally, &smoke_model)?;
    determinism(&mut tally)?;
    optimal_spot_check(&mut tally, &smoke_model)?;
    println!(
        "acceptance: {} passed, {} failed, {} skipped",
        tally.passed, tally.failed, tally.skipped
    );
    Ok(())
}
