use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use cmvrp_autodiff::Checkpoint;
use cmvrp_core::baselines::{brute_force_optimal, clarke_wright, random_policy, sweep};
use cmvrp_core::env::default_round_cap;
use cmvrp_core::instances::{generate_test_set, read_instance, write_instance, ExperimentConfig, ProblemInstance};
use cmvrp_core::plan::{read_plan, write_plan, RoutePlan};
use cmvrp_core::training::{experiment_hash, TrainConfig, TrainedModel, Trainer};
use cmvrp_core::CoreError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::experiment_toml;
use crate::error::{read, write, CliError, Result};
use crate::render::render_svg;
use crate::results::{read_csv, summarize, summary_json, summary_markdown, write_csv, ResultRow};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const INSTANCE_DIR: &str = "instances";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRAIN_LOG_FILE: &str = "train.log";
pub const RESULTS_FILE: &str = "results.csv";
/// Overrides the directory checkpoints are written to.
pub const CHECKPOINT_DIR_ENV: &str = "CMVRP_CHECKPOINT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Drl,
    Cw,
    Sweep,
    Random,
    Exact,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Drl => "drl",
            Method::Cw => "cw",
            Method::Sweep => "sweep",
            Method::Random => "random",
            Method::Exact => "exact",
        }
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "drl" => Ok(Method::Drl),
            "cw" => Ok(Method::Cw),
            "sweep" => Ok(Method::Sweep),
            "random" => Ok(Method::Random),
            "exact" => Ok(Method::Exact),
            other => Err(CliError::Usage(format!(
                "unknown method `{other}` (expected drl, cw, sweep, random or exact)"
            ))),
        }
    }
}

/// Comma-separated method list; empty lists and repeats are usage errors.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let methods = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Method::from_str)
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(CliError::Usage("the methods list is empty".into()));
    }
    for (k, m) in methods.iter().enumerate() {
        if methods[..k].contains(m) {
            return Err(CliError::Usage(format!("method `{}` listed twice", m.name())));
        }
    }
    Ok(methods)
}

/// Everything a plan-producing method needs besides the instance.
pub struct Solvers {
    pub model: Option<TrainedModel>,
    pub random_seed: u64,
}

impl Solvers {
    pub fn solve(&self, method: Method, instance: &ProblemInstance) -> Result<RoutePlan> {
        Ok(match method {
            Method::Cw => clarke_wright(instance),
            Method::Sweep => sweep(instance),
            Method::Random => random_policy(instance, self.random_seed, default_round_cap(instance.num_customers()))?,
            Method::Exact => brute_force_optimal(instance)?,
            Method::Drl => {
                let model = self
                    .model
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("method drl needs --checkpoint".into()))?;
                if instance.capacities() != model.experiment.capacities {
                    return Err(CoreError::Validation(format!(
                        "instance {} has fleet {:?} but the checkpoint was trained for {:?}",
                        instance.instance_id,
                        instance.capacities(),
                        model.experiment.capacities
                    ))
                    .into());
                }
                model.greedy_plan(instance)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentConfig,
    pub experiment_hash: String,
    /// Instance files relative to the manifest, in test-set order.
    pub instances: Vec<String>,
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_json(&read(path)?).map_err(|e| CliError::format(path, e))
}

/// The experiment a checkpoint records about itself.
pub fn checkpoint_experiment(ckpt: &Checkpoint, path: &Path) -> Result<ExperimentConfig> {
    let raw = ckpt
        .metadata
        .get("experiment")
        .ok_or_else(|| CliError::format(path, "checkpoint metadata lacks the experiment"))?;
    serde_json::from_str(raw).map_err(|e| CliError::format(path, e))
}

pub fn generate(experiment: &ExperimentConfig, out_dir: &Path) -> Result<Manifest> {
    let set = generate_test_set(experiment)?;
    let mut instances = Vec::with_capacity(set.len());
    for inst in &set {
        let rel = format!("{INSTANCE_DIR}/{}.json", inst.instance_id);
        write(&out_dir.join(&rel), &write_instance(inst))?;
        instances.push(rel);
    }
    let manifest = Manifest {
        experiment: experiment.clone(),
        experiment_hash: experiment_hash(experiment),
        instances,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("plain data serializes");
    text.push('\n');
    write(&out_dir.join(MANIFEST_FILE), &text)?;
    Ok(manifest)
}

/// Loads a generated test set: the manifest plus every instance it lists.
pub fn load_test_set(dir: &Path) -> Result<(Manifest, Vec<ProblemInstance>)> {
    let path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_str(&read(&path)?).map_err(|e| CliError::format(&path, e))?;
    manifest.experiment.validate()?;
    if manifest.experiment_hash != experiment_hash(&manifest.experiment) {
        return Err(CliError::format(&path, "experiment hash does not match the experiment"));
    }
    let instances = manifest
        .instances
        .iter()
        .map(|rel| {
            load_instance(&dir.join(rel))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, instances))
}

pub struct TrainRequest {
    pub config: TrainConfig,
    pub experiment: ExperimentConfig,
    pub out_dir: PathBuf,
    pub checkpoint_dir: PathBuf,
    pub resume: Option<PathBuf>,
}

/// Trains (or resumes), appending one line per iteration to the log and
/// writing periodic plus final checkpoints. Returns the final checkpoint path.
pub fn train(req: &TrainRequest, mut progress: impl FnMut(&str)) -> Result<PathBuf> {
    req.config.validate()?;
    let mut trainer = match &req.resume {
        Some(p) => {
            // Resuming may only extend the run; architecture, rates and
            // seeds come from the checkpoint.
            let mut t = Trainer::from_checkpoint(&read_checkpoint(p)?, &req.experiment)?;
            t.config.iterations = req.config.iterations;
            t
        }
        None => Trainer::new(req.config.clone(), req.experiment.clone())?,
    };
    let log_path = req.out_dir.join(TRAIN_LOG_FILE);
    std::fs::create_dir_all(&req.out_dir).map_err(|e| CliError::io(&req.out_dir, e))?;
    let mut log = OpenOptions::new()
        .create(true)
        .write(true)
        .append(req.resume.is_some())
        .truncate(req.resume.is_none())
        .open(&log_path)
        .map_err(|e| CliError::io(&log_path, e))?;
    write(&req.out_dir.join("experiment.toml"), &experiment_toml(&req.experiment))?;
    write(
        &req.out_dir.join("train_config.toml"),
        &toml::to_string(&trainer.config).expect("plain data serializes"),
    )?;
    let every = trainer.config.checkpoint_every;
    while trainer.iteration < trainer.config.iterations {
        let stats = trainer.step()?;
        let line = stats.log_line();
        writeln!(log, "{line}").map_err(|e| CliError::io(&log_path, e))?;
        progress(&line);
        if every > 0 && trainer.iteration % every == 0 && trainer.iteration < trainer.config.iterations {
            let p = req.checkpoint_dir.join(format!("checkpoint_{}.json", trainer.iteration));
            write(&p, &trainer.checkpoint().to_json())?;
        }
    }
    let final_path = req.checkpoint_dir.join(CHECKPOINT_FILE);
    write(&final_path, &trainer.checkpoint().to_json())?;
    Ok(final_path)
}

pub struct EvalRequest {
    pub test_set: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub random_seed: u64,
    pub out_dir: PathBuf,
}

/// Runs every method over the test set. Instances are solved in parallel
/// on the current pool; rows keep method-then-instance order.
pub fn eval(req: &EvalRequest) -> Result<Vec<ResultRow>> {
    let (manifest, instances) = load_test_set(&req.test_set)?;
    let model = match (&req.checkpoint, req.methods.contains(&Method::Drl)) {
        (Some(p), true) => Some(TrainedModel::from_checkpoint(&read_checkpoint(p)?, &manifest.experiment)?),
        (None, true) => return Err(CliError::Usage("method drl needs --checkpoint".into())),
        (_, false) => None,
    };
    let solvers = Solvers {
        model,
        random_seed: req.random_seed,
    };
    let mut rows = Vec::with_capacity(req.methods.len() * instances.len());
    for &method in &req.methods {
        let chunk = instances
            .par_iter()
            .map(|inst| {
                let start = Instant::now();
                let plan = solvers.solve(method, inst)?;
                let wall_ms = start.elapsed().as_secs_f64() * 1000.0;
                Ok(ResultRow {
                    experiment: manifest.experiment.name.clone(),
                    method: method.name().to_string(),
                    instance_id: inst.instance_id.clone(),
                    length: plan.total_length,
                    feasible: plan.feasible,
                    wall_ms,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(chunk);
    }
    let summaries = summarize(&rows);
    write(&req.out_dir.join(RESULTS_FILE), &write_csv(&rows))?;
    write(&req.out_dir.join("summary.md"), &summary_markdown(&summaries))?;
    write(&req.out_dir.join("summary.json"), &summary_json(&summaries))?;
    Ok(rows)
}

pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    read_instance(&read(path)?).map_err(|e| CliError::format(path, e))
}

pub fn solve(instance: &ProblemInstance, method: Method, solvers: &Solvers, out: &Path) -> Result<RoutePlan> {
    let plan = solvers.solve(method, instance)?;
    write(out, &write_plan(&plan, instance))?;
    Ok(plan)
}

pub fn render(plan_path: &Path, out: &Path) -> Result<()> {
    let (plan, instance) = read_plan(&read(plan_path)?).map_err(|e| CliError::format(plan_path, e))?;
    write(out, &render_svg(&plan, &instance))
}

/// Merges result CSVs into one markdown table. A given (experiment, method)
/// may come from only one file.
pub fn compare(paths: &[PathBuf]) -> Result<String> {
    if paths.is_empty() {
        return Err(CliError::Usage("compare needs at least one CSV".into()));
    }
    let mut rows: Vec<ResultRow> = Vec::new();
    // (experiment, method) -> index of the file that supplied it.
    let mut owner: Vec<((String, String), usize)> = Vec::new();
    for (k, p) in paths.iter().enumerate() {
        let these = read_csv(&read(p)?, p)?;
        for r in &these {
            let key = (r.experiment.clone(), r.method.clone());
            match owner.iter().find(|(seen, _)| *seen == key) {
                Some(&(_, first)) if first != k => {
                    return Err(CliError::format(
                        p,
                        format!(
                            "experiment `{}` method `{}` already appears in {}",
                            key.0,
                            key.1,
                            paths[first].display()
                        ),
                    ));
                }
                Some(_) => {}
                None => owner.push((key, k)),
            }
        }
        rows.extend(these);
    }
    Ok(summary_markdown(&summarize(&rows)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_lists() {
        assert_eq!(parse_methods("cw, sweep").unwrap(), vec![Method::Cw, Method::Sweep]);
        assert!(matches!(parse_methods(""), Err(CliError::Usage(_))));
        assert!(matches!(parse_methods(" , "), Err(CliError::Usage(_))));
        assert!(matches!(parse_methods("cw,cw"), Err(CliError::Usage(_))));
        assert!(matches!(parse_methods("lkh"), Err(CliError::Usage(_))));
    }
}
