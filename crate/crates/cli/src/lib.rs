//! `cmvrp` command-line driver: test-set generation, training, evaluation
//! against baselines, single-instance solving, SVG rendering and result
//! comparison.

pub mod commands;
pub mod config;
pub mod error;
pub mod render;
pub mod results;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands::{EvalRequest, Method, Solvers, TrainRequest, CHECKPOINT_DIR_ENV};
pub use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "cmvrp", version, about = "Multi-vehicle routing: training, baselines and evaluation")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Seed override (experiment seed for generate, training seed for train,
    /// random-policy seed for eval and solve).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores; 1 runs serially).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory for outputs.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the experiment's test set and a manifest.
    Generate {
        /// Config file or preset name (VRP10, VRP20, VRP50, VRP80).
        #[arg(long)]
        experiment: String,
    },
    /// Train actors and critic; writes checkpoints and train.log.
    Train(TrainArgs),
    /// Evaluate methods over a generated test set; writes results.csv and summaries.
    Eval {
        /// Directory written by `generate`.
        #[arg(long)]
        test_set: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Comma-separated subset of drl,cw,sweep,random,exact.
        #[arg(long, default_value = "drl,cw,sweep")]
        methods: String,
    },
    /// Solve one instance file and write its plan document.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// One of drl, cw, sweep, random, exact.
        #[arg(long)]
        method: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Plan path (default: <out-dir>/<instance id>.<method>.plan.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a plan document as SVG.
    Render {
        #[arg(long)]
        plan: PathBuf,
        /// SVG path (default: <out-dir>/<plan file stem>.svg).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge result CSVs into one markdown table.
    Compare {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Also write the table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Config file or preset name.
    #[arg(long)]
    pub experiment: String,
    /// Training config file; flags below override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Continue from a checkpoint up to --iterations.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub round_cap: Option<usize>,
    #[arg(long)]
    pub actor_lr: Option<f64>,
    #[arg(long)]
    pub critic_lr: Option<f64>,
    #[arg(long)]
    pub penalty: Option<f64>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub validation_size: Option<usize>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub attention_dim: Option<usize>,
    /// Suppress per-iteration progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

impl TrainArgs {
    fn train_config(&self, seed: Option<u64>) -> Result<cmvrp_core::training::TrainConfig> {
        let mut c = config::load_train_config(self.config.as_deref())?;
        macro_rules! overlay {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        overlay!(
            batch_size,
            iterations,
            round_cap,
            actor_lr,
            critic_lr,
            penalty,
            eval_every,
            validation_size,
            checkpoint_every,
            embed_dim,
            attention_dim
        );
        if let Some(s) = seed {
            c.seed = s;
        }
        c.validate()?;
        Ok(c)
    }
}

fn load_model(path: Option<&Path>) -> Result<Option<cmvrp_core::training::TrainedModel>> {
    path.map(|p| {
        let ckpt = commands::read_checkpoint(p)?;
        let experiment = commands::checkpoint_experiment(&ckpt, p)?;
        Ok(cmvrp_core::training::TrainedModel::from_checkpoint(&ckpt, &experiment)?)
    })
    .transpose()
}

/// Runs a parsed command on a pool of `--jobs` threads.
pub fn execute(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", cli.jobs.unwrap_or(0))))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: Cli) -> Result<()> {
    let out_dir = cli.out_dir;
    match cli.command {
        Command::Generate { experiment } => {
            let mut exp = config::load_experiment(&experiment)?;
            if let Some(s) = cli.seed {
                exp.seed = s;
            }
            let manifest = commands::generate(&exp, &out_dir)?;
            println!("wrote {} instances and {}", manifest.instances.len(), out_dir.join(commands::MANIFEST_FILE).display());
        }
        Command::Train(args) => {
            let experiment = config::load_experiment(&args.experiment)?;
            let config = args.train_config(cli.seed)?;
            let checkpoint_dir = std::env::var_os(CHECKPOINT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| out_dir.clone());
            let req = TrainRequest {
                config,
                experiment,
                out_dir,
                checkpoint_dir,
                resume: args.resume,
            };
            let quiet = args.quiet;
            let path = commands::train(&req, |line| {
                if !quiet {
                    eprintln!("{line}");
                }
            })?;
            println!("wrote {}", path.display());
        }
        Command::Eval {
            test_set,
            checkpoint,
            methods,
        } => {
            let req = EvalRequest {
                test_set,
                checkpoint,
                methods: commands::parse_methods(&methods)?,
                random_seed: cli.seed.unwrap_or(0),
                out_dir: out_dir.clone(),
            };
            let rows = commands::eval(&req)?;
            print!("{}", results::summary_markdown(&results::summarize(&rows)));
        }
        Command::Solve {
            instance,
            method,
            checkpoint,
            out,
        } => {
            let method: Method = method.parse()?;
            let solvers = Solvers {
                model: load_model(checkpoint.as_deref())?,
                random_seed: cli.seed.unwrap_or(0),
            };
            let inst = commands::load_instance(&instance)?;
            let out = out.unwrap_or_else(|| out_dir.join(format!("{}.{}.plan.json", inst.instance_id, method.name())));
            let plan = commands::solve(&inst, method, &solvers, &out)?;
            println!(
                "{} length {:.6}{} -> {}",
                plan.instance_id,
                plan.total_length,
                if plan.feasible { "" } else { " (incomplete)" },
                out.display()
            );
        }
        Command::Render { plan, out } => {
            let stem = plan.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plan".into());
            let out = out.unwrap_or_else(|| out_dir.join(format!("{stem}.svg")));
            commands::render(&plan, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Compare { csv, out } => {
            let table = commands::compare(&csv)?;
            if let Some(p) = out {
                error::write(&p, &table)?;
            }
            print!("{table}");
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
