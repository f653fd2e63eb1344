use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use lowrank_rl::harness::analysis::{write_svd_report, write_sweep, write_tsvd};
use lowrank_rl::harness::output::{csv_writer, fmt_f64, write_summaries};
use lowrank_rl::harness::{
    analyze_svd, evaluate_greedy, evaluate_random, parafac_sweep, read_model_file, run_experiment, tsvd_policy_test, write_experiment,
    ExperimentConfig,
};
use lowrank_rl::linalg::DenseTensor;
use lowrank_rl::mdp::{build_gridworld, policy_iteration, GridLayout, GridOptions};
use lowrank_rl::{Error, Result};

#[derive(Parser)]
#[command(name = "lowrank-rl", version, about = "Low-rank value-function learners and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, or file for single-table commands.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the base or evaluation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of runs.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train all runs of an experiment and write CSVs plus model files.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Greedy-evaluate a saved model, or a uniformly random policy on the
    /// task of `--config`.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, required_unless_present = "random", conflicts_with = "random")]
        model: Option<PathBuf>,
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
    },
    /// Singular spectrum and effective ranks of a model's Q matrix or of a
    /// gridworld's optimal Q.
    AnalyzeSvd {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "layout")]
        model: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// PARAFAC reconstruction error of a model's Q tensor across ranks.
    ParafacSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// NCRE of greedy policies from truncated SVDs of a model's Q matrix.
    TsvdPolicyTest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
    },
    /// Solve a gridworld exactly and write Q* and the optimal policy.
    PolicyIteration {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Run a list of experiments and write one summary row per experiment.
    EmitTable {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct GridArgs {
    /// Gridworld layout file; defaults to the 4x4 FrozenLake map.
    #[arg(long)]
    layout: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    slip: f64,
    #[arg(long, default_value_t = 0.9)]
    discount: f64,
}

impl GridArgs {
    fn mdp(&self) -> Result<lowrank_rl::mdp::TabularMdp> {
        let layout = match &self.layout {
            Some(p) => GridLayout::parse(&fs::read_to_string(p)?)?,
            None => GridLayout::frozen_lake_4x4(),
        };
        build_gridworld(
            &layout,
            &GridOptions {
                slip: self.slip,
                discount: self.discount,
                ..GridOptions::default()
            },
        )
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableConfig {
    experiments: Vec<ExperimentConfig>,
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    apply_overrides(&mut cfg, common)?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, common: &Common) -> Result<()> {
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if let Some(runs) = common.runs {
        cfg.runs = runs;
    }
    cfg.validate()
}

fn model_tensor(learner: &lowrank_rl::learners::Learner) -> Result<DenseTensor> {
    DenseTensor::from_vec(&learner.layout().all_sizes(), learner.model().to_matrix().into_vec())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common } => {
            let cfg = load_config(&common)?;
            let results = run_experiment(&cfg)?;
            let s = write_experiment(&common.out, &cfg, &results)?;
            println!(
                "{} {}: median final return {} over {} runs ({} diverged), {} parameters",
                s.environment,
                s.algorithm,
                fmt_f64(s.final_return.map(|q| q.median)),
                s.runs,
                s.diverged,
                s.parameters
            );
        }
        Command::Evaluate {
            common,
            model,
            random,
            episodes,
        } => {
            let ev = if random {
                let cfg = load_config(&common)?;
                evaluate_random(&cfg.task()?, episodes, common.seed.unwrap_or(cfg.eval_seed))?
            } else {
                let path = model.expect("clap requires --model without --random");
                let (cfg, learner) = read_model_file(&path)?;
                evaluate_greedy(&cfg.task()?, &learner, episodes, common.seed.unwrap_or(cfg.eval_seed))?
            };
            ensure_parent(&common.out)?;
            let mut w = csv_writer(&common.out)?;
            w.write_record(["episode", "return", "steps"])?;
            for (j, (r, s)) in ev.returns.iter().zip(&ev.steps).enumerate() {
                w.write_record([j.to_string(), fmt_f64(Some(*r)), s.to_string()])?;
            }
            w.flush()?;
            println!("median return {} median steps {}", ev.median_return, ev.median_steps);
        }
        Command::AnalyzeSvd { common, model, grid } => {
            let q = match model {
                Some(path) => read_model_file(&path)?.1.model().to_matrix(),
                None => policy_iteration(&grid.mdp()?)?.1.to_matrix(),
            };
            let report = analyze_svd(&q)?;
            write_svd_report(&common.out, &report)?;
            println!("effective rank: {} at 0.9, {} at 0.99", report.rank_90, report.rank_99);
        }
        Command::ParafacSweep {
            common,
            model,
            ranks,
            restarts,
            max_iters,
            tol,
        } => {
            let (_, learner) = read_model_file(&model)?;
            let rows = parafac_sweep(&model_tensor(&learner)?, &ranks, restarts, common.seed.unwrap_or(0), max_iters, tol)?;
            ensure_parent(&common.out)?;
            write_sweep(&common.out, &rows)?;
            for r in rows {
                println!("rank {} nfe {:e} {}", r.rank, r.nfe, r.warning);
            }
        }
        Command::TsvdPolicyTest {
            common,
            model,
            ranks,
            episodes,
        } => {
            let (cfg, learner) = read_model_file(&model)?;
            let seed = common.seed.unwrap_or(cfg.eval_seed);
            let (reference, rows) =
                tsvd_policy_test(&cfg.task()?, &learner.model().to_matrix(), &ranks, episodes, seed)?;
            ensure_parent(&common.out)?;
            write_tsvd(&common.out, reference, &rows)?;
            for r in rows {
                println!("rank {} return {} ncre {}", r.rank, r.median_return, fmt_f64(r.ncre));
            }
        }
        Command::PolicyIteration { common, grid } => {
            let mdp = grid.mdp()?;
            let (policy, q) = policy_iteration(&mdp)?;
            fs::create_dir_all(&common.out)?;
            let mut w = csv_writer(&common.out.join("q.csv"))?;
            let mut header = vec!["state".to_string()];
            header.extend((0..mdp.num_actions()).map(|a| format!("q{a}")));
            w.write_record(&header)?;
            for s in 0..mdp.num_states() {
                let mut rec = vec![s.to_string()];
                rec.extend(q.row(s).iter().map(|v| fmt_f64(Some(*v))));
                w.write_record(&rec)?;
            }
            w.flush()?;
            let mut w = csv_writer(&common.out.join("policy.csv"))?;
            w.write_record(["state", "action"])?;
            for (s, a) in policy.greedy_actions().iter().enumerate() {
                w.write_record([s.to_string(), a.to_string()])?;
            }
            w.flush()?;
            println!("solved {} states", mdp.num_states());
        }
        Command::EmitTable { common } => {
            let path = common
                .config
                .as_ref()
                .ok_or_else(|| Error::Config("--config is required".into()))?;
            let table: TableConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
            if table.experiments.is_empty() {
                return Err(Error::Config("no experiments listed".into()));
            }
            let mut rows = Vec::new();
            for (i, mut cfg) in table.experiments.into_iter().enumerate() {
                apply_overrides(&mut cfg, &common)?;
                let results = run_experiment(&cfg)?;
                rows.push(write_experiment(&common.out.join(format!("experiment_{i:02}")), &cfg, &results)?);
            }
            write_summaries(&common.out.join("table.csv"), &rows)?;
            for r in rows {
                println!(
                    "{} {} params {} median {}",
                    r.environment,
                    r.algorithm,
                    r.parameters,
                    fmt_f64(r.final_return.map(|q| q.median))
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
