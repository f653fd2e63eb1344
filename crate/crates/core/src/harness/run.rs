use std::time::Instant;

use log::{info, warn};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Task};
use super::stats::median;
use crate::error::{Error, Result};
use crate::learners::{Learner, LearnerConfig};

/// Greedy performance after `episode` training episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub episode: usize,
    pub median_return: f64,
    pub median_steps: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub train_returns: Vec<f64>,
    pub train_steps: Vec<usize>,
    pub evals: Vec<EvalPoint>,
    /// Greedy evaluation of the final model; `None` for diverged runs.
    pub final_eval: Option<EvalPoint>,
    /// Divergence diagnostic; the run stopped at the offending episode.
    pub diverged: Option<String>,
    pub learner: Learner,
    pub wall_seconds: f64,
}

/// Greedy rollouts with reset seeds `seed, seed + 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyEvaluation {
    pub returns: Vec<f64>,
    pub steps: Vec<usize>,
    pub median_return: f64,
    pub median_steps: f64,
}

pub fn evaluate_policy(
    task: &Task,
    mut policy: impl FnMut(&[usize]) -> Result<Vec<usize>>,
    episodes: usize,
    seed: u64,
) -> Result<GreedyEvaluation> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("need at least one evaluation episode".into()));
    }
    let mut env = task.instance()?;
    let mut returns = Vec::with_capacity(episodes);
    let mut steps = Vec::with_capacity(episodes);
    for j in 0..episodes {
        let out = task.rollout(&mut env, seed.wrapping_add(j as u64), &mut policy)?;
        returns.push(out.total_reward);
        steps.push(out.steps);
    }
    let steps_f: Vec<f64> = steps.iter().map(|&s| s as f64).collect();
    Ok(GreedyEvaluation {
        median_return: median(&returns).expect("non-empty"),
        median_steps: median(&steps_f).expect("non-empty"),
        returns,
        steps,
    })
}

pub fn evaluate_greedy(task: &Task, learner: &Learner, episodes: usize, seed: u64) -> Result<GreedyEvaluation> {
    evaluate_policy(task, |s| Ok(learner.best_action(s)?.0), episodes, seed)
}

/// Uniformly random actions; exploration draws come from `seed`.
pub fn evaluate_random(task: &Task, episodes: usize, seed: u64) -> Result<GreedyEvaluation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    evaluate_policy(task, |_| Ok(task.random_action(&mut rng)), episodes, seed)
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::Divergence { .. } | Error::NonFinite(_))
}

/// One seeded training run. Learner factors initialize from
/// `learner.init_seed + seed`.
pub fn run_single(cfg: &ExperimentConfig, task: &Task, run: usize) -> Result<RunResult> {
    let start = Instant::now();
    let seed = cfg.run_seed(run);
    let learner_cfg = LearnerConfig {
        init_seed: cfg.learner.init_seed.wrapping_add(seed),
        ..cfg.learner.clone()
    };
    let mut learner = Learner::new(cfg.algorithm, task.layout.clone(), learner_cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = task.instance()?;
    let mut result = RunResult {
        run,
        seed,
        train_returns: Vec::with_capacity(cfg.episodes),
        train_steps: Vec::with_capacity(cfg.episodes),
        evals: Vec::new(),
        final_eval: None,
        diverged: None,
        learner: learner.clone(),
        wall_seconds: 0.0,
    };

    for episode in 0..cfg.episodes {
        let epsilon = cfg.learner.epsilon.at(episode);
        let reset_seed = rng.next_u64();
        match train_episode(task, &mut env, &mut learner, &mut rng, epsilon, reset_seed) {
            Ok((ret, steps)) => {
                result.train_returns.push(ret);
                result.train_steps.push(steps);
            }
            Err(e) if is_divergence(&e) => {
                warn!("run {run} diverged at episode {episode}: {e}");
                result.diverged = Some(format!("episode {episode}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
        if cfg.eval_every > 0 && (episode + 1) % cfg.eval_every == 0 {
            let ev = evaluate_greedy(task, &learner, cfg.eval_episodes, cfg.eval_seed)?;
            result.evals.push(EvalPoint {
                episode: episode + 1,
                median_return: ev.median_return,
                median_steps: ev.median_steps,
            });
        }
    }

    if result.diverged.is_none() {
        result.final_eval = match result.evals.last() {
            Some(p) if p.episode == cfg.episodes => Some(*p),
            _ => {
                let ev = evaluate_greedy(task, &learner, cfg.eval_episodes, cfg.eval_seed)?;
                Some(EvalPoint {
                    episode: cfg.episodes,
                    median_return: ev.median_return,
                    median_steps: ev.median_steps,
                })
            }
        };
    }
    result.learner = learner;
    result.wall_seconds = start.elapsed().as_secs_f64();
    info!(
        "run {run} (seed {seed}) finished in {:.1}s, final greedy return {:?}",
        result.wall_seconds,
        result.final_eval.map(|p| p.median_return)
    );
    Ok(result)
}

fn train_episode(
    task: &Task,
    env: &mut crate::envs::EnvInstance,
    learner: &mut Learner,
    rng: &mut ChaCha8Rng,
    epsilon: f64,
    reset_seed: u64,
) -> Result<(f64, usize)> {
    let mut state = task.encode_state(env.reset(reset_seed))?;
    let (mut total, mut steps) = (0.0, 0);
    loop {
        let action = learner.epsilon_greedy(&state, epsilon, rng)?;
        let t = env.step(&task.decode_action(&action)?)?;
        let next = task.encode_state(&t.next_state)?;
        learner.update(&state, &action, t.reward, (!t.terminal).then_some(&next[..]))?;
        total += t.reward;
        steps += 1;
        if t.terminal || t.truncated {
            return Ok((total, steps));
        }
        state = next;
    }
}

/// All runs of an experiment, ordered by run index regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let task = cfg.task()?;
    (0..cfg.runs)
        .into_par_iter()
        .map(|run| run_single(cfg, &task, run))
        .collect()
}
