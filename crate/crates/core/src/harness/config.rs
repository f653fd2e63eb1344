use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{DimensionPartition, DiscretizationGrid, Dynamics, Env, EnvInstance, Which};
use crate::error::{Error, Result};
use crate::learners::{Layout, LearnerConfig, ModelKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Bins per state dimension.
    pub state: Vec<usize>,
    /// Bins per action dimension.
    pub action: Vec<usize>,
}

fn one() -> usize {
    1
}

fn default_eval_episodes() -> usize {
    10
}

fn default_eval_seed() -> u64 {
    1_000_000
}

/// One training experiment. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub env: Env,
    pub grid: GridConfig,
    /// Dimension groups (state dimensions first, then action dimensions,
    /// numbered in that order). Defaults to one group per dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<Vec<usize>>>,
    pub algorithm: ModelKind,
    #[serde(default)]
    pub learner: LearnerConfig,
    pub episodes: usize,
    /// Overrides the environment's own step cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default = "one")]
    pub runs: usize,
    /// Run `i` uses seed `base_seed + i`.
    #[serde(default)]
    pub base_seed: u64,
    /// Greedy evaluation every this many training episodes; 0 evaluates only
    /// after training.
    #[serde(default)]
    pub eval_every: usize,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    /// Evaluation episode `j` resets with seed `eval_seed + j`.
    #[serde(default = "default_eval_seed")]
    pub eval_seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be at least 1".into()));
        }
        self.learner.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.task().map(|_| ())
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    pub fn task(&self) -> Result<Task> {
        let spec = self.env.spec();
        let grid = DiscretizationGrid::from_spec(&spec, &self.grid.state, &self.grid.action)
            .map_err(|e| Error::Config(e.to_string()))?;
        let sizes = grid.all_sizes();
        let ns = self.grid.state.len();
        let partition = match &self.partition {
            Some(groups) => DimensionPartition::new(groups.clone(), &sizes, ns),
            None => DimensionPartition::singletons(&sizes, ns),
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        let grouped = partition.grouped_sizes();
        let (state, action) = grouped.split_at(partition.num_state_groups());
        let layout = Layout::new(state.to_vec(), action.to_vec())?;
        let max_steps = self.max_steps.unwrap_or(spec.max_steps);
        if max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(Task {
            env: self.env.clone(),
            grid,
            partition,
            layout,
            max_steps,
        })
    }
}

/// Environment plus the discretization that turns it into a finite problem.
#[derive(Debug, Clone)]
pub struct Task {
    pub env: Env,
    pub grid: DiscretizationGrid,
    pub partition: DimensionPartition,
    pub layout: Layout,
    pub max_steps: usize,
}

/// Return and length of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub total_reward: f64,
    pub steps: usize,
}

impl Task {
    pub fn instance(&self) -> Result<EnvInstance> {
        EnvInstance::new(self.env.clone())?.with_max_steps(self.max_steps)
    }

    /// Grouped state multi-index of a continuous state.
    pub fn encode_state(&self, state: &[f64]) -> Result<Vec<usize>> {
        self.partition.encode_state(&self.grid.discretize(Which::State, state)?)
    }

    /// Continuous action at the bucket centers of a grouped action multi-index.
    pub fn decode_action(&self, action: &[usize]) -> Result<Vec<f64>> {
        self.grid.action_from_index(&self.partition.decode_action(action)?)
    }

    pub fn random_action<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.layout.action_sizes().iter().map(|&c| rng.random_range(0..c)).collect()
    }

    /// Rolls out one episode from `seed` with `policy` mapping grouped states
    /// to grouped actions.
    pub fn rollout(
        &self,
        env: &mut EnvInstance,
        seed: u64,
        mut policy: impl FnMut(&[usize]) -> Result<Vec<usize>>,
    ) -> Result<EpisodeOutcome> {
        let mut state = self.encode_state(env.reset(seed))?;
        let mut out = EpisodeOutcome {
            total_reward: 0.0,
            steps: 0,
        };
        loop {
            let action = policy(&state)?;
            let t = env.step(&self.decode_action(&action)?)?;
            out.total_reward += t.reward;
            out.steps += 1;
            if t.terminal || t.truncated {
                return Ok(out);
            }
            state = self.encode_state(&t.next_state)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PENDULUM: &str = r#"{
        "env": {"name": "pendulum"},
        "grid": {"state": [20, 20], "action": [20]},
        "algorithm": "tlr",
        "learner": {"rank": 2},
        "episodes": 5
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(PENDULUM).unwrap();
        assert_eq!(cfg.runs, 1);
        assert_eq!(cfg.eval_episodes, 10);
        let task = cfg.task().unwrap();
        assert_eq!(task.layout.all_sizes(), vec![20, 20, 20]);
        assert_eq!(task.max_steps, 200);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let with = |patch: &str| PENDULUM.replace(r#""episodes": 5"#, patch);
        assert!(ExperimentConfig::from_json(&with(r#""episodes": 0"#)).is_err());
        assert!(ExperimentConfig::from_json(&with(r#""episodes": 5, "runs": 0"#)).is_err());
        assert!(ExperimentConfig::from_json(&with(r#""episodes": 5, "epsiodes": 3"#)).is_err());
        assert!(ExperimentConfig::from_json(&with(r#""episodes": 5, "partition": [[0, 2], [1]]"#)).is_err());
        assert!(ExperimentConfig::from_json(&PENDULUM.replace("[20, 20]", "[20]")).is_err());
        assert!(ExperimentConfig::from_json(&PENDULUM.replace(r#""rank": 2"#, r#""rank": 0"#)).is_err());
    }

    #[test]
    fn grouped_partition_layout() {
        let cfg = ExperimentConfig::from_json(&PENDULUM.replace(
            r#""episodes": 5"#,
            r#""episodes": 5, "partition": [[0, 1], [2]]"#,
        ))
        .unwrap();
        let task = cfg.task().unwrap();
        assert_eq!(task.layout.state_sizes(), &[400]);
        assert_eq!(task.encode_state(&[-std::f64::consts::PI, 8.0]).unwrap(), vec![19]);
        assert!((task.decode_action(&[19]).unwrap()[0] - 1.9).abs() < 1e-12);
    }
}
