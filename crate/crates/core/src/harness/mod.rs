//! Experiment orchestration: configs, seeded training runs, greedy
//! evaluation, summary statistics, analyses and CSV output.

pub mod analysis;
mod config;
pub mod output;
mod run;
pub mod stats;

pub use analysis::{analyze_svd, parafac_sweep, tsvd_policy_test, SvdReport, SweepRow, TsvdRow};
pub use config::{EpisodeOutcome, ExperimentConfig, GridConfig, Task};
pub use output::{read_model_file, summarize, write_experiment, write_model_file, ExperimentSummary};
pub use run::{
    evaluate_greedy, evaluate_policy, evaluate_random, run_experiment, run_single, EvalPoint, GreedyEvaluation,
    RunResult,
};
pub use stats::{median, ncre, quantile, quartiles, Quartiles};
