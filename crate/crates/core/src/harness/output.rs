use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::RunResult;
use super::stats::{pointwise_quartiles, quartiles, Quartiles};
use crate::error::{Error, Result};
use crate::learners::Learner;

pub const SCHEMA_LINE: &str = "# schema=1";

/// CSV writer whose file starts with the schema comment line.
pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let mut file = File::create(path)?;
    writeln!(file, "{SCHEMA_LINE}")?;
    Ok(csv::Writer::from_writer(file))
}

/// Shortest round-trip formatting; empty for missing values.
pub fn fmt_f64(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

/// Aggregate over the non-diverged runs of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub environment: String,
    pub algorithm: String,
    pub state_bins: String,
    pub action_bins: String,
    pub rank: Option<usize>,
    pub parameters: usize,
    pub runs: usize,
    pub diverged: usize,
    pub final_return: Option<Quartiles>,
}

pub fn summarize(cfg: &ExperimentConfig, results: &[RunResult]) -> Result<ExperimentSummary> {
    let task = cfg.task()?;
    let parameters = crate::learners::count_parameters(
        cfg.algorithm,
        task.layout.state_sizes(),
        task.layout.action_sizes(),
        cfg.learner.rank,
    )?;
    let finals: Vec<f64> = results
        .iter()
        .filter_map(|r| r.final_eval.map(|p| p.median_return))
        .collect();
    let join = |v: &[usize]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join("x");
    Ok(ExperimentSummary {
        environment: cfg.env.name().to_string(),
        algorithm: cfg.algorithm.name().to_string(),
        state_bins: join(&cfg.grid.state),
        action_bins: join(&cfg.grid.action),
        rank: (cfg.algorithm != crate::learners::ModelKind::QTable).then_some(cfg.learner.rank),
        parameters,
        runs: results.len(),
        diverged: results.iter().filter(|r| r.diverged.is_some()).count(),
        final_return: quartiles(&finals),
    })
}

/// Median greedy-return curve over non-diverged runs, as `(episode, median)`.
pub fn eval_curve(results: &[RunResult]) -> Vec<(usize, Quartiles)> {
    let ok: Vec<&RunResult> = results.iter().filter(|r| r.diverged.is_none()).collect();
    let Some(first) = ok.first() else {
        return Vec::new();
    };
    let series: Vec<Vec<f64>> = ok
        .iter()
        .map(|r| r.evals.iter().map(|p| p.median_return).collect())
        .collect();
    let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
    first
        .evals
        .iter()
        .map(|p| p.episode)
        .zip(pointwise_quartiles(&refs))
        .collect()
}

/// Writes `config.json`, `runs.csv`, `evals.csv`, `curve.csv`,
/// `eval_curve.csv`, `summary.csv` and one model file per run. No output
/// depends on wall-clock time or scheduling.
pub fn write_experiment(dir: &Path, cfg: &ExperimentConfig, results: &[RunResult]) -> Result<ExperimentSummary> {
    fs::create_dir_all(dir.join("models"))?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)? + "\n")?;

    let mut w = csv_writer(&dir.join("runs.csv"))?;
    w.write_record([
        "run",
        "seed",
        "episodes_completed",
        "diverged",
        "divergence",
        "final_median_return",
        "final_median_steps",
        "parameters",
    ])?;
    for r in results {
        w.write_record([
            r.run.to_string(),
            r.seed.to_string(),
            r.train_returns.len().to_string(),
            u8::from(r.diverged.is_some()).to_string(),
            r.diverged.clone().unwrap_or_default(),
            fmt_f64(r.final_eval.map(|p| p.median_return)),
            fmt_f64(r.final_eval.map(|p| p.median_steps)),
            r.learner.num_parameters().to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv_writer(&dir.join("evals.csv"))?;
    w.write_record(["run", "episode", "median_return", "median_steps"])?;
    for r in results {
        for p in &r.evals {
            w.write_record([
                r.run.to_string(),
                p.episode.to_string(),
                fmt_f64(Some(p.median_return)),
                fmt_f64(Some(p.median_steps)),
            ])?;
        }
    }
    w.flush()?;

    let ok: Vec<&RunResult> = results.iter().filter(|r| r.diverged.is_none()).collect();
    let train: Vec<&[f64]> = ok.iter().map(|r| r.train_returns.as_slice()).collect();
    let mut w = csv_writer(&dir.join("curve.csv"))?;
    w.write_record(["episode", "runs", "q25_return", "median_return", "q75_return"])?;
    for (i, q) in pointwise_quartiles(&train).iter().enumerate() {
        write_quartile_row(&mut w, i + 1, ok.len(), q)?;
    }
    w.flush()?;

    let mut w = csv_writer(&dir.join("eval_curve.csv"))?;
    w.write_record(["episode", "runs", "q25_return", "median_return", "q75_return"])?;
    for (episode, q) in eval_curve(results) {
        write_quartile_row(&mut w, episode, ok.len(), &q)?;
    }
    w.flush()?;

    let summary = summarize(cfg, results)?;
    write_summaries(&dir.join("summary.csv"), std::slice::from_ref(&summary))?;

    for r in results {
        write_model_file(&dir.join("models").join(format!("run_{:03}.model", r.run)), cfg, &r.learner)?;
    }
    Ok(summary)
}

fn write_quartile_row(w: &mut csv::Writer<File>, episode: usize, runs: usize, q: &Quartiles) -> Result<()> {
    w.write_record([
        episode.to_string(),
        runs.to_string(),
        fmt_f64(Some(q.q25)),
        fmt_f64(Some(q.median)),
        fmt_f64(Some(q.q75)),
    ])?;
    Ok(())
}

/// One row per experiment: environment, algorithm, resolution, rank,
/// parameter count and final greedy-return quartiles.
pub fn write_summaries(path: &Path, rows: &[ExperimentSummary]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "environment",
        "algorithm",
        "state_bins",
        "action_bins",
        "rank",
        "parameters",
        "runs",
        "diverged",
        "q25_return",
        "median_return",
        "q75_return",
    ])?;
    for s in rows {
        w.write_record([
            s.environment.clone(),
            s.algorithm.clone(),
            s.state_bins.clone(),
            s.action_bins.clone(),
            s.rank.map(|k| k.to_string()).unwrap_or_default(),
            s.parameters.to_string(),
            s.runs.to_string(),
            s.diverged.to_string(),
            fmt_f64(s.final_return.map(|q| q.q25)),
            fmt_f64(s.final_return.map(|q| q.median)),
            fmt_f64(s.final_return.map(|q| q.q75)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// First line: the experiment config as compact JSON; the rest: model text.
pub fn write_model_file(path: &Path, cfg: &ExperimentConfig, learner: &Learner) -> Result<()> {
    let cfg = ExperimentConfig {
        learner: learner.config().clone(),
        ..cfg.clone()
    };
    fs::write(path, format!("{}\n{}", serde_json::to_string(&cfg)?, learner.model_text()))?;
    Ok(())
}

pub fn read_model_file(path: &Path) -> Result<(ExperimentConfig, Learner)> {
    let text = fs::read_to_string(path)?;
    let (header, body) = text.split_once('\n').ok_or_else(|| Error::Parse {
        line: 1,
        msg: "model file needs a config line and a model body".into(),
    })?;
    let cfg = ExperimentConfig::from_json(header)?;
    let learner = Learner::from_model_text(body, cfg.learner.clone())?;
    if learner.kind() != cfg.algorithm || learner.layout() != &cfg.task()?.layout {
        return Err(Error::Config("model body does not match its config header".into()));
    }
    Ok((cfg, learner))
}
