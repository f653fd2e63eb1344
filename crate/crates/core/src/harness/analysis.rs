use std::path::Path;

use log::warn;

use super::config::Task;
use super::output::{csv_writer, fmt_f64};
use super::run::evaluate_policy;
use super::stats::ncre;
use crate::error::{invalid, Result};
use crate::learners::argmax_strict;
use crate::linalg::{cumulative_energy, effective_rank, parafac_als, singular_values, tsvd, DenseMatrix, DenseTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct SvdReport {
    pub singular_values: Vec<f64>,
    pub cumulative_energy: Vec<f64>,
    pub rank_90: usize,
    pub rank_99: usize,
}

pub fn analyze_svd(q: &DenseMatrix) -> Result<SvdReport> {
    let sigma = singular_values(q)?;
    Ok(SvdReport {
        cumulative_energy: cumulative_energy(&sigma),
        rank_90: effective_rank(&sigma, 0.9)?,
        rank_99: effective_rank(&sigma, 0.99)?,
        singular_values: sigma,
    })
}

/// `spectrum.csv` (index, singular value, cumulative energy) and
/// `effective_rank.csv` (energy threshold, rank) under `dir`.
pub fn write_svd_report(dir: &Path, report: &SvdReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv_writer(&dir.join("spectrum.csv"))?;
    w.write_record(["index", "singular_value", "cumulative_energy"])?;
    for (i, (s, e)) in report.singular_values.iter().zip(&report.cumulative_energy).enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(Some(*s)), fmt_f64(Some(*e))])?;
    }
    w.flush()?;
    let mut w = csv_writer(&dir.join("effective_rank.csv"))?;
    w.write_record(["energy", "rank"])?;
    w.write_record(["0.9".to_string(), report.rank_90.to_string()])?;
    w.write_record(["0.99".to_string(), report.rank_99.to_string()])?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rank: usize,
    pub nfe: f64,
    pub iterations: usize,
    /// Empty, or `;`-separated fit warnings.
    pub warning: String,
}

/// Best-of-`restarts` ALS fit per rank; restart `j` uses seed `seed + j`.
pub fn parafac_sweep(
    t: &DenseTensor,
    ranks: &[usize],
    restarts: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<Vec<SweepRow>> {
    if ranks.is_empty() {
        return Err(invalid("rank list is empty"));
    }
    if ranks.windows(2).any(|w| w[0] >= w[1]) || ranks[0] == 0 {
        return Err(invalid(format!("ranks {ranks:?} must be positive and strictly ascending")));
    }
    if restarts == 0 {
        return Err(invalid("need at least one restart"));
    }
    let mut rows: Vec<SweepRow> = Vec::with_capacity(ranks.len());
    for &rank in ranks {
        let mut best: Option<(crate::linalg::AlsFit, bool)> = None;
        let mut pinv = false;
        for j in 0..restarts {
            let fit = parafac_als(t, rank, max_iters, tol, seed.wrapping_add(j as u64))?;
            pinv |= fit.used_pseudo_inverse;
            if best.as_ref().is_none_or(|(b, _)| fit.final_nfe() < b.final_nfe()) {
                best = Some((fit, pinv));
            }
        }
        let (fit, _) = best.expect("restarts > 0");
        let mut warnings = Vec::new();
        if pinv {
            warnings.push("pseudo_inverse".to_string());
        }
        if fit.iterations >= max_iters {
            warnings.push("max_iters".to_string());
        }
        if let Some(prev) = rows.last() {
            if fit.final_nfe() > prev.nfe + 1e-6 {
                warn!("NFE rose from {} at rank {} to {} at rank {rank}", prev.nfe, prev.rank, fit.final_nfe());
                warnings.push("non_monotone".to_string());
            }
        }
        rows.push(SweepRow {
            rank,
            nfe: fit.final_nfe(),
            iterations: fit.iterations,
            warning: warnings.join(";"),
        });
    }
    Ok(rows)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["rank", "nfe", "iterations", "warning"])?;
    for r in rows {
        w.write_record([r.rank.to_string(), fmt_f64(Some(r.nfe)), r.iterations.to_string(), r.warning.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Greedy policy of a `C_S x C_A` value matrix over grouped indices.
pub fn matrix_policy<'a>(task: &'a Task, q: &'a DenseMatrix) -> impl FnMut(&[usize]) -> Result<Vec<usize>> + 'a {
    move |s| {
        let row = q.row(task.layout.flat_state(s)?);
        Ok(task.layout.action_index(argmax_strict(row.iter().copied())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsvdRow {
    pub rank: usize,
    pub median_return: f64,
    /// `None` when the reference return is zero.
    pub ncre: Option<f64>,
}

/// Median greedy return of the policy from each rank-`k` truncation of `q`,
/// with NCRE against the untruncated policy. Ranks at or beyond full rank
/// reuse `q` itself.
pub fn tsvd_policy_test(
    task: &Task,
    q: &DenseMatrix,
    ranks: &[usize],
    episodes: usize,
    seed: u64,
) -> Result<(f64, Vec<TsvdRow>)> {
    if ranks.is_empty() {
        return Err(invalid("rank list is empty"));
    }
    let full = q.rows().min(q.cols());
    let reference = evaluate_policy(task, matrix_policy(task, q), episodes, seed)?.median_return;
    let rows = ranks
        .iter()
        .map(|&k| {
            let ret = if k >= full {
                reference
            } else {
                let approx = tsvd(q, k)?;
                evaluate_policy(task, matrix_policy(task, &approx), episodes, seed)?.median_return
            };
            Ok(TsvdRow {
                rank: k,
                median_return: ret,
                ncre: ncre(reference, ret).ok(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((reference, rows))
}

pub fn write_tsvd(path: &Path, reference: f64, rows: &[TsvdRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["rank", "median_return", "reference_return", "ncre"])?;
    for r in rows {
        w.write_record([
            r.rank.to_string(),
            fmt_f64(Some(r.median_return)),
            fmt_f64(Some(reference)),
            fmt_f64(r.ncre),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{reconstruct, FactorSet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_one_spectrum() {
        let q = DenseMatrix::from_fn(5, 4, |i, j| (i + 1) as f64 * (j + 2) as f64);
        let r = analyze_svd(&q).unwrap();
        assert!(r.singular_values[1..].iter().all(|&s| s < 1e-10));
        assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!((r.rank_90, r.rank_99), (1, 1));
    }

    #[test]
    fn sweep_on_synthetic_rank_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = reconstruct(&FactorSet::random_uniform(&[5, 4, 3], 2, 1.0, &mut rng).unwrap());
        let rows = parafac_sweep(&t, &[1, 2, 3], 3, 0, 500, 1e-12).unwrap();
        assert!(rows[1].nfe < 1e-6, "{rows:?}");
        assert!(rows[0].nfe > rows[1].nfe);
        assert!(parafac_sweep(&t, &[], 3, 0, 10, 1e-9).is_err());
        assert!(parafac_sweep(&t, &[2, 1], 3, 0, 10, 1e-9).is_err());
    }
}
