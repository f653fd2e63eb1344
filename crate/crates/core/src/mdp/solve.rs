use nalgebra::{DMatrix, DVector};

use super::{PolicyMatrix, TabularMdp, ValueVector};
use crate::error::{invalid, Error, Result};
use crate::linalg::tsvd;

/// Hard cap on improvement rounds in [`policy_iteration`].
pub const POLICY_ITERATION_CAP: usize = 10_000;

/// Relative slack under which two action values count as tied during policy
/// improvement, so round-off in the linear solve cannot flip a tie.
const IMPROVEMENT_TIE_TOL: f64 = 1e-10;

/// Solves `(I - gamma P Pi) q = r` directly.
pub fn policy_evaluation_exact(mdp: &TabularMdp, policy: &PolicyMatrix) -> Result<ValueVector> {
    policy.check_matches(mdp)?;
    let n = mdp.num_states() * mdp.num_actions();
    let na = mdp.num_actions();
    let gamma = mdp.discount();
    let p = mdp.transition();

    let mut a = DMatrix::<f64>::identity(n, n);
    if gamma != 0.0 {
        for row in 0..n {
            for next in 0..mdp.num_states() {
                let prob = p[(row, next)];
                if prob == 0.0 {
                    continue;
                }
                for next_a in 0..na {
                    let pi = policy.prob(next, next_a);
                    if pi != 0.0 {
                        a[(row, next * na + next_a)] -= gamma * prob * pi;
                    }
                }
            }
        }
    }
    let b = DVector::from_column_slice(mdp.reward());
    let q = a.lu().solve(&b).ok_or(Error::Singular)?;
    ValueVector::new(q.iter().copied().collect(), na)
}

/// One application of the policy Bellman operator: `r + gamma P Pi q`.
pub fn bellman_backup(mdp: &TabularMdp, policy: &PolicyMatrix, q: &[f64]) -> Vec<f64> {
    let na = mdp.num_actions();
    let state_values: Vec<f64> = (0..mdp.num_states())
        .map(|s| (0..na).map(|a| policy.prob(s, a) * q[s * na + a]).sum())
        .collect();
    expected_next(mdp, &state_values)
}

/// `r + gamma P v` for a vector of next-state values.
fn expected_next(mdp: &TabularMdp, state_values: &[f64]) -> Vec<f64> {
    let p = mdp.transition();
    let gamma = mdp.discount();
    mdp.reward()
        .iter()
        .enumerate()
        .map(|(row, &r)| {
            let ev: f64 = p.row(row).iter().zip(state_values).map(|(pr, v)| pr * v).sum();
            r + gamma * ev
        })
        .collect()
}

/// Fixed-point iteration `q_{k+1} = r + gamma P Pi q_k` from `q_0 = 0`.
pub fn policy_evaluation_iterative(
    mdp: &TabularMdp,
    policy: &PolicyMatrix,
    tol: f64,
    max_iters: usize,
) -> Result<ValueVector> {
    policy.check_matches(mdp)?;
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance {tol} must be positive")));
    }
    let mut q = vec![0.0; mdp.num_states() * mdp.num_actions()];
    for _ in 0..max_iters {
        let next = bellman_backup(mdp, policy, &q);
        let change = max_abs_diff(&next, &q);
        q = next;
        if change < tol {
            return ValueVector::new(q, mdp.num_actions());
        }
    }
    Err(Error::NoConvergence {
        what: "iterative policy evaluation",
        iters: max_iters,
    })
}

/// Deterministic greedy policy; ties go to the lowest action index.
pub fn policy_improvement(mdp: &TabularMdp, q: &ValueVector) -> Result<PolicyMatrix> {
    if q.num_actions() != mdp.num_actions() || q.num_states() != mdp.num_states() {
        return Err(invalid("value vector does not match the MDP"));
    }
    let actions: Vec<usize> = (0..mdp.num_states())
        .map(|s| greedy_with_tolerance(q.row(s)))
        .collect();
    PolicyMatrix::deterministic(&actions, mdp.num_actions())
}

fn greedy_with_tolerance(row: &[f64]) -> usize {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slack = IMPROVEMENT_TIE_TOL * (1.0 + max.abs());
    row.iter()
        .position(|&v| v >= max - slack)
        .expect("row is non-empty")
}

/// Howard policy iteration from the all-zeros-action policy.
pub fn policy_iteration(mdp: &TabularMdp) -> Result<(PolicyMatrix, ValueVector)> {
    let mut actions = vec![0usize; mdp.num_states()];
    for _ in 0..POLICY_ITERATION_CAP {
        let policy = PolicyMatrix::deterministic(&actions, mdp.num_actions())?;
        let q = policy_evaluation_exact(mdp, &policy)?;
        let improved = policy_improvement(mdp, &q)?.greedy_actions();
        if improved == actions {
            return Ok((policy, q));
        }
        actions = improved;
    }
    Err(Error::NoConvergence {
        what: "policy iteration",
        iters: POLICY_ITERATION_CAP,
    })
}

/// `max |q - (r + gamma P max_a q)|`.
pub fn bellman_optimality_residual(mdp: &TabularMdp, q: &ValueVector) -> f64 {
    let backed = expected_next(mdp, &q.state_values());
    max_abs_diff(&backed, q.as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsvdMode {
    /// Truncate the exact solution once.
    OneShot,
    /// Truncate after every Bellman backup until the iterates settle.
    Iterated,
}

/// Rank-constrained policy evaluation through truncated SVD of the Q matrix.
pub fn tsvd_policy_evaluation(
    mdp: &TabularMdp,
    policy: &PolicyMatrix,
    rank: usize,
    mode: TsvdMode,
    tol: f64,
    max_iters: usize,
) -> Result<ValueVector> {
    let max_rank = mdp.num_states().min(mdp.num_actions());
    if rank == 0 || rank > max_rank {
        return Err(invalid(format!("rank {rank} outside 1..={max_rank}")));
    }
    match mode {
        TsvdMode::OneShot => {
            let q = policy_evaluation_exact(mdp, policy)?;
            ValueVector::from_matrix(&tsvd(&q.to_matrix(), rank)?)
        }
        TsvdMode::Iterated => {
            policy.check_matches(mdp)?;
            let na = mdp.num_actions();
            let mut q = ValueVector::new(vec![0.0; mdp.num_states() * na], na)?;
            for _ in 0..max_iters {
                let backed = ValueVector::new(bellman_backup(mdp, policy, q.as_slice()), na)?;
                let next = ValueVector::from_matrix(&tsvd(&backed.to_matrix(), rank)?)?;
                let change = next.max_abs_diff(&q);
                q = next;
                if change < tol {
                    return Ok(q);
                }
            }
            Err(Error::NoConvergence {
                what: "iterated truncated-SVD policy evaluation",
                iters: max_iters,
            })
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
