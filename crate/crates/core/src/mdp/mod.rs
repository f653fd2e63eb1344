//! Exact model-based machinery for finite MDPs.
//!
//! State-action pairs are flattened as `s * num_actions + a` everywhere, so a
//! [`ValueVector`] is also the row-major storage of the `C_S x C_A` Q matrix.

mod builders;
mod gridworld;
mod solve;

pub use builders::{chain_mdp, random_mdp};
pub use gridworld::{build_gridworld, Cell, GridAction, GridLayout, GridOptions};
pub use solve::{
    bellman_backup, bellman_optimality_residual, policy_evaluation_exact,
    policy_evaluation_iterative, policy_improvement, policy_iteration, tsvd_policy_evaluation,
    TsvdMode, POLICY_ITERATION_CAP,
};

use crate::error::{invalid, shape, Result};
use crate::linalg::DenseMatrix;

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    /// `(C_S * C_A) x C_S`, row-stochastic.
    transition: DenseMatrix,
    /// Expected reward per state-action pair, averaged over next states.
    reward: Vec<f64>,
    discount: f64,
}

impl TabularMdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transition: DenseMatrix,
        reward: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(invalid("MDP needs at least one state and one action"));
        }
        let pairs = num_states * num_actions;
        if transition.shape() != (pairs, num_states) {
            return Err(shape(format!(
                "transition is {}x{}, expected {pairs}x{num_states}",
                transition.rows(),
                transition.cols()
            )));
        }
        if reward.len() != pairs {
            return Err(shape(format!("reward has {} entries, expected {pairs}", reward.len())));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(invalid(format!("discount {discount} outside [0, 1)")));
        }
        if let Some(i) = reward.iter().position(|r| !r.is_finite()) {
            return Err(invalid(format!("reward entry {i} is not finite")));
        }
        check_stochastic_rows(&transition, "transition")?;
        Ok(Self {
            num_states,
            num_actions,
            transition,
            reward,
            discount,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn transition(&self) -> &DenseMatrix {
        &self.transition
    }

    pub fn reward(&self) -> &[f64] {
        &self.reward
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Self::new(
            self.num_states,
            self.num_actions,
            self.transition.clone(),
            self.reward.clone(),
            discount,
        )
    }

    pub fn pair_index(&self, state: usize, action: usize) -> usize {
        state * self.num_actions + action
    }
}

/// Per-state action distributions (`C_S x C_A`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMatrix {
    probs: DenseMatrix,
}

impl PolicyMatrix {
    pub fn new(probs: DenseMatrix) -> Result<Self> {
        check_stochastic_rows(&probs, "policy")?;
        Ok(Self { probs })
    }

    pub fn deterministic(actions: &[usize], num_actions: usize) -> Result<Self> {
        let mut probs = DenseMatrix::zeros(actions.len(), num_actions);
        for (s, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(invalid(format!("action {a} out of range at state {s}")));
            }
            probs[(s, a)] = 1.0;
        }
        Ok(Self { probs })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        let p = 1.0 / num_actions as f64;
        Self {
            probs: DenseMatrix::from_fn(num_states, num_actions, |_, _| p),
        }
    }

    pub fn num_states(&self) -> usize {
        self.probs.rows()
    }

    pub fn num_actions(&self) -> usize {
        self.probs.cols()
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[(state, action)]
    }

    pub fn probs(&self) -> &DenseMatrix {
        &self.probs
    }

    /// Most likely action per state (the action itself for deterministic policies).
    pub fn greedy_actions(&self) -> Vec<usize> {
        (0..self.num_states())
            .map(|s| argmax_lowest(self.probs.row(s)))
            .collect()
    }

    fn check_matches(&self, mdp: &TabularMdp) -> Result<()> {
        if self.probs.shape() != (mdp.num_states, mdp.num_actions) {
            return Err(shape(format!(
                "policy is {}x{}, MDP has {} states and {} actions",
                self.probs.rows(),
                self.probs.cols(),
                mdp.num_states,
                mdp.num_actions
            )));
        }
        Ok(())
    }
}

/// Vectorized state-action values, indexed `s * C_A + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector {
    q: Vec<f64>,
    num_actions: usize,
}

impl ValueVector {
    pub fn new(q: Vec<f64>, num_actions: usize) -> Result<Self> {
        if num_actions == 0 || q.len() % num_actions != 0 {
            return Err(shape(format!(
                "{} values do not split into rows of {num_actions} actions",
                q.len()
            )));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(crate::Error::NonFinite("value vector".into()));
        }
        Ok(Self { q, num_actions })
    }

    pub fn from_matrix(m: &DenseMatrix) -> Result<Self> {
        Self::new(m.as_slice().to_vec(), m.cols())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_states(&self) -> usize {
        self.q.len() / self.num_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.q[state * self.num_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.q[state * self.num_actions..(state + 1) * self.num_actions]
    }

    /// `unvec`: the `C_S x C_A` matrix view.
    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_vec(self.num_states(), self.num_actions, self.q.clone())
            .expect("length is a multiple of num_actions")
    }

    pub fn state_values(&self) -> Vec<f64> {
        (0..self.num_states())
            .map(|s| self.row(s).iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    pub fn max_abs_diff(&self, other: &ValueVector) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_stochastic_rows(m: &DenseMatrix, what: &str) -> Result<()> {
    for r in 0..m.rows() {
        let row = m.row(r);
        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(invalid(format!("{what} row {r} has a negative or non-finite entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(invalid(format!("{what} row {r} sums to {sum}, not 1")));
        }
    }
    Ok(())
}

/// Index of the largest entry, lowest index on exact ties.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_stochastic() {
        let p = DenseMatrix::from_rows(&[vec![0.5, 0.4], vec![0.0, 1.0]]).unwrap();
        assert!(TabularMdp::new(2, 1, p, vec![0.0, 0.0], 0.5).is_err());
        let p = DenseMatrix::from_rows(&[vec![1.5, -0.5], vec![0.0, 1.0]]).unwrap();
        assert!(TabularMdp::new(2, 1, p, vec![0.0, 0.0], 0.5).is_err());
        let p = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(TabularMdp::new(2, 1, p.clone(), vec![0.0, f64::NAN], 0.5).is_err());
        assert!(TabularMdp::new(2, 1, p.clone(), vec![0.0, 0.0], 1.0).is_err());
        assert!(TabularMdp::new(2, 1, p, vec![0.0, 0.0], 0.5).is_ok());
    }

    #[test]
    fn value_vector_reshape() {
        let v = ValueVector::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3).unwrap();
        let m = v.to_matrix();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m[(1, 0)], 4.0);
        assert_eq!(ValueVector::from_matrix(&m).unwrap(), v);
        assert!(ValueVector::new(vec![1.0; 5], 3).is_err());
    }

    #[test]
    fn argmax_tie_lowest() {
        assert_eq!(argmax_lowest(&[0.0, 5.0, 5.0]), 1);
        assert_eq!(argmax_lowest(&[3.0, 2.0, 1.0]), 0);
    }
}
