use super::update::{apply_row_update, td_target};
use super::LearnerConfig;
use crate::error::{invalid, Result};
use crate::linalg::{for_each_index, reconstruct, DenseMatrix, FactorSet};

/// PARAFAC action-value model; the first `num_state_modes` modes index the
/// state, the rest the action.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFactors {
    factors: FactorSet,
    num_state_modes: usize,
}

impl TensorFactors {
    pub fn new(factors: FactorSet, num_state_modes: usize) -> Result<Self> {
        if num_state_modes == 0 || num_state_modes >= factors.order() {
            return Err(invalid(format!(
                "{num_state_modes} state modes leave no state or no action mode in an order-{} model",
                factors.order()
            )));
        }
        Ok(Self {
            factors,
            num_state_modes,
        })
    }

    pub fn factors(&self) -> &FactorSet {
        &self.factors
    }

    pub fn num_state_modes(&self) -> usize {
        self.num_state_modes
    }

    pub fn state_dims(&self) -> Vec<usize> {
        self.factors.dims()[..self.num_state_modes].to_vec()
    }

    pub fn action_dims(&self) -> Vec<usize> {
        self.factors.dims()[self.num_state_modes..].to_vec()
    }

    pub fn rank(&self) -> usize {
        self.factors.rank()
    }

    /// Products over the state modes, one per rank-one component.
    fn state_partials(&self, state: &[usize]) -> Vec<f64> {
        let fs = &self.factors.factors()[..self.num_state_modes];
        (0..self.rank())
            .map(|k| fs.iter().zip(state).fold(1.0, |acc, (f, &i)| acc * f[(i, k)]))
            .collect()
    }

    fn value_from_partials(&self, partials: &[f64], action: &[usize]) -> f64 {
        let fs = &self.factors.factors()[self.num_state_modes..];
        partials
            .iter()
            .enumerate()
            .map(|(k, &p)| fs.iter().zip(action).fold(p, |acc, (f, &i)| acc * f[(i, k)]))
            .sum()
    }

    pub fn value(&self, state: &[usize], action: &[usize]) -> f64 {
        self.value_from_partials(&self.state_partials(state), action)
    }

    /// Exhaustive search over all action multi-indices; ties keep the
    /// lexicographically smallest.
    pub fn best_action(&self, state: &[usize]) -> (Vec<usize>, f64) {
        let partials = self.state_partials(state);
        let mut best = (Vec::new(), f64::NEG_INFINITY);
        for_each_index(&self.action_dims(), |a| {
            let v = self.value_from_partials(&partials, a);
            if best.0.is_empty() || v > best.1 {
                best = (a.to_vec(), v);
            }
        });
        best
    }

    pub fn target(&self, reward: f64, next: Option<&[usize]>, discount: f64) -> f64 {
        td_target(reward, next.map(|n| self.best_action(n).1), discount)
    }

    /// `prod_{i != d} F_i[idx_i, :]`, taken in mode order.
    pub fn mode_gradient(&self, d: usize, index: &[usize]) -> Vec<f64> {
        let fs = self.factors.factors();
        (0..self.rank())
            .map(|k| {
                fs.iter()
                    .zip(index)
                    .enumerate()
                    .filter(|&(i, _)| i != d)
                    .fold(1.0, |acc, (_, (f, &j))| acc * f[(j, k)])
            })
            .collect()
    }

    /// Moves row `F_d[index_d]` along `delta * mode_gradient`; returns `delta`.
    pub fn mode_step(
        &mut self,
        d: usize,
        state: &[usize],
        action: &[usize],
        target: f64,
        alpha: f64,
        cfg: &LearnerConfig,
    ) -> Result<f64> {
        let index: Vec<usize> = state.iter().chain(action).copied().collect();
        let delta = target - self.value(state, action);
        let grad = self.mode_gradient(d, &index);
        apply_row_update(
            self.factors.factor_mut(d).row_mut(index[d]),
            &grad,
            delta,
            alpha,
            cfg.frobenius_weight,
            cfg.rescale_gradient,
            || format!("mode {d} factor row {}", index[d]),
        )?;
        Ok(delta)
    }

    /// Updates modes in order; mode `d` sees modes `< d` already updated.
    /// The target is recomputed per mode unless `cfg.stale_target` is set.
    pub fn td_update(
        &mut self,
        state: &[usize],
        action: &[usize],
        reward: f64,
        next: Option<&[usize]>,
        alpha: f64,
        cfg: &LearnerConfig,
    ) -> Result<()> {
        let stale = self.target(reward, next, cfg.discount);
        for d in 0..self.factors.order() {
            let target = if cfg.stale_target || d == 0 {
                stale
            } else {
                self.target(reward, next, cfg.discount)
            };
            self.mode_step(d, state, action, target, alpha, cfg)?;
        }
        Ok(())
    }

    /// Reconstruction as a `prod(state dims) x prod(action dims)` matrix.
    pub fn to_matrix(&self) -> DenseMatrix {
        let rows = self.state_dims().iter().product();
        let cols = self.action_dims().iter().product();
        DenseMatrix::from_vec(rows, cols, reconstruct(&self.factors).into_vec())
            .expect("state modes precede action modes")
    }
}
