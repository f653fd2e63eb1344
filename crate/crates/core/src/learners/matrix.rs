use super::update::{apply_row_update, td_target};
use super::{argmax_strict, LearnerConfig};
use crate::error::{shape, Result};
use crate::linalg::DenseMatrix;

/// `Q = L R` with `L` of shape `C_S x K` and `R` of shape `K x C_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFactors {
    left: DenseMatrix,
    right: DenseMatrix,
}

impl MatrixFactors {
    pub fn new(left: DenseMatrix, right: DenseMatrix) -> Result<Self> {
        if left.cols() != right.rows() || left.cols() == 0 {
            return Err(shape(format!(
                "left is {:?} and right is {:?}; inner ranks must agree and be positive",
                left.shape(),
                right.shape()
            )));
        }
        left.ensure_finite("left factor")?;
        right.ensure_finite("right factor")?;
        Ok(Self { left, right })
    }

    pub fn left(&self) -> &DenseMatrix {
        &self.left
    }

    pub fn right(&self) -> &DenseMatrix {
        &self.right
    }

    pub fn rank(&self) -> usize {
        self.left.cols()
    }

    pub fn num_states(&self) -> usize {
        self.left.rows()
    }

    pub fn num_actions(&self) -> usize {
        self.right.cols()
    }

    pub fn value(&self, s: usize, a: usize) -> f64 {
        let l = self.left.row(s);
        (0..self.rank()).map(|k| l[k] * self.right[(k, a)]).sum()
    }

    pub fn best_action(&self, s: usize) -> (usize, f64) {
        let a = argmax_strict((0..self.num_actions()).map(|a| self.value(s, a)));
        (a, self.value(s, a))
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.num_states(), self.num_actions(), |s, a| self.value(s, a))
    }

    /// Target from the current factors.
    pub fn target(&self, reward: f64, next: Option<usize>, discount: f64) -> f64 {
        td_target(reward, next.map(|n| self.best_action(n).1), discount)
    }

    /// Moves row `L[s]` along `delta * R[:, a]`; returns `delta`.
    pub fn left_step(&mut self, s: usize, a: usize, target: f64, alpha: f64, cfg: &LearnerConfig) -> Result<f64> {
        let delta = target - self.value(s, a);
        let grad = self.right.column(a);
        apply_row_update(
            self.left.row_mut(s),
            &grad,
            delta,
            alpha,
            cfg.frobenius_weight,
            cfg.rescale_gradient,
            || format!("left factor row {s}"),
        )?;
        Ok(delta)
    }

    /// Moves column `R[:, a]` along `delta * L[s]`; returns `delta`.
    pub fn right_step(&mut self, s: usize, a: usize, target: f64, alpha: f64, cfg: &LearnerConfig) -> Result<f64> {
        let delta = target - self.value(s, a);
        let grad = self.left.row(s).to_vec();
        let mut col = self.right.column(a);
        let res = apply_row_update(
            &mut col,
            &grad,
            delta,
            alpha,
            cfg.frobenius_weight,
            cfg.rescale_gradient,
            || format!("right factor column {a}"),
        );
        for (k, v) in col.into_iter().enumerate() {
            self.right[(k, a)] = v;
        }
        res.map(|_| delta)
    }

    /// Left row first, then the right column against the updated left row.
    ///
    /// The second target is recomputed from the updated left factor unless
    /// `cfg.stale_target` is set.
    pub fn td_update(
        &mut self,
        s: usize,
        a: usize,
        reward: f64,
        next: Option<usize>,
        alpha: f64,
        cfg: &LearnerConfig,
    ) -> Result<()> {
        let target = self.target(reward, next, cfg.discount);
        self.left_step(s, a, target, alpha, cfg)?;
        let target = if cfg.stale_target {
            target
        } else {
            self.target(reward, next, cfg.discount)
        };
        self.right_step(s, a, target, alpha, cfg)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(l: f64, r: f64) -> MatrixFactors {
        MatrixFactors::new(DenseMatrix::from_rows(&[vec![l]]).unwrap(), DenseMatrix::from_rows(&[vec![r]]).unwrap())
            .unwrap()
    }

    fn cfg(discount: f64, eta: f64) -> LearnerConfig {
        LearnerConfig {
            discount,
            frobenius_weight: eta,
            ..LearnerConfig::default()
        }
    }

    #[test]
    fn hand_evaluated_two_step_update() {
        let mut f = scalar(2.0, 3.0);
        f.td_update(0, 0, 10.0, None, 0.1, &cfg(0.0, 0.0)).unwrap();
        assert!((f.left()[(0, 0)] - 3.2).abs() < 1e-12);
        assert!((f.right()[(0, 0)] - 3.128).abs() < 1e-12);
    }

    #[test]
    fn zero_td_error_is_a_fixed_point() {
        let mut f = scalar(1.0, 1.0);
        f.td_update(0, 0, 1.0, None, 0.5, &cfg(0.0, 0.0)).unwrap();
        assert_eq!(f, scalar(1.0, 1.0));
    }

    #[test]
    fn regularizer_only_shrinks() {
        let mut f = MatrixFactors::new(
            DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![2.0, -4.0]]).unwrap(),
            DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let before = f.left().row(1).to_vec();
        f.left_step(1, 1, 0.0, 0.1, &cfg(0.0, 0.5)).unwrap();
        for (a, b) in f.left().row(1).iter().zip(&before) {
            assert!((a - b * 0.95).abs() < 1e-15);
        }
    }

    #[test]
    fn touches_one_row_and_one_column() {
        let left = DenseMatrix::from_fn(4, 3, |i, j| 0.1 + (i * 3 + j) as f64 * 0.07);
        let right = DenseMatrix::from_fn(3, 5, |i, j| 0.3 - (i * 5 + j) as f64 * 0.02);
        let mut f = MatrixFactors::new(left.clone(), right.clone()).unwrap();
        f.td_update(2, 4, 1.5, Some(0), 0.2, &cfg(0.9, 0.1)).unwrap();
        let changed_left: Vec<_> = (0..12).filter(|&i| f.left().as_slice()[i] != left.as_slice()[i]).collect();
        let changed_right: Vec<_> = (0..15).filter(|&i| f.right().as_slice()[i] != right.as_slice()[i]).collect();
        assert_eq!(changed_left, vec![6, 7, 8]);
        assert_eq!(changed_right, vec![4, 9, 14]);
    }

    #[test]
    fn explosion_reports_left_factor() {
        let mut f = scalar(1e7, 1e7);
        let err = f.td_update(0, 0, 0.0, None, 1.0, &cfg(0.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("left factor"), "{err}");
    }
}
