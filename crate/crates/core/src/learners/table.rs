use super::update::{check_entries, td_target};
use super::argmax_strict;
use crate::error::Result;
use crate::linalg::DenseMatrix;

/// Tabular action values, one row per flat state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: DenseMatrix,
}

impl QTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self {
            values: DenseMatrix::zeros(num_states, num_actions),
        }
    }

    pub fn from_matrix(values: DenseMatrix) -> Result<Self> {
        values.ensure_finite("q-table")?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn value(&self, s: usize, a: usize) -> f64 {
        self.values[(s, a)]
    }

    pub fn best_action(&self, s: usize) -> (usize, f64) {
        let row = self.values.row(s);
        let a = argmax_strict(row.iter().copied());
        (a, row[a])
    }

    /// `Q[s, a] += alpha * (target - Q[s, a])`; no other entry changes.
    pub fn update(&mut self, s: usize, a: usize, target: f64, alpha: f64) -> Result<()> {
        let q = &mut self.values[(s, a)];
        *q += alpha * (target - *q);
        check_entries(&[*q], || format!("q-table entry ({s}, {a})"))
    }

    /// One Q-learning step; `next` is `None` on terminal transitions.
    pub fn td_update(
        &mut self,
        s: usize,
        a: usize,
        reward: f64,
        next: Option<usize>,
        alpha: f64,
        discount: f64,
    ) -> Result<()> {
        let target = td_target(reward, next.map(|n| self.best_action(n).1), discount);
        self.update(s, a, target, alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry_update() {
        let mut q = QTable::zeros(3, 2);
        q.update(1, 0, 5.0, 0.1).unwrap();
        assert_eq!(q.value(1, 0), 0.5);
        let nonzero = q.values().as_slice().iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nonzero, 1);

        q.update(1, 0, 7.0, 1.0).unwrap();
        assert_eq!(q.value(1, 0), 7.0);
        let before = q.clone();
        q.update(1, 0, 7.0, 0.3).unwrap();
        assert_eq!(q, before);
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        let q = QTable::from_matrix(DenseMatrix::from_rows(&[vec![0.0, 5.0, 5.0]]).unwrap()).unwrap();
        assert_eq!(q.best_action(0), (1, 5.0));
    }

    #[test]
    fn bootstrapped_target() {
        let mut q = QTable::from_matrix(DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![10.0, 2.0]]).unwrap())
            .unwrap();
        q.td_update(0, 1, 1.0, Some(1), 1.0, 0.9).unwrap();
        assert_eq!(q.value(0, 1), 10.0);
        q.td_update(0, 0, 1.0, None, 1.0, 0.9).unwrap();
        assert_eq!(q.value(0, 0), 1.0);
    }
}
