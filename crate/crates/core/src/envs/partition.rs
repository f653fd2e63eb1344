use crate::error::{invalid, Result};

/// Grouping of discretized dimensions into tensor modes.
///
/// Each group holds only state dimensions or only action dimensions and all
/// state groups come first. Within a group indices combine mixed-radix with
/// the first listed member slowest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionPartition {
    groups: Vec<Vec<usize>>,
    dim_sizes: Vec<usize>,
    num_state_dims: usize,
    num_state_groups: usize,
}

impl DimensionPartition {
    /// `dim_sizes` lists state dimensions first, then action dimensions.
    pub fn new(groups: Vec<Vec<usize>>, dim_sizes: &[usize], num_state_dims: usize) -> Result<Self> {
        let n = dim_sizes.len();
        if num_state_dims == 0 || num_state_dims >= n {
            return Err(invalid("need at least one state and one action dimension"));
        }
        if dim_sizes.contains(&0) {
            return Err(invalid("dimension sizes must be positive"));
        }
        let mut seen = vec![false; n];
        let mut num_state_groups = 0;
        let mut action_started = false;
        for g in &groups {
            if g.is_empty() {
                return Err(invalid("empty group in partition"));
            }
            for &d in g {
                if d >= n {
                    return Err(invalid(format!("dimension {d} out of range 0..{n}")));
                }
                if std::mem::replace(&mut seen[d], true) {
                    return Err(invalid(format!("dimension {d} appears twice")));
                }
            }
            let is_state = g[0] < num_state_dims;
            if g.iter().any(|&d| (d < num_state_dims) != is_state) {
                return Err(invalid(format!("group {g:?} mixes state and action dimensions")));
            }
            if is_state {
                if action_started {
                    return Err(invalid("state groups must precede action groups"));
                }
                num_state_groups += 1;
            } else {
                action_started = true;
            }
        }
        if let Some(d) = seen.iter().position(|s| !s) {
            return Err(invalid(format!("dimension {d} is not covered")));
        }
        Ok(Self {
            groups,
            dim_sizes: dim_sizes.to_vec(),
            num_state_dims,
            num_state_groups,
        })
    }

    /// One group per dimension.
    pub fn singletons(dim_sizes: &[usize], num_state_dims: usize) -> Result<Self> {
        Self::new((0..dim_sizes.len()).map(|d| vec![d]).collect(), dim_sizes, num_state_dims)
    }

    /// All state dimensions in one group and all action dimensions in another.
    pub fn state_action(dim_sizes: &[usize], num_state_dims: usize) -> Result<Self> {
        Self::new(
            vec![(0..num_state_dims).collect(), (num_state_dims..dim_sizes.len()).collect()],
            dim_sizes,
            num_state_dims,
        )
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn num_state_groups(&self) -> usize {
        self.num_state_groups
    }

    pub fn num_state_dims(&self) -> usize {
        self.num_state_dims
    }

    pub fn dim_sizes(&self) -> &[usize] {
        &self.dim_sizes
    }

    pub fn grouped_sizes(&self) -> Vec<usize> {
        self.groups
            .iter()
            .map(|g| g.iter().map(|&d| self.dim_sizes[d]).product())
            .collect()
    }

    /// Maps per-dimension indices to per-group indices.
    pub fn apply(&self, index: &[usize]) -> Result<Vec<usize>> {
        if index.len() != self.dim_sizes.len() {
            return Err(invalid(format!(
                "expected {} indices, got {}",
                self.dim_sizes.len(),
                index.len()
            )));
        }
        self.groups
            .iter()
            .map(|g| {
                g.iter().try_fold(0usize, |acc, &d| {
                    if index[d] >= self.dim_sizes[d] {
                        Err(invalid(format!("index {} out of range for dimension {d}", index[d])))
                    } else {
                        Ok(acc * self.dim_sizes[d] + index[d])
                    }
                })
            })
            .collect()
    }

    /// State-group indices from per-dimension state indices.
    pub fn encode_state(&self, state: &[usize]) -> Result<Vec<usize>> {
        if state.len() != self.num_state_dims {
            return Err(invalid(format!("expected {} state indices, got {}", self.num_state_dims, state.len())));
        }
        let mut full = state.to_vec();
        full.resize(self.dim_sizes.len(), 0);
        let mut grouped = self.apply(&full)?;
        grouped.truncate(self.num_state_groups);
        Ok(grouped)
    }

    /// Action-group indices from per-dimension action indices.
    pub fn encode_action(&self, action: &[usize]) -> Result<Vec<usize>> {
        if action.len() != self.dim_sizes.len() - self.num_state_dims {
            return Err(invalid(format!(
                "expected {} action indices, got {}",
                self.dim_sizes.len() - self.num_state_dims,
                action.len()
            )));
        }
        let mut full = vec![0; self.num_state_dims];
        full.extend_from_slice(action);
        Ok(self.apply(&full)?.split_off(self.num_state_groups))
    }

    /// Per-dimension action indices from action-group indices.
    pub fn decode_action(&self, action_groups: &[usize]) -> Result<Vec<usize>> {
        if action_groups.len() != self.groups.len() - self.num_state_groups {
            return Err(invalid(format!(
                "expected {} action group indices, got {}",
                self.groups.len() - self.num_state_groups,
                action_groups.len()
            )));
        }
        let mut grouped = vec![0; self.num_state_groups];
        grouped.extend_from_slice(action_groups);
        Ok(self.invert(&grouped)?.split_off(self.num_state_dims))
    }

    /// Inverse of [`apply`](Self::apply).
    pub fn invert(&self, grouped: &[usize]) -> Result<Vec<usize>> {
        if grouped.len() != self.groups.len() {
            return Err(invalid(format!(
                "expected {} group indices, got {}",
                self.groups.len(),
                grouped.len()
            )));
        }
        let sizes = self.grouped_sizes();
        let mut out = vec![0; self.dim_sizes.len()];
        for ((g, &v), &size) in self.groups.iter().zip(grouped).zip(&sizes) {
            if v >= size {
                return Err(invalid(format!("group index {v} out of range 0..{size}")));
            }
            let mut rest = v;
            for &d in g.iter().rev() {
                out[d] = rest % self.dim_sizes[d];
                rest /= self.dim_sizes[d];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validation() {
        let sizes = [3, 4, 5, 2];
        assert!(DimensionPartition::new(vec![vec![0, 1], vec![2, 3]], &sizes, 2).is_ok());
        assert!(DimensionPartition::new(vec![vec![0, 2], vec![1, 3]], &sizes, 2).is_err());
        assert!(DimensionPartition::new(vec![vec![2, 3], vec![0, 1]], &sizes, 2).is_err());
        assert!(DimensionPartition::new(vec![vec![0], vec![2, 3]], &sizes, 2).is_err());
        assert!(DimensionPartition::new(vec![vec![0, 0, 1], vec![2, 3]], &sizes, 2).is_err());
        assert!(DimensionPartition::new(vec![vec![0, 1], vec![], vec![2, 3]], &sizes, 2).is_err());
        assert!(DimensionPartition::new(vec![vec![0, 1, 2, 3]], &sizes, 4).is_err());
    }

    #[test]
    fn mixed_radix_first_member_slowest() {
        let p = DimensionPartition::new(vec![vec![1, 0], vec![2]], &[3, 4, 5], 2).unwrap();
        assert_eq!(p.grouped_sizes(), vec![12, 5]);
        assert_eq!(p.num_state_groups(), 1);
        assert_eq!(p.apply(&[2, 1, 4]).unwrap(), vec![1 * 3 + 2, 4]);
        assert_eq!(p.invert(&[5, 4]).unwrap(), vec![2, 1, 4]);
        assert!(p.apply(&[3, 0, 0]).is_err());
        assert!(p.invert(&[12, 0]).is_err());
        assert_eq!(p.encode_state(&[2, 1]).unwrap(), vec![5]);
        assert_eq!(p.encode_action(&[4]).unwrap(), vec![4]);
        assert_eq!(p.decode_action(&[3]).unwrap(), vec![3]);
        assert!(p.encode_state(&[2]).is_err());
    }

    #[test]
    fn grouped_actions_roundtrip() {
        let p = DimensionPartition::new(vec![vec![0], vec![2, 1]], &[4, 3, 5], 1).unwrap();
        for a1 in 0..3 {
            for a2 in 0..5 {
                let g = p.encode_action(&[a1, a2]).unwrap();
                assert_eq!(g, vec![a2 * 3 + a1]);
                assert_eq!(p.decode_action(&g).unwrap(), vec![a1, a2]);
            }
        }
    }

    proptest! {
        #[test]
        fn apply_invert_roundtrip(idx in (0..3usize, 0..2usize, 0..4usize, 0..2usize, 0..3usize)) {
            let sizes = [3usize, 2, 4, 2, 3];
            let p = DimensionPartition::new(vec![vec![2, 0], vec![1], vec![4, 3]], &sizes, 3).unwrap();
            let idx = vec![idx.0, idx.1, idx.2, idx.3, idx.4];
            let g = p.apply(&idx).unwrap();
            prop_assert_eq!(p.invert(&g).unwrap(), idx);
        }
    }
}
