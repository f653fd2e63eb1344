use rand::Rng;

use super::TabularMdp;
use crate::error::{invalid, Result};
use crate::linalg::DenseMatrix;

/// Dense random MDP: transition rows are normalized uniform weights with
/// roughly half the next states zeroed, rewards uniform in `[-1, 1]`.
pub fn random_mdp<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    discount: f64,
    rng: &mut R,
) -> Result<TabularMdp> {
    let pairs = num_states * num_actions;
    let mut transition = DenseMatrix::zeros(pairs, num_states);
    for row in 0..pairs {
        let weights = transition.row_mut(row);
        for w in weights.iter_mut() {
            if rng.random::<bool>() {
                *w = rng.random::<f64>();
            }
        }
        if weights.iter().all(|&w| w == 0.0) {
            let pick = rng.random_range(0..num_states);
            weights[pick] = 1.0;
        }
        normalize(weights);
    }
    let reward = (0..pairs).map(|_| rng.random_range(-1.0..=1.0)).collect();
    TabularMdp::new(num_states, num_actions, transition, reward, discount)
}

/// Linear chain of `len` states with actions left (0) and right (1).
///
/// Moves go the intended way with probability `1 - slip` and the opposite way
/// otherwise. Entering the last state pays 1 and that state is absorbing.
pub fn chain_mdp(len: usize, slip: f64, discount: f64) -> Result<TabularMdp> {
    if len < 2 {
        return Err(invalid("chain needs at least two states"));
    }
    if !(0.0..=1.0).contains(&slip) {
        return Err(invalid(format!("slip {slip} outside [0, 1]")));
    }
    let goal = len - 1;
    let mut transition = DenseMatrix::zeros(2 * len, len);
    let mut reward = vec![0.0; 2 * len];
    for s in 0..len {
        for a in 0..2 {
            let row = 2 * s + a;
            if s == goal {
                transition[(row, s)] = 1.0;
                continue;
            }
            let left = s.saturating_sub(1);
            let right = s + 1;
            let (intended, other) = if a == 0 { (left, right) } else { (right, left) };
            for (next, p) in [(intended, 1.0 - slip), (other, slip)] {
                transition[(row, next)] += p;
                if next == goal {
                    reward[row] += p;
                }
            }
        }
    }
    TabularMdp::new(len, 2, transition, reward, discount)
}

fn normalize(weights: &mut [f64]) {
    let sum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= sum;
    }
}
