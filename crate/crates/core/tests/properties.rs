use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lowrank_rl::learners::{Layout, Learner, LearnerConfig, ModelKind, StepSize};
use lowrank_rl::linalg::{
    effective_rank, khatri_rao, matricize, reconstruct, singular_values, svd, tsvd, unmatricize, DenseMatrix,
    DenseTensor, FactorSet,
};
use lowrank_rl::mdp::{
    bellman_optimality_residual, policy_evaluation_exact, policy_iteration, random_mdp, PolicyMatrix,
};

fn matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn khatri_rao_columns_are_kronecker(ra in 1usize..5, rb in 1usize..5, k in 1usize..4, seed in any::<u64>()) {
        let a = matrix(ra, k, seed);
        let b = matrix(rb, k, seed ^ 1);
        let kr = khatri_rao(&a, &b).unwrap();
        prop_assert_eq!(kr.shape(), (ra * rb, k));
        for i in 0..ra {
            for j in 0..rb {
                for c in 0..k {
                    prop_assert_eq!(kr[(i * rb + j, c)], a[(i, c)] * b[(j, c)]);
                }
            }
        }
    }

    #[test]
    fn matricize_round_trips(dims in prop::collection::vec(1usize..4, 2..5), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = DenseTensor::from_fn(&dims, |_| rng.random::<f64>());
        for mode in 0..dims.len() {
            let m = matricize(&t, mode).unwrap();
            prop_assert_eq!(m.cols(), dims[mode]);
            prop_assert_eq!(unmatricize(&m, &dims, mode).unwrap(), t.clone());
        }
    }

    #[test]
    fn tsvd_error_matches_tail_energy(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>()) {
        let x = matrix(rows, cols, seed);
        let sigma = singular_values(&x).unwrap();
        prop_assert!(sigma.windows(2).all(|w| w[0] >= w[1]));
        for k in 1..=sigma.len() {
            let approx = tsvd(&x, k).unwrap();
            let residual = DenseMatrix::from_fn(rows, cols, |i, j| x[(i, j)] - approx[(i, j)]);
            let tail: f64 = sigma[k..].iter().map(|s| s * s).sum();
            prop_assert!((residual.frobenius_norm() - tail.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn effective_rank_is_monotone_in_energy(seed in any::<u64>(), lo in 0.05f64..0.5, hi in 0.5f64..1.0) {
        let sigma = singular_values(&matrix(6, 5, seed)).unwrap();
        let a = effective_rank(&sigma, lo).unwrap();
        let b = effective_rank(&sigma, hi).unwrap();
        prop_assert!(1 <= a && a <= b && b <= sigma.len());
    }

    #[test]
    fn policy_iteration_is_optimal(states in 1usize..10, actions in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mdp = random_mdp(states, actions, 0.9, &mut rng).unwrap();
        let (policy, q) = policy_iteration(&mdp).unwrap();
        prop_assert!(bellman_optimality_residual(&mdp, &q) < 1e-9);
        // no deterministic policy beats the optimum in any state
        let uniform = policy_evaluation_exact(&mdp, &PolicyMatrix::uniform(states, actions)).unwrap();
        let (v_opt, v_uni) = (q.state_values(), uniform.state_values());
        for s in 0..states {
            prop_assert!(v_opt[s] >= v_uni[s] - 1e-9);
        }
        prop_assert_eq!(policy.greedy_actions().len(), states);
    }

    #[test]
    fn factor_reconstruction_matches_pointwise_value(dims in prop::collection::vec(1usize..4, 2..4), rank in 1usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = FactorSet::random_uniform(&dims, rank, 1.0, &mut rng).unwrap();
        let t = reconstruct(&f);
        lowrank_rl::linalg::for_each_index(&dims, |idx| {
            assert_relative_eq!(t.get(idx), f.value_at(idx), max_relative = 1e-14);
        });
    }
}

#[test]
fn svd_reconstructs_input() {
    let x = matrix(7, 4, 11);
    let back = svd(&x).unwrap().reconstruct();
    for (a, b) in x.as_slice().iter().zip(back.as_slice()) {
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }
}

#[test]
fn tensor_learner_fits_a_bandit() {
    // one state, reward depends only on the action; gamma = 0
    let layout = Layout::new(vec![1], vec![3]).unwrap();
    let cfg = LearnerConfig {
        discount: 0.0,
        step_size: StepSize::Constant { value: 0.2 },
        rank: 1,
        ..LearnerConfig::default()
    };
    let mut learner = Learner::new(ModelKind::Tensor, layout, cfg).unwrap();
    let rewards = [0.5, 2.0, 1.0];
    for _ in 0..500 {
        for (a, &r) in rewards.iter().enumerate() {
            learner.update(&[0], &[a], r, None).unwrap();
        }
    }
    for (a, &r) in rewards.iter().enumerate() {
        assert_relative_eq!(learner.value(&[0], &[a]).unwrap(), r, epsilon = 1e-6);
    }
    assert_eq!(learner.best_action(&[0]).unwrap().0, vec![1]);
}
