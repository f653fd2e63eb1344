//! Low-rank matrix and tensor (PARAFAC) approximations of state-action value
//! functions, learned online with stochastic block-coordinate TD updates, plus
//! exact tabular MDP baselines for verification.

pub mod error;
pub mod envs;
pub mod harness;
pub mod learners;
pub mod linalg;
pub mod mdp;

pub use error::{Error, Result};
