use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ContinuousSpec, DimSpec, Dynamics, StepOutcome};

/// Under-powered car in a valley with a continuous throttle in `[-1, 1]`.
///
/// `v' = v + power * u - gravity * cos(3 x)`, `x' = x + v'`, both clipped;
/// hitting the left wall zeroes the velocity. Reaching `goal_position` ends
/// the episode with `goal_bonus`; every step costs `action_penalty * u^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MountainCar {
    pub min_position: f64,
    pub max_position: f64,
    pub max_speed: f64,
    pub goal_position: f64,
    pub power: f64,
    pub gravity: f64,
    pub max_steps: usize,
    pub action_penalty: f64,
    pub goal_bonus: f64,
}

impl Default for MountainCar {
    fn default() -> Self {
        Self {
            min_position: -1.2,
            max_position: 0.6,
            max_speed: 0.07,
            goal_position: 0.45,
            power: 0.0015,
            gravity: 0.0025,
            max_steps: 500,
            action_penalty: 0.1,
            goal_bonus: 100.0,
        }
    }
}

impl Dynamics for MountainCar {
    fn spec(&self) -> ContinuousSpec {
        ContinuousSpec {
            name: "mountain_car",
            state_dims: vec![
                DimSpec::new("position", self.min_position, self.max_position),
                DimSpec::new("velocity", -self.max_speed, self.max_speed),
            ],
            action_dims: vec![DimSpec::new("throttle", -1.0, 1.0)],
            // discrete-time map: one unit per step
            dt: 1.0,
            max_steps: self.max_steps,
        }
    }

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        vec![rng.random_range(-0.6..-0.4), 0.0]
    }

    fn step<R: Rng + ?Sized>(&self, state: &[f64], action: &[f64], _rng: &mut R) -> StepOutcome {
        self.advance(state, action)
    }
}

impl MountainCar {
    /// Deterministic one-step integration.
    pub fn advance(&self, state: &[f64], action: &[f64]) -> StepOutcome {
        let (x, v) = (state[0], state[1]);
        let u = action[0];
        let mut v_next =
            (v + self.power * u - self.gravity * (3.0 * x).cos()).clamp(-self.max_speed, self.max_speed);
        let x_next = (x + v_next).clamp(self.min_position, self.max_position);
        if x_next <= self.min_position && v_next < 0.0 {
            v_next = 0.0;
        }
        let done = x_next >= self.goal_position;
        let mut reward = -self.action_penalty * u * u;
        if done {
            reward += self.goal_bonus;
        }
        StepOutcome {
            next_state: vec![x_next, v_next],
            reward,
            terminal: done,
        }
    }
}
