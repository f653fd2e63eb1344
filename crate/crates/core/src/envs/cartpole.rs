use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ContinuousSpec, DimSpec, Dynamics, StepOutcome};

/// Pole balanced on a cart pushed by a continuous horizontal force.
///
/// State `(x, x_dot, theta, theta_dot)`, explicit Euler integration. Each
/// surviving step pays `alive_reward - action_penalty * F^2`; the step that
/// drops the pole or leaves the track pays only the action penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartPole {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Half the pole length.
    pub half_length: f64,
    pub max_force: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub theta_threshold: f64,
    pub x_threshold: f64,
    pub max_cart_speed: f64,
    pub max_pole_speed: f64,
    pub alive_reward: f64,
    pub action_penalty: f64,
}

impl Default for CartPole {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            max_force: 10.0,
            dt: 0.02,
            max_steps: 200,
            theta_threshold: 12.0_f64.to_radians(),
            x_threshold: 2.4,
            max_cart_speed: 3.0,
            max_pole_speed: 3.5,
            alive_reward: 1.0,
            action_penalty: 0.001,
        }
    }
}

impl Dynamics for CartPole {
    fn spec(&self) -> ContinuousSpec {
        ContinuousSpec {
            name: "cartpole",
            state_dims: vec![
                DimSpec::new("x", -self.x_threshold, self.x_threshold),
                DimSpec::new("x_dot", -self.max_cart_speed, self.max_cart_speed),
                DimSpec::new("theta", -self.theta_threshold, self.theta_threshold),
                DimSpec::new("theta_dot", -self.max_pole_speed, self.max_pole_speed),
            ],
            action_dims: vec![DimSpec::new("force", -self.max_force, self.max_force)],
            dt: self.dt,
            max_steps: self.max_steps,
        }
    }

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..4).map(|_| rng.random_range(-0.05..0.05)).collect()
    }

    fn step<R: Rng + ?Sized>(&self, state: &[f64], action: &[f64], _rng: &mut R) -> StepOutcome {
        self.advance(state, action)
    }
}

impl CartPole {
    /// Deterministic one-step integration.
    pub fn advance(&self, state: &[f64], action: &[f64]) -> StepOutcome {
        let (x, x_dot, theta, theta_dot) = (state[0], state[1], state[2], state[3]);
        let force = action[0];
        let total_mass = self.cart_mass + self.pole_mass;
        let pole_moment = self.pole_mass * self.half_length;
        let (sin, cos) = theta.sin_cos();

        let temp = (force + pole_moment * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (self.gravity * sin - cos * temp)
            / (self.half_length * (4.0 / 3.0 - self.pole_mass * cos * cos / total_mass));
        let x_acc = temp - pole_moment * theta_acc * cos / total_mass;

        let next = vec![
            x + self.dt * x_dot,
            x_dot + self.dt * x_acc,
            theta + self.dt * theta_dot,
            theta_dot + self.dt * theta_acc,
        ];
        let failed = next[0].abs() > self.x_threshold || next[2].abs() > self.theta_threshold;
        let penalty = self.action_penalty * force * force;
        let reward = if failed { -penalty } else { self.alive_reward - penalty };
        StepOutcome {
            next_state: next,
            reward,
            terminal: failed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pole_past_threshold_terminates() {
        let c = CartPole::default();
        let out = c.advance(&[0.0, 0.0, 0.3, 0.0], &[0.0]);
        assert!(out.terminal);
        assert_eq!(out.reward, 0.0);
        let out = c.advance(&[2.39, 1.0, 0.0, 0.0], &[0.0]);
        assert!(out.terminal);
    }

    #[test]
    fn balanced_rest_is_stationary() {
        let c = CartPole::default();
        let out = c.advance(&[0.0; 4], &[0.0]);
        assert_eq!(out.next_state, vec![0.0; 4]);
        assert!(!out.terminal);
        assert_eq!(out.reward, 1.0);
    }

    #[test]
    fn push_accelerates_cart() {
        let c = CartPole::default();
        let out = c.advance(&[0.0; 4], &[10.0]);
        // theta = 0: x_acc = F / M_total - m l theta_acc / M_total, theta_acc < 0
        assert!(out.next_state[1] > 0.0);
        assert!(out.next_state[3] < 0.0);
        assert!((out.reward - (1.0 - 0.1)).abs() < 1e-12);
    }
}
