use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ContinuousSpec, DimSpec, Dynamics, StepOutcome};

/// Torque-limited rigid pendulum, angle 0 pointing up.
///
/// State is `(theta, theta_dot)` with theta wrapped to `[-pi, pi)`; the single
/// action is the torque. Semi-implicit Euler integration. Reward is
/// `alive_bonus - angle_cost * theta'^2 - speed_cost * theta_dot'^2 -
/// action_penalty * u^2`.
///
/// Episodes start near upright and end once `|theta'| > fail_angle`; the
/// angle bounds of the state space are `+-fail_angle`. A `fail_angle` of at
/// least pi never fails and, with `init_angle` pi, gives the swing-up task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pendulum {
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub max_speed: f64,
    pub max_torque: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub alive_bonus: f64,
    pub angle_cost: f64,
    pub speed_cost: f64,
    pub action_penalty: f64,
    /// Initial angle is drawn from `[-init_angle, init_angle]`.
    pub init_angle: f64,
    /// Initial speed is drawn from `[-init_speed, init_speed]`.
    pub init_speed: f64,
    pub fail_angle: f64,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self {
            gravity: 10.0,
            mass: 1.0,
            length: 1.0,
            max_speed: 2.0,
            max_torque: 2.0,
            dt: 0.05,
            max_steps: 200,
            alive_bonus: 1.0,
            angle_cost: 1.0,
            speed_cost: 0.1,
            action_penalty: 0.001,
            init_angle: 0.1,
            init_speed: 0.1,
            fail_angle: 0.5,
        }
    }
}

pub(crate) fn wrap_angle(x: f64) -> f64 {
    x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor()
}

fn symmetric_draw<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.random_range(-half_width..=half_width)
    } else {
        0.0
    }
}

impl Pendulum {
    fn angle_bound(&self) -> f64 {
        self.fail_angle.min(PI)
    }
}

impl Dynamics for Pendulum {
    fn spec(&self) -> ContinuousSpec {
        let bound = self.angle_bound();
        ContinuousSpec {
            name: "pendulum",
            state_dims: vec![
                DimSpec::new("theta", -bound, bound),
                DimSpec::new("theta_dot", -self.max_speed, self.max_speed),
            ],
            action_dims: vec![DimSpec::new("torque", -self.max_torque, self.max_torque)],
            dt: self.dt,
            max_steps: self.max_steps,
        }
    }

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let theta = wrap_angle(symmetric_draw(rng, self.init_angle.min(PI)));
        vec![theta, symmetric_draw(rng, self.init_speed)]
    }

    fn step<R: Rng + ?Sized>(&self, state: &[f64], action: &[f64], _rng: &mut R) -> StepOutcome {
        self.advance(state, action)
    }
}

impl Pendulum {
    /// Deterministic one-step integration.
    pub fn advance(&self, state: &[f64], action: &[f64]) -> StepOutcome {
        let (theta, theta_dot) = (state[0], state[1]);
        let u = action[0];
        let accel = 3.0 * self.gravity / (2.0 * self.length) * theta.sin()
            + 3.0 / (self.mass * self.length * self.length) * u;
        let new_dot = (theta_dot + accel * self.dt).clamp(-self.max_speed, self.max_speed);
        let new_theta = wrap_angle(theta + new_dot * self.dt);
        let reward = self.alive_bonus
            - self.angle_cost * new_theta * new_theta
            - self.speed_cost * new_dot * new_dot
            - self.action_penalty * u * u;
        StepOutcome {
            next_state: vec![new_theta, new_dot],
            reward,
            terminal: self.fail_angle < PI && new_theta.abs() > self.fail_angle,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upright_equilibrium() {
        let p = Pendulum::default();
        let out = p.advance(&[0.0, 0.0], &[0.0]);
        assert_eq!(out.next_state, vec![0.0, 0.0]);
        assert!((out.reward - 1.0).abs() < 1e-15);
        assert!(!out.terminal);
    }

    #[test]
    fn angle_wrapping() {
        assert!((wrap_angle(PI) + PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(-PI - 0.1) - (PI - 0.1)).abs() < 1e-12);
        let p = Pendulum {
            max_speed: 8.0,
            fail_angle: PI,
            ..Pendulum::default()
        };
        let out = p.advance(&[PI - 0.01, 8.0], &[2.0]);
        assert!(out.next_state[0] >= -PI && out.next_state[0] < PI);
    }

    #[test]
    fn falling_past_fail_angle_terminates() {
        let p = Pendulum::default();
        assert!(p.advance(&[0.52, 0.0], &[0.0]).terminal);
        assert!(!p.advance(&[0.2, 0.0], &[0.0]).terminal);
        let swing = Pendulum {
            fail_angle: PI,
            ..Pendulum::default()
        };
        assert!(!swing.advance(&[3.0, 0.0], &[0.0]).terminal);
        assert_eq!(swing.spec().state_dims[0].low, -PI);
    }

    #[test]
    fn initial_state_within_ranges() {
        use rand::SeedableRng;
        let p = Pendulum::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s = p.initial_state(&mut rng);
            assert!(s[0].abs() <= 0.1 && s[1].abs() <= 0.1);
        }
    }

    #[test]
    fn hand_evaluated_step() {
        let p = Pendulum::default();
        // accel = 15 sin(0.3) + 3 * 1 = 7.43280...; dot = 0.2 + 0.05 accel
        let out = p.advance(&[0.3, 0.2], &[1.0]);
        let accel = 15.0 * 0.3f64.sin() + 3.0;
        let dot = 0.2 + 0.05 * accel;
        let theta = 0.3 + 0.05 * dot;
        assert!((out.next_state[1] - dot).abs() < 1e-15);
        assert!((out.next_state[0] - theta).abs() < 1e-15);
        let reward = 1.0 - theta * theta - 0.1 * dot * dot - 0.001;
        assert!((out.reward - reward).abs() < 1e-15);
        assert!(!out.terminal);
    }

    #[test]
    fn speed_is_clamped() {
        let p = Pendulum::default();
        let out = p.advance(&[0.4, 1.95], &[2.0]);
        assert_eq!(out.next_state[1], 2.0);
    }
}
