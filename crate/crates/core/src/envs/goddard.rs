use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ContinuousSpec, DimSpec, Dynamics, StepOutcome};

/// Vertical rocket ascent in normalized units (launch radius, mass and
/// surface gravity all 1).
///
/// State `(altitude, velocity, mass)`; the action is the throttle fraction
/// in `[0, 1]` of `max_thrust`. Drag is quadratic in velocity and decays
/// exponentially with altitude, gravity falls off with the inverse square of
/// altitude. Fuel burns at `thrust / exhaust_speed` until the dry mass is
/// reached. The episode ends once the fuel is spent and the rocket starts to
/// fall. Reward is `altitude_scale * (h' - h) - action_penalty * u^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Goddard {
    pub max_thrust: f64,
    pub exhaust_speed: f64,
    pub drag_coefficient: f64,
    pub drag_scale_height: f64,
    pub dry_mass: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub altitude_scale: f64,
    pub action_penalty: f64,
    pub max_altitude: f64,
    pub max_velocity: f64,
}

impl Default for Goddard {
    fn default() -> Self {
        Self {
            max_thrust: 3.5,
            exhaust_speed: 0.5,
            drag_coefficient: 310.0,
            drag_scale_height: 500.0,
            dry_mass: 0.6,
            dt: 0.001,
            max_steps: 300,
            altitude_scale: 1e4,
            action_penalty: 0.001,
            max_altitude: 1.02,
            max_velocity: 0.12,
        }
    }
}

impl Dynamics for Goddard {
    fn spec(&self) -> ContinuousSpec {
        ContinuousSpec {
            name: "goddard",
            state_dims: vec![
                DimSpec::new("altitude", 1.0, self.max_altitude),
                DimSpec::new("velocity", 0.0, self.max_velocity),
                DimSpec::new("mass", self.dry_mass, 1.0),
            ],
            action_dims: vec![DimSpec::new("throttle", 0.0, 1.0)],
            dt: self.dt,
            max_steps: self.max_steps,
        }
    }

    fn initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> Vec<f64> {
        vec![1.0, 0.0, 1.0]
    }

    fn step<R: Rng + ?Sized>(&self, state: &[f64], action: &[f64], _rng: &mut R) -> StepOutcome {
        self.advance(state, action)
    }
}

impl Goddard {
    /// Deterministic one-step integration.
    pub fn advance(&self, state: &[f64], action: &[f64]) -> StepOutcome {
        let (h, v, m) = (state[0], state[1], state[2]);
        let u = action[0];
        let thrust = if m > self.dry_mass { u * self.max_thrust } else { 0.0 };
        let drag = self.drag_coefficient * v * v * (-self.drag_scale_height * (h - 1.0)).exp();
        let gravity = 1.0 / (h * h);

        let mut v_next = v + self.dt * ((thrust - drag.copysign(v)) / m - gravity);
        let mut h_next = h + self.dt * v;
        let m_next = (m - self.dt * thrust / self.exhaust_speed).max(self.dry_mass);
        if h_next <= 1.0 {
            h_next = 1.0;
            v_next = v_next.max(0.0);
        }
        let terminal = m_next <= self.dry_mass && v_next < 0.0;
        let reward = self.altitude_scale * (h_next - h) - self.action_penalty * u * u;
        StepOutcome {
            next_state: vec![h_next, v_next, m_next],
            reward,
            terminal,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rests_on_ground_without_thrust() {
        let g = Goddard::default();
        let out = g.advance(&[1.0, 0.0, 1.0], &[0.0]);
        assert_eq!(out.next_state, vec![1.0, 0.0, 1.0]);
        assert!(!out.terminal);
    }

    #[test]
    fn full_thrust_lifts_and_burns() {
        let g = Goddard::default();
        let out = g.advance(&[1.0, 0.0, 1.0], &[1.0]);
        // v' = 0.001 * (3.5 - 1), m' = 1 - 0.001 * 7
        assert!((out.next_state[1] - 0.0025).abs() < 1e-15);
        assert!((out.next_state[2] - 0.993).abs() < 1e-15);
    }

    #[test]
    fn full_burn_flight_ends_above_launch() {
        let g = Goddard::default();
        let mut s = g.initial_state(&mut rand::rng());
        let mut total = 0.0;
        for _ in 0..g.max_steps {
            let out = g.advance(&s, &[1.0]);
            total += out.reward;
            s = out.next_state;
            if out.terminal {
                break;
            }
        }
        assert!(s[0] > 1.005, "apogee {}", s[0]);
        assert!(total > 0.0);
        assert!((s[2] - g.dry_mass).abs() < 1e-12);
    }
}
