use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ContinuousSpec, DimSpec, Dynamics, StepOutcome};
use crate::error::{Error, Result};
use crate::mdp::{build_gridworld, Cell, GridAction, GridLayout, GridOptions, TabularMdp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridworldParams {
    /// Layout text, rows separated by newlines.
    pub layout: String,
    pub slip: f64,
    pub goal_reward: f64,
    pub hole_reward: f64,
    pub step_reward: f64,
    pub max_steps: usize,
}

impl Default for GridworldParams {
    fn default() -> Self {
        Self {
            layout: "SFFF\nFHFH\nFFFH\nHFFG".into(),
            slip: 0.0,
            goal_reward: 1.0,
            hole_reward: 0.0,
            step_reward: 0.0,
            max_steps: 100,
        }
    }
}

/// A gridworld sampled one transition at a time.
///
/// The single state dimension holds `cell + 0.5` and the single action
/// dimension `action + 0.5`, so a grid with one bin per cell and one bin per
/// move recovers the tabular indices exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridworldParams", into = "GridworldParams")]
pub struct Gridworld {
    params: GridworldParams,
    layout: GridLayout,
}

impl TryFrom<GridworldParams> for Gridworld {
    type Error = Error;

    fn try_from(params: GridworldParams) -> Result<Self> {
        let layout = GridLayout::parse(&params.layout)?;
        if !(0.0..=0.5).contains(&params.slip) {
            return Err(Error::InvalidArgument(format!("slip {} outside [0, 0.5]", params.slip)));
        }
        Ok(Self { params, layout })
    }
}

impl From<Gridworld> for GridworldParams {
    fn from(g: Gridworld) -> Self {
        g.params
    }
}

impl Default for Gridworld {
    fn default() -> Self {
        Self::try_from(GridworldParams::default()).expect("default layout is valid")
    }
}

impl Gridworld {
    pub fn new(params: GridworldParams) -> Result<Self> {
        Self::try_from(params)
    }

    pub fn params(&self) -> &GridworldParams {
        &self.params
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    /// The tabular model this sampler draws from.
    pub fn mdp(&self, discount: f64) -> Result<TabularMdp> {
        build_gridworld(
            &self.layout,
            &GridOptions {
                slip: self.params.slip,
                goal_reward: self.params.goal_reward,
                hole_reward: self.params.hole_reward,
                step_reward: self.params.step_reward,
                discount,
            },
        )
    }
}

impl Dynamics for Gridworld {
    fn spec(&self) -> ContinuousSpec {
        ContinuousSpec {
            name: "gridworld",
            state_dims: vec![DimSpec::new("cell", 0.0, self.layout.num_cells() as f64)],
            action_dims: vec![DimSpec::new("move", 0.0, GridAction::ALL.len() as f64)],
            dt: 1.0,
            max_steps: self.params.max_steps,
        }
    }

    fn initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> Vec<f64> {
        vec![self.layout.start_state() as f64 + 0.5]
    }

    fn step<R: Rng + ?Sized>(&self, state: &[f64], action: &[f64], rng: &mut R) -> StepOutcome {
        let cell = (state[0].max(0.0) as usize).min(self.layout.num_cells() - 1);
        let intended = GridAction::ALL[(action[0].max(0.0) as usize).min(GridAction::ALL.len() - 1)];
        let [p1, p2] = intended.perpendicular();
        let u = rng.random::<f64>();
        let slip = self.params.slip;
        let dir = if u < slip {
            p1
        } else if u < 2.0 * slip {
            p2
        } else {
            intended
        };
        let next = self.layout.move_from(cell, dir);
        let reward = match self.layout.cell(next) {
            Cell::Goal => self.params.goal_reward,
            Cell::Hole => self.params.hole_reward,
            _ => self.params.step_reward,
        };
        StepOutcome {
            next_state: vec![next as f64 + 0.5],
            reward,
            terminal: self.layout.cell(next).is_terminal(),
        }
    }
}
