//! FrozenLake-style gridworlds.
//!
//! Layout files are plain text, one row per line, using
//! `S` (start), `G` (goal), `H` (hole) and `F` (free). Blank lines and lines
//! starting with `#` are ignored. States are cells in row-major order; the
//! four actions are left, down, right, up (indices 0..4). Moving into a wall
//! leaves the agent in place. Goal and hole cells are terminal: they loop to
//! themselves with zero reward.

use super::TabularMdp;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Start,
    Free,
    Hole,
    Goal,
}

impl Cell {
    pub fn is_terminal(self) -> bool {
        matches!(self, Cell::Hole | Cell::Goal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Left = 0,
    Down = 1,
    Right = 2,
    Up = 3,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [Self::Left, Self::Down, Self::Right, Self::Up];

    fn delta(self) -> (isize, isize) {
        match self {
            Self::Left => (0, -1),
            Self::Down => (1, 0),
            Self::Right => (0, 1),
            Self::Up => (-1, 0),
        }
    }

    pub fn perpendicular(self) -> [GridAction; 2] {
        match self {
            Self::Left | Self::Right => [Self::Up, Self::Down],
            Self::Up | Self::Down => [Self::Left, Self::Right],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLayout {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
}

impl GridLayout {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cells = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<Cell> = line
                .chars()
                .map(|ch| match ch {
                    'S' => Ok(Cell::Start),
                    'F' => Ok(Cell::Free),
                    'H' => Ok(Cell::Hole),
                    'G' => Ok(Cell::Goal),
                    other => Err(malformed(no + 1, format!("unknown cell `{other}`"))),
                })
                .collect::<Result<_>>()?;
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(malformed(no + 1, format!("row has {} cells, expected {c}", row.len())))
                }
                _ => {}
            }
            cells.extend(row);
            rows += 1;
        }
        let cols = cols.ok_or_else(|| malformed(1, "empty layout".into()))?;
        let layout = Self { rows, cols, cells };
        layout.validate()?;
        Ok(layout)
    }

    /// The classic 4x4 map.
    pub fn frozen_lake_4x4() -> Self {
        Self::parse("SFFF\nFHFH\nFFFH\nHFFG\n").expect("built-in layout is valid")
    }

    fn validate(&self) -> Result<()> {
        let count = |c: Cell| self.cells.iter().filter(|&&x| x == c).count();
        if count(Cell::Goal) != 1 {
            return Err(malformed(0, format!("expected exactly one goal, found {}", count(Cell::Goal))));
        }
        if count(Cell::Start) != 1 {
            return Err(malformed(0, format!("expected exactly one start, found {}", count(Cell::Start))));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, state: usize) -> Cell {
        self.cells[state]
    }

    pub fn start_state(&self) -> usize {
        self.cells.iter().position(|&c| c == Cell::Start).expect("validated")
    }

    pub fn goal_state(&self) -> usize {
        self.cells.iter().position(|&c| c == Cell::Goal).expect("validated")
    }

    /// Cell reached by a deterministic move.
    pub fn move_from(&self, state: usize, action: GridAction) -> usize {
        let (r, c) = ((state / self.cols) as isize, (state % self.cols) as isize);
        let (dr, dc) = action.delta();
        let (nr, nc) = (r + dr, c + dc);
        if nr < 0 || nc < 0 || nr >= self.rows as isize || nc >= self.cols as isize {
            state
        } else {
            nr as usize * self.cols + nc as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    /// Probability of slipping to each perpendicular direction; the intended
    /// move happens with probability `1 - 2 * slip`. `1/3` gives FrozenLake.
    pub slip: f64,
    pub goal_reward: f64,
    pub hole_reward: f64,
    pub step_reward: f64,
    pub discount: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            slip: 0.0,
            goal_reward: 1.0,
            hole_reward: 0.0,
            step_reward: 0.0,
            discount: 0.9,
        }
    }
}

pub fn build_gridworld(layout: &GridLayout, opts: &GridOptions) -> Result<TabularMdp> {
    if !(0.0..=0.5).contains(&opts.slip) {
        return Err(Error::InvalidArgument(format!("slip {} outside [0, 0.5]", opts.slip)));
    }
    if !layout.cells.iter().any(|c| !c.is_terminal()) {
        return Err(malformed(0, "layout has no non-terminal cell".into()));
    }
    let ns = layout.num_cells();
    let na = GridAction::ALL.len();
    let mut transition = DenseMatrix::zeros(ns * na, ns);
    let mut reward = vec![0.0; ns * na];

    for s in 0..ns {
        for action in GridAction::ALL {
            let row = s * na + action as usize;
            if layout.cell(s).is_terminal() {
                transition[(row, s)] = 1.0;
                continue;
            }
            let [p1, p2] = action.perpendicular();
            let outcomes = [
                (action, 1.0 - 2.0 * opts.slip),
                (p1, opts.slip),
                (p2, opts.slip),
            ];
            for (dir, prob) in outcomes {
                if prob == 0.0 {
                    continue;
                }
                let next = layout.move_from(s, dir);
                transition[(row, next)] += prob;
                let r = match layout.cell(next) {
                    Cell::Goal => opts.goal_reward,
                    Cell::Hole => opts.hole_reward,
                    _ => opts.step_reward,
                };
                reward[row] += prob * r;
            }
        }
    }
    TabularMdp::new(ns, na, transition, reward, opts.discount)
}

fn malformed(line: usize, msg: String) -> Error {
    Error::Parse { line, msg }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_two() {
        let layout = GridLayout::parse("SG").unwrap();
        let mdp = build_gridworld(&layout, &GridOptions::default()).unwrap();
        assert_eq!(mdp.num_states(), 2);
        assert_eq!(mdp.num_actions(), 4);
        // right from the start reaches the goal
        assert_eq!(mdp.transition()[(2, 1)], 1.0);
        assert_eq!(mdp.reward()[2], 1.0);
        // left bumps into the wall
        assert_eq!(mdp.transition()[(0, 0)], 1.0);
    }

    #[test]
    fn deterministic_rows_are_one_hot() {
        let mdp = build_gridworld(&GridLayout::frozen_lake_4x4(), &GridOptions::default()).unwrap();
        let p = mdp.transition();
        for r in 0..p.rows() {
            let row = p.row(r);
            assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&x| x == 0.0).count(), row.len() - 1);
        }
    }

    #[test]
    fn slippery_rows_stochastic() {
        let opts = GridOptions {
            slip: 1.0 / 3.0,
            ..GridOptions::default()
        };
        let mdp = build_gridworld(&GridLayout::frozen_lake_4x4(), &opts).unwrap();
        for r in 0..mdp.transition().rows() {
            let sum: f64 = mdp.transition().row(r).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn terminal_cells_absorb_without_reward() {
        let layout = GridLayout::frozen_lake_4x4();
        let mdp = build_gridworld(&layout, &GridOptions::default()).unwrap();
        let goal = layout.goal_state();
        for a in 0..4 {
            assert_eq!(mdp.transition()[(goal * 4 + a, goal)], 1.0);
            assert_eq!(mdp.reward()[goal * 4 + a], 0.0);
        }
    }

    #[test]
    fn malformed_layouts() {
        assert!(GridLayout::parse("").is_err());
        assert!(GridLayout::parse("SF\nF").is_err());
        assert!(GridLayout::parse("SX\nFG").is_err());
        assert!(GridLayout::parse("SF\nFF").is_err());
        assert!(GridLayout::parse("SG\nFG").is_err());
        assert!(GridLayout::parse("FG").is_err());
        let ok = GridLayout::parse("# comment\nSF\n\nHG\n").unwrap();
        assert_eq!((ok.rows(), ok.cols()), (2, 2));
        assert!(build_gridworld(&ok, &GridOptions { slip: 0.7, ..GridOptions::default() }).is_err());
    }
}
