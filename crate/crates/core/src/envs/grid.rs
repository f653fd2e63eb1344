use serde::{Deserialize, Serialize};

use super::ContinuousSpec;
use crate::error::{invalid, Result};

/// Uniform binning of one bounded dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub low: f64,
    pub high: f64,
    pub bins: usize,
}

impl Axis {
    pub fn new(low: f64, high: f64, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(invalid("an axis needs at least one bin"));
        }
        if !(low < high) || !low.is_finite() || !high.is_finite() {
            return Err(invalid(format!("axis bounds [{low}, {high}] are not increasing")));
        }
        Ok(Self { low, high, bins })
    }

    pub fn width(&self) -> f64 {
        (self.high - self.low) / self.bins as f64
    }

    /// Bucket of `value`; out-of-range values clip to the edge buckets.
    pub fn bucket(&self, value: f64) -> usize {
        let t = (value - self.low) / (self.high - self.low) * self.bins as f64;
        if t.is_nan() || t <= 0.0 {
            0
        } else {
            (t.floor() as usize).min(self.bins - 1)
        }
    }

    pub fn center(&self, bucket: usize) -> f64 {
        self.low + (bucket as f64 + 0.5) * self.width()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    State,
    Action,
}

/// Per-dimension uniform grids over a continuous state and action space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationGrid {
    state: Vec<Axis>,
    action: Vec<Axis>,
}

impl DiscretizationGrid {
    pub fn new(state: Vec<Axis>, action: Vec<Axis>) -> Result<Self> {
        if state.is_empty() || action.is_empty() {
            return Err(invalid("grid needs state and action axes"));
        }
        Ok(Self { state, action })
    }

    /// Bins each dimension of `spec` over its declared bounds.
    pub fn from_spec(spec: &ContinuousSpec, state_bins: &[usize], action_bins: &[usize]) -> Result<Self> {
        if state_bins.len() != spec.state_dims.len() || action_bins.len() != spec.action_dims.len() {
            return Err(invalid(format!(
                "{} needs {} state and {} action bin counts, got {} and {}",
                spec.name,
                spec.state_dims.len(),
                spec.action_dims.len(),
                state_bins.len(),
                action_bins.len()
            )));
        }
        let axes = |dims: &[super::DimSpec], bins: &[usize]| {
            dims.iter()
                .zip(bins)
                .map(|(d, &b)| Axis::new(d.low, d.high, b))
                .collect::<Result<Vec<_>>>()
        };
        Self::new(axes(&spec.state_dims, state_bins)?, axes(&spec.action_dims, action_bins)?)
    }

    pub fn axes(&self, which: Which) -> &[Axis] {
        match which {
            Which::State => &self.state,
            Which::Action => &self.action,
        }
    }

    pub fn state_sizes(&self) -> Vec<usize> {
        self.state.iter().map(|a| a.bins).collect()
    }

    pub fn action_sizes(&self) -> Vec<usize> {
        self.action.iter().map(|a| a.bins).collect()
    }

    /// State sizes followed by action sizes.
    pub fn all_sizes(&self) -> Vec<usize> {
        let mut sizes = self.state_sizes();
        sizes.extend(self.action_sizes());
        sizes
    }

    pub fn discretize(&self, which: Which, values: &[f64]) -> Result<Vec<usize>> {
        let axes = self.axes(which);
        if values.len() != axes.len() {
            return Err(invalid(format!(
                "expected {} values, got {}",
                axes.len(),
                values.len()
            )));
        }
        Ok(axes.iter().zip(values).map(|(a, &v)| a.bucket(v)).collect())
    }

    /// Continuous action at the center of each selected bucket.
    pub fn action_from_index(&self, index: &[usize]) -> Result<Vec<f64>> {
        if index.len() != self.action.len() {
            return Err(invalid(format!(
                "expected {} action indices, got {}",
                self.action.len(),
                index.len()
            )));
        }
        index
            .iter()
            .zip(&self.action)
            .map(|(&i, a)| {
                if i < a.bins {
                    Ok(a.center(i))
                } else {
                    Err(invalid(format!("action index {i} out of range 0..{}", a.bins)))
                }
            })
            .collect()
    }
}
