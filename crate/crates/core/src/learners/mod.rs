//! Online TD learners over discretized state-action spaces.
//!
//! All three models take grouped multi-indices (one index per tensor mode,
//! state modes first). The tabular and matrix models flatten them row-major
//! into a single state and a single action index.

mod matrix;
mod table;
mod tensor;
mod update;

pub use matrix::MatrixFactors;
pub use table::QTable;
pub use tensor::TensorFactors;
pub use update::{td_target, DIVERGENCE_LIMIT};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::text::{read_factor_set, read_tensor, write_factor_set, write_tensor};
use crate::linalg::{flat_index, unflatten_index, DenseMatrix, FactorSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSize {
    Constant { value: f64 },
    /// `initial / t^exponent` for the `t`-th update, `t` starting at 1.
    Power { initial: f64, exponent: f64 },
}

impl StepSize {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            StepSize::Constant { value } => value,
            StepSize::Power { initial, exponent } => initial / (t.max(1) as f64).powf(exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSize::Constant { value } => value > 0.0 && value.is_finite(),
            StepSize::Power { initial, exponent } => {
                initial > 0.0 && initial.is_finite() && exponent >= 0.0 && exponent.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("step size {self:?} must be positive and finite")))
        }
    }
}

/// `max(floor, initial * decay^episode)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            initial: 1.0,
            decay: 0.999,
            floor: 0.05,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, episode: usize) -> f64 {
        let e = self.initial * self.decay.powi(episode.min(i32::MAX as usize) as i32);
        e.max(self.floor)
    }

    fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.initial) || !unit(self.floor) || !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(invalid(format!("epsilon schedule {self:?} out of range")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub discount: f64,
    pub step_size: StepSize,
    pub epsilon: EpsilonSchedule,
    pub rank: usize,
    /// Frobenius penalty weight on each touched factor row.
    pub frobenius_weight: f64,
    /// Divide each factor step by `max(1, |step|)`.
    pub rescale_gradient: bool,
    /// Factor entries start uniform in `(0, init_scale]`.
    pub init_scale: f64,
    pub init_seed: u64,
    /// Reuse the pre-update target for every factor instead of recomputing it.
    pub stale_target: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            discount: 0.95,
            step_size: StepSize::Constant { value: 0.1 },
            epsilon: EpsilonSchedule::default(),
            rank: 2,
            frobenius_weight: 0.0,
            rescale_gradient: false,
            init_scale: 1.0,
            init_seed: 0,
            stale_target: false,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(invalid(format!("discount {} outside [0, 1)", self.discount)));
        }
        self.step_size.validate()?;
        self.epsilon.validate()?;
        if self.rank == 0 {
            return Err(invalid("rank must be positive"));
        }
        if !(self.frobenius_weight >= 0.0 && self.frobenius_weight.is_finite()) {
            return Err(invalid("frobenius_weight must be non-negative"));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(invalid("init_scale must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "qtable")]
    QTable,
    #[serde(rename = "mlr")]
    Matrix,
    #[serde(rename = "tlr")]
    Tensor,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::QTable => "qtable",
            ModelKind::Matrix => "mlr",
            ModelKind::Tensor => "tlr",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "qtable" => Ok(ModelKind::QTable),
            "mlr" => Ok(ModelKind::Matrix),
            "tlr" => Ok(ModelKind::Tensor),
            other => Err(invalid(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Sizes of the grouped state and action modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    state_sizes: Vec<usize>,
    action_sizes: Vec<usize>,
}

impl Layout {
    pub fn new(state_sizes: Vec<usize>, action_sizes: Vec<usize>) -> Result<Self> {
        if state_sizes.is_empty() || action_sizes.is_empty() {
            return Err(invalid("layout needs state and action modes"));
        }
        if state_sizes.iter().chain(&action_sizes).any(|&c| c == 0) {
            return Err(invalid("mode sizes must be positive"));
        }
        Ok(Self {
            state_sizes,
            action_sizes,
        })
    }

    pub fn state_sizes(&self) -> &[usize] {
        &self.state_sizes
    }

    pub fn action_sizes(&self) -> &[usize] {
        &self.action_sizes
    }

    pub fn num_states(&self) -> usize {
        self.state_sizes.iter().product()
    }

    pub fn num_actions(&self) -> usize {
        self.action_sizes.iter().product()
    }

    pub fn all_sizes(&self) -> Vec<usize> {
        self.state_sizes.iter().chain(&self.action_sizes).copied().collect()
    }

    fn check(sizes: &[usize], index: &[usize], what: &str) -> Result<()> {
        if index.len() != sizes.len() || index.iter().zip(sizes).any(|(&i, &c)| i >= c) {
            return Err(invalid(format!("{what} index {index:?} invalid for sizes {sizes:?}")));
        }
        Ok(())
    }

    pub fn flat_state(&self, state: &[usize]) -> Result<usize> {
        Self::check(&self.state_sizes, state, "state")?;
        Ok(flat_index(&self.state_sizes, state))
    }

    pub fn flat_action(&self, action: &[usize]) -> Result<usize> {
        Self::check(&self.action_sizes, action, "action")?;
        Ok(flat_index(&self.action_sizes, action))
    }

    pub fn action_index(&self, flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.action_sizes.len()];
        unflatten_index(&self.action_sizes, flat, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValueModel {
    Table(QTable),
    Matrix(MatrixFactors),
    Tensor(TensorFactors),
}

impl ValueModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            ValueModel::Table(_) => ModelKind::QTable,
            ValueModel::Matrix(_) => ModelKind::Matrix,
            ValueModel::Tensor(_) => ModelKind::Tensor,
        }
    }

    pub fn num_parameters(&self) -> usize {
        match self {
            ValueModel::Table(q) => q.values().rows() * q.values().cols(),
            ValueModel::Matrix(m) => (m.num_states() + m.num_actions()) * m.rank(),
            ValueModel::Tensor(t) => t.factors().num_parameters(),
        }
    }

    /// The `C_S x C_A` action-value matrix.
    pub fn to_matrix(&self) -> DenseMatrix {
        match self {
            ValueModel::Table(q) => q.values().clone(),
            ValueModel::Matrix(m) => m.to_matrix(),
            ValueModel::Tensor(t) => t.to_matrix(),
        }
    }
}

/// Index of the first maximum; later equal values never win.
pub fn argmax_strict(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if i == 0 || v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// A value model plus its layout, configuration and update counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    layout: Layout,
    config: LearnerConfig,
    model: ValueModel,
    updates: u64,
}

impl Learner {
    /// Tables start at zero; factors start uniform in `(0, init_scale]`
    /// drawn from `init_seed`, mode by mode.
    pub fn new(kind: ModelKind, layout: Layout, config: LearnerConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let model = match kind {
            ModelKind::QTable => ValueModel::Table(QTable::zeros(layout.num_states(), layout.num_actions())),
            ModelKind::Matrix => {
                let dims = [layout.num_states(), layout.num_actions()];
                let f = FactorSet::random_uniform(&dims, config.rank, config.init_scale, &mut rng)?;
                let mut it = f.into_factors().into_iter();
                let (left, right) = (it.next().unwrap(), it.next().unwrap());
                ValueModel::Matrix(MatrixFactors::new(left, right.transpose())?)
            }
            ModelKind::Tensor => {
                let f = FactorSet::random_uniform(&layout.all_sizes(), config.rank, config.init_scale, &mut rng)?;
                ValueModel::Tensor(TensorFactors::new(f, layout.state_sizes.len())?)
            }
        };
        Ok(Self {
            layout,
            config,
            model,
            updates: 0,
        })
    }

    pub fn from_model(model: ValueModel, layout: Layout, config: LearnerConfig) -> Result<Self> {
        config.validate()?;
        let (s, a) = (layout.num_states(), layout.num_actions());
        let fits = match &model {
            ValueModel::Table(q) => q.values().shape() == (s, a),
            ValueModel::Matrix(m) => (m.num_states(), m.num_actions()) == (s, a),
            ValueModel::Tensor(t) => {
                t.factors().dims() == layout.all_sizes() && t.num_state_modes() == layout.state_sizes.len()
            }
        };
        if !fits {
            return Err(invalid("model shape does not match layout"));
        }
        Ok(Self {
            layout,
            config,
            model,
            updates: 0,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn model(&self) -> &ValueModel {
        &self.model
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn num_parameters(&self) -> usize {
        self.model.num_parameters()
    }

    pub fn value(&self, state: &[usize], action: &[usize]) -> Result<f64> {
        let (s, a) = (self.layout.flat_state(state)?, self.layout.flat_action(action)?);
        Ok(match &self.model {
            ValueModel::Table(q) => q.value(s, a),
            ValueModel::Matrix(m) => m.value(s, a),
            ValueModel::Tensor(t) => t.value(state, action),
        })
    }

    pub fn best_action(&self, state: &[usize]) -> Result<(Vec<usize>, f64)> {
        let s = self.layout.flat_state(state)?;
        Ok(match &self.model {
            ValueModel::Table(q) => {
                let (a, v) = q.best_action(s);
                (self.layout.action_index(a), v)
            }
            ValueModel::Matrix(m) => {
                let (a, v) = m.best_action(s);
                (self.layout.action_index(a), v)
            }
            ValueModel::Tensor(t) => t.best_action(state),
        })
    }

    /// Draws one uniform number, then explores with probability `epsilon`.
    pub fn epsilon_greedy<R: Rng + ?Sized>(&self, state: &[usize], epsilon: f64, rng: &mut R) -> Result<Vec<usize>> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(invalid(format!("epsilon {epsilon} outside [0, 1]")));
        }
        if rng.random::<f64>() < epsilon {
            Ok(self.layout.action_sizes.iter().map(|&c| rng.random_range(0..c)).collect())
        } else {
            Ok(self.best_action(state)?.0)
        }
    }

    pub fn step_size(&self) -> f64 {
        self.config.step_size.at(self.updates + 1)
    }

    /// One TD update; `next` is `None` on terminal transitions.
    pub fn update(&mut self, state: &[usize], action: &[usize], reward: f64, next: Option<&[usize]>) -> Result<()> {
        if !reward.is_finite() {
            return Err(Error::NonFinite("reward".into()));
        }
        let s = self.layout.flat_state(state)?;
        let a = self.layout.flat_action(action)?;
        let n = next.map(|n| self.layout.flat_state(n)).transpose()?;
        let alpha = self.step_size();
        let cfg = &self.config;
        match &mut self.model {
            ValueModel::Table(q) => q.td_update(s, a, reward, n, alpha, cfg.discount)?,
            ValueModel::Matrix(m) => m.td_update(s, a, reward, n, alpha, cfg)?,
            ValueModel::Tensor(t) => t.td_update(state, action, reward, next, alpha, cfg)?,
        }
        self.updates += 1;
        Ok(())
    }

    /// Model text: a `model=<kind> state=<sizes> action=<sizes>` line, then
    /// a dense tensor (tables) or a factor set (low-rank models; the matrix
    /// model stores `R` transposed).
    pub fn model_text(&self) -> String {
        let body = match &self.model {
            ValueModel::Table(q) => write_tensor(
                &crate::linalg::DenseTensor::from_vec(
                    &[q.values().rows(), q.values().cols()],
                    q.values().as_slice().to_vec(),
                )
                .expect("matrix data fits its shape"),
            ),
            ValueModel::Matrix(m) => write_factor_set(
                &FactorSet::new(vec![m.left().clone(), m.right().transpose()]).expect("valid factors"),
            ),
            ValueModel::Tensor(t) => write_factor_set(t.factors()),
        };
        format!(
            "model={} state={} action={}\n{body}",
            self.kind().name(),
            join(&self.layout.state_sizes),
            join(&self.layout.action_sizes)
        )
    }

    /// Inverse of [`model_text`](Self::model_text); the update counter restarts at zero.
    pub fn from_model_text(text: &str, config: LearnerConfig) -> Result<Self> {
        let (head, body) = text.split_once('\n').unwrap_or((text, ""));
        let mut kind = None;
        let mut state = None;
        let mut action = None;
        for field in head.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| parse_err(&format!("bad field `{field}`")))?;
            match k {
                "model" => kind = Some(ModelKind::parse(v)?),
                "state" => state = Some(parse_sizes(v)?),
                "action" => action = Some(parse_sizes(v)?),
                other => return Err(parse_err(&format!("unknown key `{other}`"))),
            }
        }
        let (kind, state, action) = match (kind, state, action) {
            (Some(k), Some(s), Some(a)) => (k, s, a),
            _ => return Err(parse_err("header needs model=, state= and action=")),
        };
        let layout = Layout::new(state, action)?;
        let model = match kind {
            ModelKind::QTable => {
                let t = read_tensor(body)?;
                ValueModel::Table(QTable::from_matrix(t.to_matrix()?)?)
            }
            ModelKind::Matrix => {
                let f = read_factor_set(body)?;
                if f.order() != 2 {
                    return Err(parse_err("matrix model needs exactly two factors"));
                }
                let mut it = f.into_factors().into_iter();
                let (left, right) = (it.next().unwrap(), it.next().unwrap());
                ValueModel::Matrix(MatrixFactors::new(left, right.transpose())?)
            }
            ModelKind::Tensor => ValueModel::Tensor(TensorFactors::new(read_factor_set(body)?, layout.state_sizes.len())?),
        };
        Self::from_model(model, layout, config)
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_sizes(v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(|x| x.trim().parse().map_err(|_| parse_err(&format!("bad size `{x}`"))))
        .collect()
}

fn parse_err(msg: &str) -> Error {
    Error::Parse {
        line: 1,
        msg: msg.to_string(),
    }
}

/// Stored values of a model: `prod C` for tables, `(C_S + C_A) K` for the
/// matrix model and `(sum C_d) K` for tensors over the given modes.
pub fn count_parameters(kind: ModelKind, state_sizes: &[usize], action_sizes: &[usize], rank: usize) -> Result<usize> {
    let layout = Layout::new(state_sizes.to_vec(), action_sizes.to_vec())?;
    if rank == 0 && kind != ModelKind::QTable {
        return Err(invalid("rank must be positive"));
    }
    Ok(match kind {
        ModelKind::QTable => layout.num_states() * layout.num_actions(),
        ModelKind::Matrix => (layout.num_states() + layout.num_actions()) * rank,
        ModelKind::Tensor => layout.all_sizes().iter().sum::<usize>() * rank,
    })
}

/// Tensor-to-matrix parameter ratio `D K' / (2 K) * C^(1 - D/2)` for `D`
/// modes of size `C`, split evenly between state and action; `K` is the
/// matrix rank and `K'` the tensor rank.
pub fn parameter_ratio(d: usize, c: usize, k: usize, k_prime: usize) -> Result<f64> {
    if d < 2 || d % 2 != 0 {
        return Err(invalid(format!("mode count {d} must be even and at least 2")));
    }
    if c == 0 || k == 0 || k_prime == 0 {
        return Err(invalid("sizes and ranks must be positive"));
    }
    Ok(d as f64 * k_prime as f64 / (2.0 * k as f64) * (c as f64).powf(1.0 - d as f64 / 2.0))
}

/// `(stored values, reconstructed entries)` changed by one update:
/// `D K` and `sum_d prod_{i != d} C_i` over the model's modes.
pub fn entries_touched(kind: ModelKind, state_sizes: &[usize], action_sizes: &[usize], rank: usize) -> Result<(usize, usize)> {
    let layout = Layout::new(state_sizes.to_vec(), action_sizes.to_vec())?;
    let modes = match kind {
        ModelKind::QTable => return Ok((1, 1)),
        ModelKind::Matrix => vec![layout.num_states(), layout.num_actions()],
        ModelKind::Tensor => layout.all_sizes(),
    };
    let recon = (0..modes.len())
        .map(|d| modes.iter().enumerate().filter(|&(i, _)| i != d).map(|(_, &c)| c).product::<usize>())
        .sum();
    Ok((modes.len() * rank, recon))
}
