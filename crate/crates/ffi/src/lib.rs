//! C ABI over `lowrank-rl`.
//!
//! Every fallible entry point returns an [`LrlStatus`]; on failure the
//! message is available from [`lrl_last_error_message`] on the same thread.
//! Handles are opaque and owned by the caller once created; release them with
//! the matching `_free` function. Panics never cross the boundary and are
//! reported as [`LrlStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use lowrank_rl::learners::{Layout, Learner, LearnerConfig, ModelKind};
use lowrank_rl::linalg::{effective_rank, nfe_slices, singular_values, DenseMatrix};
use lowrank_rl::mdp::{build_gridworld, policy_iteration, GridLayout, GridOptions, TabularMdp};
use lowrank_rl::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Singular = 4,
    NoConvergence = 5,
    NonFinite = 6,
    Divergence = 7,
    Parse = 8,
    Config = 9,
    Io = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Tabular MDP handle.
pub struct LrlMdp {
    inner: TabularMdp,
}

/// Q-table, matrix or tensor learner handle.
pub struct LrlLearner {
    inner: Learner,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> LrlStatus {
    match e {
        Error::Shape(_) => LrlStatus::Shape,
        Error::InvalidArgument(_) => LrlStatus::InvalidArgument,
        Error::Singular => LrlStatus::Singular,
        Error::NoConvergence { .. } => LrlStatus::NoConvergence,
        Error::NonFinite(_) => LrlStatus::NonFinite,
        Error::Divergence { .. } => LrlStatus::Divergence,
        Error::Parse { .. } => LrlStatus::Parse,
        Error::Config(_) | Error::Json(_) => LrlStatus::Config,
        Error::Io(_) | Error::Csv(_) => LrlStatus::Io,
    }
}

struct Fail(LrlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn fail(status: LrlStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LrlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            LrlStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            LrlStatus::Panic
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| fail(LrlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn non_null_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| fail(LrlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(LrlStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len < need {
        return Err(fail(
            LrlStatus::BufferTooSmall,
            format!("{what} holds {len} elements, need {need}"),
        ));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(LrlStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts_mut(p, need))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(LrlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LrlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn lrl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lrl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a gridworld MDP from a text layout (`S` start, `F` free, `H` hole,
/// `G` goal; one row per line, `#` lines ignored). `slip` is the probability
/// of moving perpendicular to the intended direction.
///
/// # Safety
/// `layout` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrl_gridworld_new(
    layout: *const c_char,
    slip: f64,
    discount: f64,
    out: *mut *mut LrlMdp,
) -> LrlStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        let layout = GridLayout::parse(str_arg(layout, "layout")?)?;
        let mdp = build_gridworld(
            &layout,
            &GridOptions {
                slip,
                discount,
                ..GridOptions::default()
            },
        )?;
        *out = Box::into_raw(Box::new(LrlMdp { inner: mdp }));
        Ok(())
    })
}

/// # Safety
/// `mdp` must come from [`lrl_gridworld_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lrl_mdp_free(mdp: *mut LrlMdp) {
    if !mdp.is_null() {
        drop(Box::from_raw(mdp));
    }
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrl_mdp_dims(
    mdp: *const LrlMdp,
    num_states: *mut usize,
    num_actions: *mut usize,
) -> LrlStatus {
    guard(|| {
        let mdp = &non_null(mdp, "mdp")?.inner;
        *non_null_mut(num_states, "num_states")? = mdp.num_states();
        *non_null_mut(num_actions, "num_actions")? = mdp.num_actions();
        Ok(())
    })
}

/// Solves the MDP exactly. Writes one greedy action per state into `policy`
/// and the row-major `num_states x num_actions` optimal values into `q`.
///
/// # Safety
/// `policy` must hold `policy_len` and `q` must hold `q_len` elements.
#[no_mangle]
pub unsafe extern "C" fn lrl_mdp_policy_iteration(
    mdp: *const LrlMdp,
    policy: *mut usize,
    policy_len: usize,
    q: *mut f64,
    q_len: usize,
) -> LrlStatus {
    guard(|| {
        let mdp = &non_null(mdp, "mdp")?.inner;
        let (s, a) = (mdp.num_states(), mdp.num_actions());
        let policy = out_slice(policy, policy_len, s, "policy")?;
        let q = out_slice(q, q_len, s * a, "q")?;
        let (pi, values) = policy_iteration(mdp)?;
        policy.copy_from_slice(&pi.greedy_actions());
        q.copy_from_slice(values.as_slice());
        Ok(())
    })
}

/// Creates a learner. `kind` is `qtable`, `mlr` or `tlr`; `config_json` holds
/// learner settings (discount, step_size, epsilon, rank, frobenius_weight,
/// rescale_gradient, init_scale, init_seed, stale_target) and may be null for
/// defaults.
///
/// # Safety
/// Size arrays must hold the given counts; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lrl_learner_new(
    kind: *const c_char,
    state_sizes: *const usize,
    num_state_dims: usize,
    action_sizes: *const usize,
    num_action_dims: usize,
    config_json: *const c_char,
    out: *mut *mut LrlLearner,
) -> LrlStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        let kind = ModelKind::parse(str_arg(kind, "kind")?)?;
        let layout = Layout::new(
            in_slice(state_sizes, num_state_dims, "state_sizes")?.to_vec(),
            in_slice(action_sizes, num_action_dims, "action_sizes")?.to_vec(),
        )?;
        let config = if config_json.is_null() {
            LearnerConfig::default()
        } else {
            serde_json::from_str(str_arg(config_json, "config_json")?).map_err(Error::from)?
        };
        *out = Box::into_raw(Box::new(LrlLearner {
            inner: Learner::new(kind, layout, config)?,
        }));
        Ok(())
    })
}

/// # Safety
/// `learner` must come from [`lrl_learner_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lrl_learner_free(learner: *mut LrlLearner) {
    if !learner.is_null() {
        drop(Box::from_raw(learner));
    }
}

unsafe fn indices<'a>(learner: &Learner, state: *const usize, action: *const usize) -> Result<(&'a [usize], &'a [usize]), Fail> {
    let layout = learner.layout();
    Ok((
        in_slice(state, layout.state_sizes().len(), "state")?,
        in_slice(action, layout.action_sizes().len(), "action")?,
    ))
}

/// One TD update from `(state, action, reward, next_state)`. A null
/// `next_state` marks a terminal transition.
///
/// # Safety
/// Index arrays must hold one entry per state or action dimension.
#[no_mangle]
pub unsafe extern "C" fn lrl_learner_update(
    learner: *mut LrlLearner,
    state: *const usize,
    action: *const usize,
    reward: f64,
    next_state: *const usize,
) -> LrlStatus {
    guard(|| {
        let learner = &mut non_null_mut(learner, "learner")?.inner;
        let (s, a) = indices(learner, state, action)?;
        let next = if next_state.is_null() {
            None
        } else {
            Some(in_slice(next_state, learner.layout().state_sizes().len(), "next_state")?)
        };
        learner.update(s, a, reward, next)?;
        Ok(())
    })
}

/// # Safety
/// Index arrays must hold one entry per state or action dimension.
#[no_mangle]
pub unsafe extern "C" fn lrl_learner_value(
    learner: *const LrlLearner,
    state: *const usize,
    action: *const usize,
    out: *mut f64,
) -> LrlStatus {
    guard(|| {
        let learner = &non_null(learner, "learner")?.inner;
        let (s, a) = indices(learner, state, action)?;
        *non_null_mut(out, "out")? = learner.value(s, a)?;
        Ok(())
    })
}

/// Greedy action (lowest index among ties) and its value.
///
/// # Safety
/// `action` must hold `action_len` elements; `value` may be null.
#[no_mangle]
pub unsafe extern "C" fn lrl_learner_best_action(
    learner: *const LrlLearner,
    state: *const usize,
    action: *mut usize,
    action_len: usize,
    value: *mut f64,
) -> LrlStatus {
    guard(|| {
        let learner = &non_null(learner, "learner")?.inner;
        let s = in_slice(state, learner.layout().state_sizes().len(), "state")?;
        let out = out_slice(action, action_len, learner.layout().action_sizes().len(), "action")?;
        let (best, v) = learner.best_action(s)?;
        out.copy_from_slice(&best);
        if let Some(value) = value.as_mut() {
            *value = v;
        }
        Ok(())
    })
}

/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrl_learner_num_parameters(learner: *const LrlLearner, out: *mut usize) -> LrlStatus {
    guard(|| {
        *non_null_mut(out, "out")? = non_null(learner, "learner")?.inner.num_parameters();
        Ok(())
    })
}

/// Text serialization of the model. Release the string with
/// [`lrl_string_free`].
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrl_learner_to_text(learner: *const LrlLearner, out: *mut *mut c_char) -> LrlStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        let text = non_null(learner, "learner")?.inner.model_text();
        *out = CString::new(text)
            .map_err(|_| fail(LrlStatus::InvalidArgument, "model text contains NUL"))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lrl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Singular values of a row-major `rows x cols` matrix in descending order;
/// `out` receives `min(rows, cols)` values.
///
/// # Safety
/// `data` must hold `rows * cols` and `out` must hold `out_len` elements.
#[no_mangle]
pub unsafe extern "C" fn lrl_singular_values(
    data: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
    out_len: usize,
) -> LrlStatus {
    guard(|| {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| fail(LrlStatus::InvalidArgument, "rows * cols overflows"))?;
        let m = DenseMatrix::from_vec(rows, cols, in_slice(data, n, "data")?.to_vec())?;
        let sigma = singular_values(&m)?;
        out_slice(out, out_len, sigma.len(), "out")?.copy_from_slice(&sigma);
        Ok(())
    })
}

/// Smallest `k` whose leading `k` squared singular values hold `energy` of the
/// total.
///
/// # Safety
/// `singular_values` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn lrl_effective_rank(
    singular_values: *const f64,
    len: usize,
    energy: f64,
    out: *mut usize,
) -> LrlStatus {
    guard(|| {
        let sv = in_slice(singular_values, len, "singular_values")?;
        *non_null_mut(out, "out")? = effective_rank(sv, energy)?;
        Ok(())
    })
}

/// Normalized Frobenius error `||x - x_hat|| / ||x||`.
///
/// # Safety
/// Both arrays must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn lrl_nfe(x: *const f64, x_hat: *const f64, len: usize, out: *mut f64) -> LrlStatus {
    guard(|| {
        let v = nfe_slices(in_slice(x, len, "x")?, in_slice(x_hat, len, "x_hat")?)?;
        *non_null_mut(out, "out")? = v;
        Ok(())
    })
}
