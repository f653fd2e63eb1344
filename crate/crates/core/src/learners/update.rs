use crate::error::{Error, Result};

/// Factor entries beyond this magnitude count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// `r + gamma * next_best`, or `r` alone on terminal transitions.
pub fn td_target(reward: f64, next_best_value: Option<f64>, discount: f64) -> f64 {
    match next_best_value {
        Some(v) => reward + discount * v,
        None => reward,
    }
}

/// Applies `row += alpha * u` with `u = delta * grad - eta * row`.
///
/// With `rescale`, `u` is first divided by `max(1, |u|)`. Both low-rank
/// learners route every factor step through here so their arithmetic is
/// identical.
pub(crate) fn apply_row_update(
    row: &mut [f64],
    grad: &[f64],
    delta: f64,
    alpha: f64,
    eta: f64,
    rescale: bool,
    factor: impl FnOnce() -> String,
) -> Result<()> {
    debug_assert_eq!(row.len(), grad.len());
    let mut u: Vec<f64> = row.iter().zip(grad).map(|(&x, &g)| delta * g - eta * x).collect();
    if rescale {
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1.0 {
            u.iter_mut().for_each(|v| *v /= norm);
        }
    }
    for (x, v) in row.iter_mut().zip(&u) {
        *x += alpha * v;
    }
    check_entries(row, factor)
}

pub(crate) fn check_entries(values: &[f64], factor: impl FnOnce() -> String) -> Result<()> {
    if let Some(bad) = values.iter().find(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
        return Err(Error::Divergence {
            factor: factor(),
            detail: format!("entry {bad:e}; step size is likely too large"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_cases() {
        assert_eq!(td_target(3.0, Some(100.0), 0.0), 3.0);
        assert_eq!(td_target(3.0, None, 0.9), 3.0);
        assert_eq!(td_target(1.0, Some(10.0), 0.9), 10.0);
    }

    #[test]
    fn rescaled_step_is_bounded() {
        let mut row = vec![0.0, 0.0];
        apply_row_update(&mut row, &[3.0, 4.0], 10.0, 0.5, 0.0, true, String::new).unwrap();
        let norm = (row[0] * row[0] + row[1] * row[1]).sqrt();
        assert!((norm - 0.5).abs() < 1e-15);
        assert!((row[0] - 0.3).abs() < 1e-15);

        // below unit norm the step is untouched
        let mut row = vec![0.0];
        apply_row_update(&mut row, &[0.5], 1.0, 0.1, 0.0, true, String::new).unwrap();
        assert!((row[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn divergence_names_the_factor() {
        let mut row = vec![1.0];
        let err = apply_row_update(&mut row, &[1.0], 1e13, 1.0, 0.0, false, || "mode 2".into())
            .unwrap_err();
        match err {
            Error::Divergence { factor, .. } => assert_eq!(factor, "mode 2"),
            other => panic!("unexpected {other}"),
        }
        let mut row = vec![1.0];
        assert!(apply_row_update(&mut row, &[f64::INFINITY], 1.0, 1.0, 0.0, false, String::new).is_err());
    }
}
