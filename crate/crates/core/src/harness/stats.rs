use serde::Serialize;

use crate::error::{invalid, Result};

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Middle order statistic, or the mean of the two middle ones.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let v = sorted(xs);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Linear-interpolation quantile between order statistics at `(n - 1) p`.
pub fn quantile(xs: &[f64], p: f64) -> Option<f64> {
    if xs.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let v = sorted(xs);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

pub fn quartiles(xs: &[f64]) -> Option<Quartiles> {
    Some(Quartiles {
        q25: quantile(xs, 0.25)?,
        median: median(xs)?,
        q75: quantile(xs, 0.75)?,
    })
}

/// Quartiles at each position across equally long series.
pub fn pointwise_quartiles(series: &[&[f64]]) -> Vec<Quartiles> {
    let len = series.iter().map(|s| s.len()).min().unwrap_or(0);
    (0..len)
        .filter_map(|i| quartiles(&series.iter().map(|s| s[i]).collect::<Vec<_>>()))
        .collect()
}

/// Normalized cumulative reward error `(r - r_hat) / r`; positive when the
/// approximation underperforms.
pub fn ncre(reference: f64, approx: f64) -> Result<f64> {
    if reference == 0.0 || !reference.is_finite() || !approx.is_finite() {
        return Err(invalid(format!("NCRE needs a finite non-zero reference, got {reference}")));
    }
    Ok((reference - approx) / reference)
}

/// First `x` whose value reaches `fraction` of the final value, on a curve
/// of `(x, value)` points.
pub fn first_reaching(curve: &[(usize, f64)], fraction: f64) -> Option<usize> {
    let last = curve.last()?.1;
    let threshold = fraction * last;
    curve.iter().find(|&&(_, v)| v >= threshold).map(|&(x, _)| x)
}
