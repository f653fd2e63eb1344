//! Dense matrix and tensor kernels.

mod matrix;
mod parafac;
mod svd;
mod tensor;
pub mod text;

pub use matrix::DenseMatrix;
pub use parafac::{constant_tensor, parafac_als, reconstruct, AlsFit, FactorSet};
pub use svd::{singular_values, svd, tsvd, SvdResult};
pub use tensor::{
    flat_index, for_each_index, khatri_rao, khatri_rao_all, matricize, unflatten_index,
    unmatricize, DenseTensor,
};

use crate::error::{invalid, shape, Result};

/// Normalized Frobenius error `||x - x_hat|| / ||x||`.
pub fn nfe(x: &DenseTensor, x_hat: &DenseTensor) -> Result<f64> {
    if x.dims() != x_hat.dims() {
        return Err(shape(format!(
            "nfe dims differ: {:?} vs {:?}",
            x.dims(),
            x_hat.dims()
        )));
    }
    nfe_slices(x.as_slice(), x_hat.as_slice())
}

pub fn nfe_slices(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(shape(format!("nfe lengths differ: {} vs {}", x.len(), x_hat.len())));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(invalid("nfe reference has zero norm"));
    }
    let diff = x
        .iter()
        .zip(x_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

/// Smallest `k` whose leading singular values hold `energy` of the total
/// squared Frobenius mass. Returns 0 for an all-zero spectrum.
pub fn effective_rank(singular_values: &[f64], energy: f64) -> Result<usize> {
    if singular_values.is_empty() {
        return Err(invalid("effective rank of an empty spectrum"));
    }
    if !(energy > 0.0 && energy <= 1.0) {
        return Err(invalid(format!("energy fraction {energy} outside (0, 1]")));
    }
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Ok(0);
    }
    let target = energy * total;
    let mut acc = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        acc += s * s;
        if acc >= target {
            return Ok(i + 1);
        }
    }
    // rounding can leave the running sum a hair below energy == 1.0
    Ok(singular_values.len())
}

/// Cumulative energy fractions `sum_{i<=k} s_i^2 / sum s_i^2`.
pub fn cumulative_energy(singular_values: &[f64]) -> Vec<f64> {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let mut acc = 0.0;
    singular_values
        .iter()
        .map(|s| {
            acc += s * s;
            if total > 0.0 {
                acc / total
            } else {
                0.0
            }
        })
        .collect()
}
