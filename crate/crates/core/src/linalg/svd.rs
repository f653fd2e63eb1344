use nalgebra::SVD;

use super::DenseMatrix;
use crate::error::{invalid, Error, Result};

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_SWEEPS: usize = 10_000;

/// Thin singular value decomposition `m = U diag(sigma) V^T`.
///
/// `left` is `rows x r` and `right` is `cols x r` with `r = min(rows, cols)`;
/// singular values are sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    pub left: DenseMatrix,
    pub right: DenseMatrix,
}

impl SvdResult {
    /// Sum of the leading `k` rank-one terms `sigma_i u_i v_i^T`.
    pub fn truncated(&self, k: usize) -> DenseMatrix {
        let rows = self.left.rows();
        let cols = self.right.rows();
        let mut out = DenseMatrix::zeros(rows, cols);
        for i in 0..k.min(self.singular_values.len()) {
            let sigma = self.singular_values[i];
            if sigma == 0.0 {
                continue;
            }
            for r in 0..rows {
                let scaled = sigma * self.left[(r, i)];
                let out_row = out.row_mut(r);
                for (c, o) in out_row.iter_mut().enumerate() {
                    *o += scaled * self.right[(c, i)];
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.truncated(self.singular_values.len())
    }

    /// Frobenius norm of the tail discarded by a rank-`k` truncation.
    pub fn tail_energy(&self, k: usize) -> f64 {
        self.singular_values
            .iter()
            .skip(k)
            .map(|s| s * s)
            .sum::<f64>()
            .sqrt()
    }
}

pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    m.ensure_finite("svd input")?;
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r == 0 {
        return Ok(SvdResult {
            singular_values: Vec::new(),
            left: DenseMatrix::zeros(rows, 0),
            right: DenseMatrix::zeros(cols, 0),
        });
    }

    let decomposition = SVD::try_new(m.to_nalgebra(), true, true, SVD_EPS, SVD_MAX_SWEEPS)
        .ok_or(Error::NoConvergence {
            what: "svd",
            iters: SVD_MAX_SWEEPS,
        })?;
    let u = decomposition.u.expect("requested U");
    let v_t = decomposition.v_t.expect("requested V^T");
    let sigma = decomposition.singular_values;

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));

    let singular_values = order.iter().map(|&i| sigma[i].max(0.0)).collect();
    let left = DenseMatrix::from_fn(rows, r, |row, j| u[(row, order[j])]);
    let right = DenseMatrix::from_fn(cols, r, |col, j| v_t[(order[j], col)]);
    Ok(SvdResult {
        singular_values,
        left,
        right,
    })
}

/// Best rank-`k` approximation in Frobenius norm.
pub fn tsvd(m: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    let max_rank = m.rows().min(m.cols());
    if k == 0 || k > max_rank {
        return Err(invalid(format!(
            "truncation rank {k} outside 1..={max_rank}"
        )));
    }
    Ok(svd(m)?.truncated(k))
}

pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.singular_values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_and_diagonal() {
        let s = singular_values(&DenseMatrix::identity(3)).unwrap();
        for v in s {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let s = singular_values(&DenseMatrix::from_diagonal(&[3.0, 2.0, 1.0])).unwrap();
        for (v, e) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((v - e).abs() < 1e-14);
        }
        let s = singular_values(&DenseMatrix::from_diagonal(&[1.0, 3.0, 2.0])).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-14 && (s[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        for (rows, cols) in [(20, 30), (30, 20), (7, 7), (1, 5)] {
            let m = random_matrix(rows, cols, 42);
            let d = svd(&m).unwrap();
            let rel = {
                let rec = d.reconstruct();
                let diff: f64 = m
                    .as_slice()
                    .iter()
                    .zip(rec.as_slice())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                diff / m.frobenius_norm()
            };
            assert!(rel < 1e-8, "{rows}x{cols}: {rel}");
            let r = rows.min(cols);
            let utu = d.left.transpose().matmul(&d.left).unwrap();
            let vtv = d.right.transpose().matmul(&d.right).unwrap();
            assert!(max_abs_diff(&utu, &DenseMatrix::identity(r)) < 1e-10);
            assert!(max_abs_diff(&vtv, &DenseMatrix::identity(r)) < 1e-10);
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn tsvd_cases() {
        let outer = DenseMatrix::from_fn(4, 3, |r, c| (r as f64 + 1.0) * (c as f64 - 0.5));
        let approx = tsvd(&outer, 1).unwrap();
        assert!(max_abs_diff(&outer, &approx) < 1e-10);

        let m = random_matrix(5, 4, 3);
        assert!(max_abs_diff(&m, &tsvd(&m, 4).unwrap()) < 1e-8);

        let diag = DenseMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        let t = tsvd(&diag, 2).unwrap();
        let err = DenseMatrix::from_fn(3, 3, |r, c| diag[(r, c)] - t[(r, c)]).frobenius_norm();
        assert!((err - 1.0).abs() < 1e-12);

        assert!(tsvd(&diag, 0).is_err());
        assert!(tsvd(&diag, 4).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = DenseMatrix::identity(2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&m), Err(Error::NonFinite(_))));
    }
}
