//! Dense tensors, Khatri-Rao products and mode-d matricization.
//!
//! Layout conventions used throughout the crate:
//!
//! * tensors are linearized row-major (last index fastest);
//! * in `A ⊙ B` row `i * B.rows + j` holds `A[i, k] * B[j, k]`, so the first
//!   operand varies slowest;
//! * `matricize(t, d)` has one column per index of mode `d` and one row per
//!   multi-index over the remaining modes, linearized row-major in mode order.
//!
//! With these choices `matricize(reconstruct(F), d)` equals
//! `khatri_rao_all(F_i, i != d) * F_d^T` exactly.

use super::DenseMatrix;
use crate::error::{invalid, shape, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(invalid(format!("tensor dims must be positive, got {dims:?}")));
        }
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(shape(format!(
                "{} values for tensor of dims {dims:?} ({expected} entries)",
                data.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for_each_index(dims, |idx| data.push(f(idx)));
        Self {
            dims: dims.to_vec(),
            data,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        flat_index(&self.dims, index)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Views a two-mode tensor as a matrix (same storage order).
    pub fn to_matrix(&self) -> Result<DenseMatrix> {
        if self.dims.len() != 2 {
            return Err(shape(format!("tensor of order {} is not a matrix", self.dims.len())));
        }
        DenseMatrix::from_vec(self.dims[0], self.dims[1], self.data.clone())
    }
}

/// Row-major (mixed-radix, last index fastest) linearization.
pub fn flat_index(dims: &[usize], index: &[usize]) -> usize {
    debug_assert_eq!(dims.len(), index.len());
    index
        .iter()
        .zip(dims)
        .fold(0, |acc, (&i, &c)| {
            debug_assert!(i < c);
            acc * c + i
        })
}

/// Inverse of [`flat_index`].
pub fn unflatten_index(dims: &[usize], mut flat: usize, out: &mut [usize]) {
    for (slot, &c) in out.iter_mut().zip(dims).rev() {
        *slot = flat % c;
        flat /= c;
    }
}

/// Visits every multi-index of `dims` in row-major order.
pub fn for_each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; dims.len()];
    loop {
        f(&idx);
        // odometer increment, last digit fastest
        let mut d = dims.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < dims[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Column-wise Kronecker product.
pub fn khatri_rao(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() != b.cols() {
        return Err(shape(format!(
            "khatri-rao needs equal column counts, got {} and {}",
            a.cols(),
            b.cols()
        )));
    }
    let k = a.cols();
    let mut out = DenseMatrix::zeros(a.rows() * b.rows(), k);
    for i in 0..a.rows() {
        let a_row = a.row(i);
        for j in 0..b.rows() {
            let b_row = b.row(j);
            let out_row = out.row_mut(i * b.rows() + j);
            for c in 0..k {
                out_row[c] = a_row[c] * b_row[c];
            }
        }
    }
    Ok(out)
}

/// Left-associative reduction `m_0 ⊙ m_1 ⊙ ... ⊙ m_n`.
pub fn khatri_rao_all(mats: &[&DenseMatrix]) -> Result<DenseMatrix> {
    let (first, rest) = mats
        .split_first()
        .ok_or_else(|| invalid("khatri-rao of an empty list"))?;
    rest.iter()
        .try_fold((*first).clone(), |acc, m| khatri_rao(&acc, m))
}

/// Mode-`mode` unfolding (0-based mode).
pub fn matricize(t: &DenseTensor, mode: usize) -> Result<DenseMatrix> {
    let dims = t.dims();
    if mode >= dims.len() {
        return Err(invalid(format!(
            "mode {mode} out of range for tensor of order {}",
            dims.len()
        )));
    }
    let others: Vec<usize> = remaining_dims(dims, mode);
    let rows: usize = others.iter().product();
    let mut out = DenseMatrix::zeros(rows, dims[mode]);
    let mut rest = vec![0usize; others.len()];
    let mut pos = 0;
    for_each_index(dims, |idx| {
        fill_remaining(idx, mode, &mut rest);
        out[(flat_index(&others, &rest), idx[mode])] = t.as_slice()[pos];
        pos += 1;
    });
    Ok(out)
}

/// Inverse of [`matricize`].
pub fn unmatricize(m: &DenseMatrix, dims: &[usize], mode: usize) -> Result<DenseTensor> {
    if mode >= dims.len() {
        return Err(invalid(format!(
            "mode {mode} out of range for tensor of order {}",
            dims.len()
        )));
    }
    let others = remaining_dims(dims, mode);
    let rows: usize = others.iter().product();
    if m.shape() != (rows, dims[mode]) {
        return Err(shape(format!(
            "matrix {}x{} does not unfold dims {dims:?} along mode {mode}",
            m.rows(),
            m.cols()
        )));
    }
    let mut rest = vec![0usize; others.len()];
    Ok(DenseTensor::from_fn(dims, |idx| {
        fill_remaining(idx, mode, &mut rest);
        m[(flat_index(&others, &rest), idx[mode])]
    }))
}

fn remaining_dims(dims: &[usize], mode: usize) -> Vec<usize> {
    dims.iter()
        .enumerate()
        .filter(|&(i, _)| i != mode)
        .map(|(_, &c)| c)
        .collect()
}

fn fill_remaining(idx: &[usize], mode: usize, rest: &mut [usize]) {
    let mut j = 0;
    for (i, &v) in idx.iter().enumerate() {
        if i != mode {
            rest[j] = v;
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn khatri_rao_identity_selector() {
        let a = DenseMatrix::identity(2);
        let b = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let kr = khatri_rao(&a, &b).unwrap();
        assert_eq!(kr.shape(), (6, 2));
        assert_eq!(kr.column(0), vec![1.0, 3.0, 5.0, 0.0, 0.0, 0.0]);
        assert_eq!(kr.column(1), vec![0.0, 0.0, 0.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn khatri_rao_rejects_mismatch() {
        let a = DenseMatrix::zeros(2, 2);
        let b = DenseMatrix::zeros(2, 3);
        assert!(khatri_rao(&a, &b).is_err());
        assert!(khatri_rao_all(&[]).is_err());
    }

    #[test]
    fn flat_index_roundtrip() {
        let dims = [3, 4, 2];
        let mut out = [0; 3];
        for flat in 0..24 {
            unflatten_index(&dims, flat, &mut out);
            assert_eq!(flat_index(&dims, &out), flat);
        }
        assert_eq!(flat_index(&dims, &[1, 2, 1]), 8 + 4 + 1);
    }

    #[test]
    fn matricize_layout() {
        let t = DenseTensor::from_fn(&[2, 3, 4], |i| (100 * i[0] + 10 * i[1] + i[2]) as f64);
        let m1 = matricize(&t, 1).unwrap();
        assert_eq!(m1.shape(), (8, 3));
        // row = i0 * 4 + i2, column = i1
        assert_eq!(m1[(1 * 4 + 3, 2)], 123.0);
        for mode in 0..3 {
            let m = matricize(&t, mode).unwrap();
            assert_eq!(unmatricize(&m, t.dims(), mode).unwrap(), t);
        }
        assert!(matricize(&t, 3).is_err());
        assert!(unmatricize(&m1, &[2, 3, 5], 1).is_err());
    }

    #[test]
    fn for_each_index_counts() {
        let mut n = 0;
        for_each_index(&[2, 3, 1, 2], |_| n += 1);
        assert_eq!(n, 12);
    }
}
