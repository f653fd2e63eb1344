//! PARAFAC (CP) factor sets: reconstruction and offline ALS fitting.

use log::warn;
use nalgebra::{Cholesky, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::{for_each_index, khatri_rao_all, matricize};
use super::{nfe, svd, DenseMatrix, DenseTensor};
use crate::error::{invalid, shape, Result};

/// `D` factor matrices sharing `K` columns; the d-th is `C_d x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    factors: Vec<DenseMatrix>,
}

impl FactorSet {
    pub fn new(factors: Vec<DenseMatrix>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| invalid("factor set needs at least one factor"))?;
        let rank = first.cols();
        if rank == 0 {
            return Err(invalid("factor rank must be positive"));
        }
        for (d, f) in factors.iter().enumerate() {
            if f.cols() != rank {
                return Err(shape(format!(
                    "factor {d} has {} columns, expected {rank}",
                    f.cols()
                )));
            }
            if f.rows() == 0 {
                return Err(invalid(format!("factor {d} has no rows")));
            }
            f.ensure_finite(&format!("factor {d}"))?;
        }
        Ok(Self { factors })
    }

    /// Entries drawn uniformly from `(0, scale]`.
    pub fn random_uniform<R: Rng + ?Sized>(
        dims: &[usize],
        rank: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(invalid(format!("factor dims must be positive, got {dims:?}")));
        }
        if rank == 0 {
            return Err(invalid("factor rank must be positive"));
        }
        let factors = dims
            .iter()
            .map(|&c| DenseMatrix::from_fn(c, rank, |_, _| scale * (1.0 - rng.random::<f64>())))
            .collect();
        Self::new(factors)
    }

    pub fn rank(&self) -> usize {
        self.factors[0].cols()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(DenseMatrix::rows).collect()
    }

    pub fn factors(&self) -> &[DenseMatrix] {
        &self.factors
    }

    pub fn factor(&self, d: usize) -> &DenseMatrix {
        &self.factors[d]
    }

    pub fn factor_mut(&mut self, d: usize) -> &mut DenseMatrix {
        &mut self.factors[d]
    }

    pub fn into_factors(self) -> Vec<DenseMatrix> {
        self.factors
    }

    pub fn num_parameters(&self) -> usize {
        self.factors.iter().map(|f| f.rows() * f.cols()).sum()
    }

    /// `sum_k prod_d F_d[i_d, k]`, products taken in mode order.
    pub fn value_at(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.factors.len());
        (0..self.rank())
            .map(|k| {
                self.factors
                    .iter()
                    .zip(index)
                    .fold(1.0, |acc, (f, &i)| acc * f[(i, k)])
            })
            .sum()
    }
}

pub fn reconstruct(f: &FactorSet) -> DenseTensor {
    DenseTensor::from_fn(&f.dims(), |idx| f.value_at(idx))
}

/// Outcome of [`parafac_als`].
#[derive(Debug, Clone)]
pub struct AlsFit {
    pub factors: FactorSet,
    /// NFE of the initial guess followed by the NFE after every sweep.
    pub nfe_history: Vec<f64>,
    pub iterations: usize,
    /// Set when some normal-equation solve fell back to a pseudo-inverse.
    pub used_pseudo_inverse: bool,
}

impl AlsFit {
    pub fn final_nfe(&self) -> f64 {
        *self.nfe_history.last().expect("history is never empty")
    }
}

/// Fits a rank-`rank` PARAFAC model by alternating exact least squares over modes.
///
/// Factors start uniform in `(0, 1]` from `seed`. After each sweep the
/// extrapolation `F + k^(1/3) (F - F_prev)` replaces the sweep result only when
/// it lowers the NFE, so the error history stays non-increasing. Stops when the relative NFE
/// improvement of a sweep drops below `tol`, when the fit is exact, or after
/// `max_iters` sweeps.
pub fn parafac_als(
    t: &DenseTensor,
    rank: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<AlsFit> {
    if rank == 0 {
        return Err(invalid("ALS rank must be positive"));
    }
    if !t.as_slice().iter().all(|x| x.is_finite()) {
        return Err(crate::Error::NonFinite("ALS input tensor".into()));
    }
    let dims = t.dims().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors = FactorSet::random_uniform(&dims, rank, 1.0, &mut rng)?;
    let unfoldings: Vec<DenseMatrix> = (0..dims.len())
        .map(|d| matricize(t, d))
        .collect::<Result<_>>()?;

    let mut history = vec![nfe(t, &reconstruct(&factors))?];
    let mut used_pseudo_inverse = false;
    let mut iterations = 0;

    while iterations < max_iters {
        let before = factors.clone();
        for d in 0..dims.len() {
            let (updated, pinv) = solve_mode(&factors, &unfoldings[d], d)?;
            used_pseudo_inverse |= pinv;
            *factors.factor_mut(d) = updated;
        }
        iterations += 1;
        let prev = *history.last().unwrap();
        let mut cur = nfe(t, &reconstruct(&factors))?;
        if let Some(jump) = extrapolate(&before, &factors, (iterations as f64).cbrt()) {
            let jumped = nfe(t, &reconstruct(&jump))?;
            if jumped < cur {
                factors = jump;
                cur = jumped;
            }
        }
        history.push(cur);
        if cur == 0.0 || prev - cur < tol * prev {
            break;
        }
    }
    if used_pseudo_inverse {
        warn!("ALS normal equations were rank deficient; used pseudo-inverse");
    }
    Ok(AlsFit {
        factors,
        nfe_history: history,
        iterations,
        used_pseudo_inverse,
    })
}

/// `after + step * (after - before)`, or `None` if any entry is non-finite.
fn extrapolate(before: &FactorSet, after: &FactorSet, step: f64) -> Option<FactorSet> {
    let factors = before
        .factors()
        .iter()
        .zip(after.factors())
        .map(|(b, a)| {
            let data = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x + step * (x - y)).collect();
            DenseMatrix::from_vec(a.rows(), a.cols(), data).expect("shapes match")
        })
        .collect();
    FactorSet::new(factors).ok()
}

/// Least-squares update of factor `d` with all other factors fixed:
/// `F_d = mat_d(X)^T KR (V)^+` where `V` is the Hadamard product of Gram matrices.
fn solve_mode(factors: &FactorSet, unfolding: &DenseMatrix, d: usize) -> Result<(DenseMatrix, bool)> {
    let rank = factors.rank();
    let others: Vec<&DenseMatrix> = factors
        .factors()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != d)
        .map(|(_, f)| f)
        .collect();

    let mut gram = DMatrix::<f64>::from_element(rank, rank, 1.0);
    for f in &others {
        let g = f.to_nalgebra();
        gram.component_mul_assign(&(g.transpose() * &g));
    }

    // rhs = KR^T mat_d(X), K x C_d
    let rhs = if others.is_empty() {
        // single-mode tensor: the model is F_0 * 1_K
        DMatrix::from_fn(rank, unfolding.cols(), |_, c| unfolding[(0, c)])
    } else {
        let kr = khatri_rao_all(&others)?;
        kr.to_nalgebra().transpose() * unfolding.to_nalgebra()
    };

    let (solution, pinv) = match Cholesky::new(gram.clone()) {
        Some(chol) if well_conditioned(&chol) => (chol.solve(&rhs), false),
        _ => (pseudo_inverse(&gram)? * rhs, true),
    };
    Ok((DenseMatrix::from_nalgebra(&solution.transpose()), pinv))
}

fn well_conditioned(chol: &Cholesky<f64, nalgebra::Dyn>) -> bool {
    let diag = chol.l_dirty().diagonal();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    // condition number of the Gram matrix is roughly (max/min)^2
    min > 0.0 && max / min < 1e7
}

fn pseudo_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dense = DenseMatrix::from_nalgebra(m);
    let d = svd(&dense)?;
    let cutoff = d.singular_values.first().copied().unwrap_or(0.0) * 1e-12 * m.nrows() as f64;
    let n = m.nrows();
    let mut out = DMatrix::<f64>::zeros(n, n);
    for (k, &s) in d.singular_values.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += d.right[(r, k)] * d.left[(c, k)] / s;
            }
        }
    }
    Ok(out)
}

/// Tensor whose every entry equals `value`, handy for degenerate cases.
pub fn constant_tensor(dims: &[usize], value: f64) -> DenseTensor {
    let mut data = Vec::new();
    for_each_index(dims, |_| data.push(value));
    DenseTensor::from_vec(dims, data).expect("dims are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unmatricize;

    #[test]
    fn outer_product_reconstruction() {
        let l = DenseMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let r = DenseMatrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let t = reconstruct(&FactorSet::new(vec![l, r]).unwrap());
        assert_eq!(t.as_slice(), &[3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn all_ones_rank_one() {
        let f = FactorSet::new(vec![
            DenseMatrix::from_vec(3, 1, vec![1.0; 3]).unwrap(),
            DenseMatrix::from_vec(2, 1, vec![1.0; 2]).unwrap(),
            DenseMatrix::from_vec(4, 1, vec![1.0; 4]).unwrap(),
        ])
        .unwrap();
        let t = reconstruct(&f);
        assert!(t.as_slice().iter().all(|&x| x == 1.0));
        for d in 0..3 {
            let m = matricize(&t, d).unwrap();
            assert!(m.as_slice().iter().all(|&x| x == 1.0));
            assert_eq!(unmatricize(&m, t.dims(), d).unwrap(), t);
        }
    }

    #[test]
    fn rejects_bad_factor_sets() {
        assert!(FactorSet::new(vec![]).is_err());
        assert!(FactorSet::new(vec![DenseMatrix::zeros(2, 2), DenseMatrix::zeros(2, 1)]).is_err());
        assert!(FactorSet::new(vec![DenseMatrix::zeros(2, 0)]).is_err());
    }

    #[test]
    fn als_fits_all_ones() {
        let t = constant_tensor(&[3, 4, 5], 1.0);
        let fit = parafac_als(&t, 1, 200, 1e-14, 9).unwrap();
        assert!(fit.final_nfe() < 1e-10, "{}", fit.final_nfe());
    }

    #[test]
    fn als_history_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = DenseTensor::from_fn(&[5, 4, 6], |_| rng.random::<f64>());
        let fit = parafac_als(&t, 3, 60, 0.0, 1).unwrap();
        for w in fit.nfe_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn als_overparameterized_stays_finite() {
        // rank 3 requested on a rank-1 tensor makes the Gram matrices singular
        let t = constant_tensor(&[2, 2, 2], 2.0);
        let fit = parafac_als(&t, 3, 50, 0.0, 3).unwrap();
        assert!(fit.final_nfe() < 1e-8);
        assert!(fit.factors.factors().iter().all(DenseMatrix::is_finite));
    }
}
