//! Dense symmetric eigenvalue problems.
//!
//! Large Gram matrices go through nalgebra's tridiagonal QR solver. The
//! generic cyclic Jacobi routine below works for any `Float`, which lets the
//! moment code run tiny eigenproblems in double-double precision.

use nalgebra::DMatrix;
use crate::precision::Scalar;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues of a symmetric matrix, sorted non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSpectrum {
    eigenvalues: Vec<f64>,
}

impl SymmetricSpectrum {
    /// Wraps values in any order; they are sorted descending.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("spectrum must be non-empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite eigenvalue".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(SymmetricSpectrum { eigenvalues: values })
    }

    pub fn values(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `σ_j` with 1-based `j`.
    pub fn sigma(&self, j: usize) -> f64 {
        self.eigenvalues[j - 1]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// `Σ σ_j^r`.
    pub fn power_sum(&self, r: u32) -> f64 {
        self.eigenvalues.iter().map(|v| v.powi(r as i32)).sum()
    }

    /// Index-wise mean of equally sized spectra, accumulated in input order.
    pub fn mean(spectra: &[SymmetricSpectrum]) -> Result<Self> {
        let first = spectra.first().ok_or_else(|| Error::input("no spectra to average"))?;
        let size = first.size();
        let mut acc = vec![0.0; size];
        for s in spectra {
            if s.size() != size {
                return Err(Error::input("cannot average spectra of different sizes"));
            }
            for (a, v) in acc.iter_mut().zip(s.values()) {
                *a += v;
            }
        }
        let m = spectra.len() as f64;
        Ok(SymmetricSpectrum { eigenvalues: acc.into_iter().map(|a| a / m).collect() })
    }

    /// True when `min ≥ −tol_rel · max(|max|, 1)`.
    pub fn is_psd_within(&self, tol_rel: f64) -> bool {
        self.min() >= -tol_rel * self.max().abs().max(f64::MIN_POSITIVE)
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::input(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Err(Error::input("matrix is empty"));
    }
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::input(format!(
                    "matrix is not symmetric at ({i},{j}): {a} vs {b}"
                )));
            }
        }
    }
    Ok(())
}

/// All eigenvalues of a symmetric matrix, descending.
pub fn eigenvalues_sym(m: &DMatrix<f64>) -> Result<SymmetricSpectrum> {
    check_symmetric(m)?;
    let values = m.clone().symmetric_eigenvalues();
    SymmetricSpectrum::from_values(values.iter().copied().collect())
}

/// Eigenvalues (descending) and the matching unit eigenvectors as columns.
pub fn eigen_sym(m: &DMatrix<f64>) -> Result<(SymmetricSpectrum, DMatrix<f64>)> {
    check_symmetric(m)?;
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((SymmetricSpectrum::from_values(values)?, vectors))
}

/// Cyclic Jacobi eigenvalues of a small symmetric matrix given by rows.
///
/// Returned ascending. Intended for matrices of order ≲ 20; cost per sweep
/// is O(n³).
pub fn jacobi_eigenvalues<T: Scalar>(mut a: Vec<Vec<T>>) -> Vec<T> {
    let n = a.len();
    let two = T::one() + T::one();
    let tiny = T::of(T::unit_roundoff() * T::unit_roundoff());
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag = diag + a[i][i] * a[i][i];
            for j in i + 1..n {
                off = off + a[i][j] * a[i][j];
            }
        }
        if off <= tiny * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]).quot(two * apq);
                let t = theta.signum().quot(theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one().quot((t * t + T::one()).sqrt());
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    d.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{gram_matrix, sample_uniform, KernelSpec};
    use crate::rng::{substream, Purpose};
    use approx::assert_relative_eq;
    use twofloat::TwoFloat;

    #[test]
    fn identity_and_rank_one() {
        let s = eigenvalues_sym(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(s.values().len(), 3);
        for v in s.values() {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-14);
        }
        let s = eigenvalues_sym(&DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert_relative_eq!(s.sigma(1), 2.0, epsilon = 1e-14);
        assert!(s.sigma(2).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_symmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.5, 1.0]);
        assert!(matches!(eigenvalues_sym(&m), Err(Error::Input(_))));
        assert!(eigenvalues_sym(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn gram_spectrum_trace_and_residual() {
        let k = KernelSpec::gaussian(30.0).unwrap();
        for seed in 0..5 {
            let p = sample_uniform(5, 2, &mut substream(seed, Purpose::Custom(1), 0));
            let m = gram_matrix(&k, &p);
            let trace: f64 = (0..5).map(|i| m[(i, i)]).sum();
            let (s, v) = eigen_sym(&m).unwrap();
            assert_relative_eq!(s.trace(), trace, max_relative = 1e-10);
            assert!(s.is_psd_within(1e-10));
            let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(s.values()));
            let resid = (&m * &v - &v * lambda).norm();
            assert!(resid <= 1e-8 * m.norm(), "residual {resid}");
        }
    }

    #[test]
    fn jacobi_matches_qr_solver() {
        let k = KernelSpec::cauchy(10.0).unwrap();
        let p = sample_uniform(7, 3, &mut substream(11, Purpose::Custom(1), 0));
        let m = gram_matrix(&k, &p);
        let rows: Vec<Vec<f64>> = (0..7).map(|i| m.row(i).iter().copied().collect()).collect();
        let mut jac = jacobi_eigenvalues(rows);
        jac.reverse();
        let qr = eigenvalues_sym(&m).unwrap();
        for (a, b) in jac.iter().zip(qr.values()) {
            assert!((a - b).abs() < 1e-12 * qr.max());
        }
    }

    #[test]
    fn jacobi_in_double_double() {
        let rows = vec![
            vec![TwoFloat::from(2.0), TwoFloat::from(1.0)],
            vec![TwoFloat::from(1.0), TwoFloat::from(2.0)],
        ];
        let ev = jacobi_eigenvalues(rows);
        assert!((ev[0] - 1.0).abs() < 1e-28);
        assert!((ev[1] - 3.0).abs() < 1e-28);
    }

    #[test]
    fn mean_of_spectra() {
        let a = SymmetricSpectrum::from_values(vec![1.0, 3.0]).unwrap();
        let b = SymmetricSpectrum::from_values(vec![5.0, 1.0]).unwrap();
        let m = SymmetricSpectrum::mean(&[a, b]).unwrap();
        assert_eq!(m.values(), &[4.0, 1.0]);
    }
}
