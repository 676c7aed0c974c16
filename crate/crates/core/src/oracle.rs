//! Reference spectra: full Gram eigendecompositions and the naive Nyström
//! approximation they are compared against.

use nalgebra::DMatrix;
use rand::seq::index;
use serde::Serialize;

use crate::eigen::{eigen_sym, eigenvalues_sym, SymmetricSpectrum};
use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, kernel_eval, sample_uniform, KernelSpec, PointSet};
use crate::rng::{substream, Purpose};

/// Largest `n` the oracle accepts without an explicit override.
pub const ORACLE_MAX_N: usize = 5000;

/// Relative eigenvalue cutoff of the pseudoinverse `W⁺`.
pub const PINV_TOLERANCE: f64 = 1e-12;

/// Mean over `trials` of the sorted spectra of `κ(X, X)` for fresh
/// uniform `X`. Trial `t` draws its points from the `(seed, Oracle, t)`
/// stream.
pub fn full_spectrum_oracle(
    n: usize,
    d: usize,
    kernel: &KernelSpec,
    trials: usize,
    seed: u64,
    allow_large: bool,
) -> Result<SymmetricSpectrum> {
    if n == 0 || d == 0 || trials == 0 {
        return Err(Error::input("oracle needs positive n, d and trial count"));
    }
    if n > ORACLE_MAX_N && !allow_large {
        return Err(Error::Guard(format!(
            "full spectrum of an {n}×{n} matrix exceeds the n <= {ORACLE_MAX_N} guard; pass the override to run it anyway"
        )));
    }
    let spectra = (0..trials as u64)
        .map(|t| {
            let x = sample_uniform(n, d, &mut substream(seed, Purpose::Oracle, t));
            eigenvalues_sym(&gram_matrix(kernel, &x))
        })
        .collect::<Result<Vec<_>>>()?;
    SymmetricSpectrum::mean(&spectra)
}

/// Spectrum of `C W⁺ Cᵀ` for a uniformly random subset of `subset_size`
/// columns, padded with zeros to length `n`.
///
/// The nonzero eigenvalues are those of `Fᵀ F` with `F = C V Λ^{-1/2}`,
/// so only an `r×r` eigenproblem is solved.
pub fn nystrom_baseline(x: &PointSet, kernel: &KernelSpec, subset_size: usize, seed: u64) -> Result<SymmetricSpectrum> {
    let n = x.len();
    if subset_size == 0 || subset_size > n {
        return Err(Error::input(format!("subset size must be in 1..={n}, got {subset_size}")));
    }
    let mut cols = index::sample(&mut substream(seed, Purpose::Nystrom, 0), n, subset_size).into_vec();
    cols.sort_unstable();
    nystrom_with_columns(x, kernel, &cols)
}

pub fn nystrom_with_columns(x: &PointSet, kernel: &KernelSpec, cols: &[usize]) -> Result<SymmetricSpectrum> {
    let n = x.len();
    let s = cols.len();
    let mut c = DMatrix::zeros(n, s);
    for i in 0..n {
        for (j, &col) in cols.iter().enumerate() {
            c[(i, j)] = kernel_eval(kernel, x.point(i), x.point(col))?;
        }
    }
    let w = DMatrix::from_fn(s, s, |i, j| c[(cols[i], j)]);
    let (lam, v) = eigen_sym(&w)?;
    let cutoff = PINV_TOLERANCE * lam.max().abs();
    let keep: Vec<usize> = (0..s).filter(|&i| lam.values()[i] > cutoff).collect();
    let mut values = vec![0.0; n];
    if !keep.is_empty() {
        let mut basis = DMatrix::zeros(s, keep.len());
        for (out, &i) in keep.iter().enumerate() {
            let scale = 1.0 / lam.values()[i].sqrt();
            for r in 0..s {
                basis[(r, out)] = v[(r, i)] * scale;
            }
        }
        let f = &c * basis;
        let small = f.transpose() * &f;
        let small = (&small + small.transpose()) * 0.5;
        let e = eigenvalues_sym(&small)?;
        values[..e.size()].copy_from_slice(e.values());
    }
    SymmetricSpectrum::from_values(values)
}

/// Mean `|ln((ñ_j + f) / (σ_j + f))|` over the first `count` eigenvalues,
/// negative values clipped to zero and `f = 1e-12·σ_1` as a floor.
/// Zero means a perfect fit.
pub fn spectrum_fit_metric(exact: &SymmetricSpectrum, approx: &SymmetricSpectrum, count: usize) -> f64 {
    let m = count.min(exact.size()).min(approx.size());
    let floor = 1e-12 * exact.max().abs().max(f64::MIN_POSITIVE);
    (1..=m)
        .map(|j| ((approx.sigma(j).max(0.0) + floor) / (exact.sigma(j).max(0.0) + floor)).ln().abs())
        .sum::<f64>()
        / m as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NystromRun {
    pub lambda: f64,
    pub subset: usize,
    pub fit_metric: f64,
    pub exact: Vec<f64>,
    pub nystrom: Vec<f64>,
}
