//! Orthonormal polynomials of a discrete measure, built from its moments.
//!
//! The recurrence coefficients come from the Cholesky factor of the Hankel
//! moment matrix (the Golub–Welsch relations), which is equivalent to the
//! determinant formulas but stays accurate well past the point where the
//! determinants themselves over- or underflow.

use serde::Serialize;
use twofloat::TwoFloat;

use crate::eigen::jacobi_eigenvalues;
use crate::error::{Error, Result};
use crate::moments::{MomentSequence, Normalization};
use crate::precision::Scalar;

/// `P_0..P_k` for the probability measure whose moments were supplied.
///
/// `P_0..P_{k-1}` are orthonormal. When the measure has exactly `k` atoms,
/// `D_k = 0` and `P_k` cannot be normalized, so the degree-`k` member is
/// kept in monic-scaled form `√β_k P_k`; its roots are the same either way.
#[derive(Debug, Clone)]
pub struct OrthoPolyBasis {
    degree: usize,
    alpha: Vec<TwoFloat>,
    /// `√β_1..√β_k`; the last entry is zero for a `k`-atom measure.
    beta_sqrt: Vec<TwoFloat>,
    hankel_determinants: Vec<f64>,
}

impl OrthoPolyBasis {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `(a_j, b_j)` for `j = 0..k-1` in `√b_{j+1} P_{j+1} = (x − a_j) P_j − √b_j P_{j−1}`,
    /// with `b_0 = 0`.
    pub fn recurrence_coefficients(&self) -> Vec<(f64, f64)> {
        (0..self.degree)
            .map(|j| {
                let b = if j == 0 { 0.0 } else { f64::from_dd(self.beta_sqrt[j - 1] * self.beta_sqrt[j - 1]) };
                (f64::from_dd(self.alpha[j]), b)
            })
            .collect()
    }

    /// `D_0..D_k`, the leading principal minors of the moment Hankel matrix.
    pub fn hankel_determinants(&self) -> &[f64] {
        &self.hankel_determinants
    }

    /// `P_0(x)..P_{k-1}(x)` followed by the monic-scaled `√β_k P_k(x)`.
    pub fn evaluate(&self, x: f64) -> Vec<f64> {
        self.evaluate_dd(TwoFloat::from(x)).into_iter().map(f64::from_dd).collect()
    }

    fn evaluate_dd(&self, x: TwoFloat) -> Vec<TwoFloat> {
        let k = self.degree;
        let mut p = Vec::with_capacity(k + 1);
        p.push(TwoFloat::from(1.0));
        let mut prev = TwoFloat::from(0.0);
        for j in 0..k {
            let b_prev = if j == 0 { TwoFloat::from(0.0) } else { self.beta_sqrt[j - 1] };
            let residual = (x - self.alpha[j]) * p[j] - b_prev * prev;
            prev = p[j];
            if j + 1 < k {
                p.push(residual.quot(self.beta_sqrt[j]));
            } else {
                p.push(residual);
            }
        }
        p
    }

    /// The degree-`k` member, in monic-scaled form.
    pub fn p_k(&self, x: f64) -> f64 {
        f64::from_dd(self.evaluate_dd(TwoFloat::from(x))[self.degree])
    }

    /// Roots of `P_k`, ascending: the eigenvalues of the `k×k` Jacobi matrix.
    pub fn roots(&self) -> Result<Vec<f64>> {
        let k = self.degree;
        let mut jm = vec![vec![TwoFloat::from(0.0); k]; k];
        for i in 0..k {
            jm[i][i] = self.alpha[i];
            if i + 1 < k {
                jm[i][i + 1] = self.beta_sqrt[i];
                jm[i + 1][i] = self.beta_sqrt[i];
            }
        }
        let roots: Vec<f64> = jacobi_eigenvalues(jm).into_iter().map(f64::from_dd).collect();
        let scale = roots.iter().fold(0.0f64, |m, r| m.max(r.abs())).max(f64::MIN_POSITIVE);
        if roots.iter().any(|r| !r.is_finite()) {
            return Err(Error::Numerical(format!("Jacobi eigenvalues not finite: {roots:?}")));
        }
        if let Some(w) = roots.windows(2).find(|w| w[1] - w[0] <= 1e-14 * scale) {
            return Err(Error::Numerical(format!(
                "P_{k} has a repeated root near {} (gap {:.3e})",
                w[0],
                w[1] - w[0]
            )));
        }
        Ok(roots)
    }
}

/// Builds `P_0..P_k` from mean-normalized moments `μ_0..μ_{2k}`.
pub fn orthopoly_from_moments(m: &MomentSequence, k: usize) -> Result<OrthoPolyBasis> {
    if k == 0 {
        return Err(Error::input("degree must be at least 1"));
    }
    if m.normalization() != Normalization::Mean {
        return Err(Error::input("orthogonal polynomials need mean-normalized moments"));
    }
    if m.len() < 2 * k + 1 {
        return Err(Error::input(format!(
            "degree {k} needs moments μ_0..μ_{}, got {}",
            2 * k,
            m.len()
        )));
    }
    // The matrices are tiny, so double-double is used at every degree: in
    // plain f64 a 7×7 Hankel factor already loses nodes to ~1e-7 when two
    // support points are close.
    build::<TwoFloat>(m, k)
}

fn build<T: Scalar>(m: &MomentSequence, k: usize) -> Result<OrthoPolyBasis> {
    let mu = m.dd();
    // Rescale x -> x / c so the Hankel entries are O(1).
    let c = mu[2].hi().sqrt();
    let c = if c > 0.0 && c.is_finite() { c } else { 1.0 };
    let tc = T::of(c);
    let mut scaled = Vec::with_capacity(2 * k + 1);
    let mut cr = T::one();
    for v in mu.iter().take(2 * k + 1) {
        scaled.push(T::from_dd(*v).quot(cr));
        cr = cr * tc;
    }
    let h = |i: usize, j: usize| scaled[i + j];

    // Upper Cholesky factor of the (k+1)×(k+1) Hankel matrix; the last
    // pivot may vanish.
    let dim = k + 1;
    let mut r = vec![vec![T::zero(); dim]; dim];
    for j in 0..dim {
        let mut d = h(j, j);
        for i in 0..j {
            d = d - r[i][j] * r[i][j];
        }
        let rel = (d.quot(h(j, j))).as_f64();
        if j < k {
            if !(rel > T::pivot_tolerance()) {
                return Err(Error::DegenerateMoments(format!(
                    "Hankel minor D_{} is not positive (relative pivot {rel:.3e}); \
                     the measure has fewer than {k} support points",
                    j
                )));
            }
        } else if rel <= T::pivot_tolerance() {
            d = T::zero();
        }
        r[j][j] = d.max(T::zero()).sqrt();
        if j < k {
            for l in j + 1..dim {
                let mut s = h(j, l);
                for i in 0..j {
                    s = s - r[i][j] * r[i][l];
                }
                r[j][l] = s.quot(r[j][j]);
            }
        }
    }

    let mut alpha = Vec::with_capacity(k);
    let mut beta_sqrt = Vec::with_capacity(k);
    for j in 0..k {
        let mut a = r[j][j + 1].quot(r[j][j]);
        if j > 0 {
            a = a - r[j - 1][j].quot(r[j - 1][j - 1]);
        }
        alpha.push((a * tc).to_dd());
        beta_sqrt.push((r[j + 1][j + 1].quot(r[j][j]) * tc).to_dd());
    }

    let mut dets = Vec::with_capacity(dim);
    let mut acc = 1.0;
    for (j, row) in r.iter().enumerate() {
        let rjj = row[j].as_f64();
        acc *= rjj * rjj * c.powi(2 * j as i32);
        dets.push(acc);
    }

    Ok(OrthoPolyBasis { degree: k, alpha, beta_sqrt, hankel_determinants: dets })
}

/// Empirical Christoffel function `1 / Σ_{i<k} P_i(x)²`.
///
/// At a root of `P_k` this is the Gauss quadrature weight of that node;
/// for a uniform `k`-point measure it is `1/k` at every atom.
pub fn christoffel(basis: &OrthoPolyBasis, x: f64) -> f64 {
    let p = basis.evaluate_dd(TwoFloat::from(x));
    let sum = p[..basis.degree].iter().fold(TwoFloat::from(0.0), |acc, v| acc + *v * *v);
    f64::from_dd(TwoFloat::from(1.0).quot(sum))
}

/// Bounds on the distribution function of any measure sharing the basis'
/// moments, evaluated at the roots of `P_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfBounds {
    pub nodes: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `λ(x_i)` at each node.
    pub weights: Vec<f64>,
}

impl CdfBounds {
    /// Per node, whether `lower_i ≤ F(x_i) ≤ upper_i` for the empirical
    /// distribution function of `samples`. `tol` absorbs rounding both in
    /// the node location and in the bound.
    pub fn sandwich_flags(&self, samples: &[f64], tol: f64) -> Vec<bool> {
        let n = samples.len() as f64;
        let scale = samples.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        self.nodes
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&x, (&lo, &hi))| {
                let f = samples.iter().filter(|&&a| a <= x + tol * scale).count() as f64 / n;
                let f_left = samples.iter().filter(|&&a| a < x - tol * scale).count() as f64 / n;
                f + tol >= lo && f_left - tol <= hi
            })
            .collect()
    }
}

/// `lower_i = 1 − Σ_{j≥i} λ(x_j)` and `upper_i = Σ_{j≤i} λ(x_j)` over the
/// ascending roots of `P_k`.
pub fn cdf_bounds(basis: &OrthoPolyBasis) -> Result<CdfBounds> {
    let nodes = basis.roots()?;
    let weights: Vec<f64> = nodes.iter().map(|&x| christoffel(basis, x)).collect();
    let k = nodes.len();
    let mut lower = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut prefix = 0.0;
    for i in 0..k {
        prefix += weights[i];
        let suffix: f64 = weights[i..].iter().sum();
        upper[i] = prefix.clamp(0.0, 1.0);
        lower[i] = (1.0 - suffix).clamp(0.0, upper[i]);
    }
    Ok(CdfBounds { nodes, lower, upper, weights })
}
