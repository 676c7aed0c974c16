//! The scaling distribution Ξ: a discrete law on `z > 0` whose moments are
//! `μ_l = (k/n)·C(n, l+1)/C(k, l+1)` for `l = 0..k-1`.
//!
//! Everything up to the Jacobi matrix is exact rational arithmetic. The
//! atoms are then found in double-double and the weights follow from the
//! Christoffel function of the recurrence.

use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::eigen::jacobi_eigenvalues;
use crate::error::{Error, Result};
use crate::precision::{rational_to_dd, Scalar};

/// Default relative slack on the closing pseudo-moment.
pub const DEFAULT_SLACK: f64 = 0.1;

/// Moment residual every solver output must meet.
pub const MOMENT_TOLERANCE: f64 = 1e-8;

/// Exact moments `μ_0..μ_{k-1}` of the scaling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct XiMoments {
    pub k: usize,
    pub n: usize,
    mu: Vec<BigRational>,
}

fn binomial(n: usize, r: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

impl XiMoments {
    pub fn exact(&self) -> &[BigRational] {
        &self.mu
    }

    pub fn get(&self, l: usize) -> f64 {
        self.mu[l].to_f64().unwrap_or(f64::NAN)
    }

    pub fn dd(&self, l: usize) -> TwoFloat {
        rational_to_dd(&self.mu[l])
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

fn check_kn(k: usize, n: usize) -> Result<()> {
    if k.is_multiple_of(2) {
        return Err(Error::UnsupportedParity { k });
    }
    if k < 3 {
        return Err(Error::input(format!("the scaling distribution needs k >= 3, got {k}")));
    }
    if n == 0 || !n.is_multiple_of(k) {
        return Err(Error::input(format!("k = {k} must divide n = {n}")));
    }
    Ok(())
}

pub fn xi_moments(k: usize, n: usize) -> Result<XiMoments> {
    check_kn(k, n)?;
    let ratio = BigRational::new(BigInt::from(k), BigInt::from(n));
    let mu = (0..k)
        .map(|l| &ratio * BigRational::new(binomial(n, l + 1), binomial(k, l + 1)))
        .collect();
    Ok(XiMoments { k, n, mu })
}

/// `H[i][j] = μ_{i+j}` (order `(k+1)/2`) and the shifted
/// `H′[i][j] = μ_{i+j+1}` (order `(k-1)/2`).
#[derive(Debug, Clone, PartialEq)]
pub struct HankelPair {
    pub h: Vec<Vec<BigRational>>,
    pub h_prime: Vec<Vec<BigRational>>,
}

impl HankelPair {
    /// From an odd-length moment sequence `μ_0..μ_{2p-2}`.
    pub fn from_moments(mu: &[BigRational]) -> Result<Self> {
        if mu.len().is_multiple_of(2) || mu.len() < 3 {
            return Err(Error::input(format!(
                "need an odd number (>= 3) of moments, got {}",
                mu.len()
            )));
        }
        let p = mu.len().div_ceil(2);
        let h = (0..p).map(|i| (0..p).map(|j| mu[i + j].clone()).collect()).collect();
        let h_prime = (0..p - 1).map(|i| (0..p - 1).map(|j| mu[i + j + 1].clone()).collect()).collect();
        Ok(HankelPair { h, h_prime })
    }

    pub fn to_f64(m: &[Vec<BigRational>]) -> Vec<Vec<f64>> {
        m.iter().map(|r| r.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()).collect()
    }
}

pub fn hankel_matrices(m: &XiMoments) -> HankelPair {
    HankelPair::from_moments(&m.mu).expect("valid XiMoments have odd length >= 3")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StieltjesCheck {
    pub solvable: bool,
    /// Smallest exact `LDLᵀ` pivot of `H` and `H′`.
    pub h_min_pivot: f64,
    pub h_prime_min_pivot: f64,
    /// Smallest eigenvalue of the unit-diagonal rescaling `D^{-1/2} M D^{-1/2}`,
    /// computed in double-double. Rescaling keeps the sign and makes the
    /// value comparable across very different moment magnitudes.
    pub h_min_eigenvalue: f64,
    pub h_prime_min_eigenvalue: f64,
}

/// Exact `LDLᵀ` pivots; all positive iff `m` is positive definite.
fn ldl_pivots(m: &[Vec<BigRational>]) -> Vec<BigRational> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut pivots = Vec::with_capacity(n);
    for j in 0..n {
        let d = a[j][j].clone();
        pivots.push(d.clone());
        if d.is_zero() {
            // Not PD; keep the remaining pivots meaningless but defined.
            pivots.extend(std::iter::repeat_n(BigRational::zero(), n - j - 1));
            break;
        }
        for r in j + 1..n {
            let f = &a[r][j] / &d;
            for c in j + 1..n {
                let t = &f * &a[j][c];
                a[r][c] -= t;
            }
        }
    }
    pivots
}

fn scaled_min_eigenvalue(m: &[Vec<BigRational>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let d: Vec<TwoFloat> = (0..n).map(|i| rational_to_dd(&m[i][i].abs()).sqrt()).collect();
    let rows: Vec<Vec<TwoFloat>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let denom = d[i] * d[j];
                    if denom.hi() == 0.0 {
                        rational_to_dd(&m[i][j])
                    } else {
                        rational_to_dd(&m[i][j]).quot(denom)
                    }
                })
                .collect()
        })
        .collect();
    f64::from_dd(jacobi_eigenvalues(rows)[0])
}

fn min_f64(v: &[BigRational]) -> f64 {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).fold(f64::INFINITY, f64::min)
}

pub fn check_stieltjes_solvable(pair: &HankelPair) -> StieltjesCheck {
    let ph = ldl_pivots(&pair.h);
    let php = ldl_pivots(&pair.h_prime);
    let solvable = ph.iter().chain(&php).all(|p| p.is_positive());
    StieltjesCheck {
        solvable,
        h_min_pivot: min_f64(&ph),
        h_prime_min_pivot: min_f64(&php),
        h_min_eigenvalue: scaled_min_eigenvalue(&pair.h),
        h_prime_min_eigenvalue: scaled_min_eigenvalue(&pair.h_prime),
    }
}

/// Discrete law of the common scaling factor `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingDistribution {
    pub k: usize,
    pub n: usize,
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
    /// Largest `|Σ w z^l − μ_l| / μ_l` over `l = 0..k-1`.
    pub moment_residual: f64,
    pub closure_rule: String,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl ScalingDistribution {
    pub fn new(k: usize, n: usize, atoms: Vec<f64>, weights: Vec<f64>, moment_residual: f64, closure_rule: String) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::input("atoms and weights must be non-empty and of equal length"));
        }
        if atoms.iter().any(|&z| !(z > 0.0 && z.is_finite())) {
            return Err(Error::input("atoms must be finite and strictly positive"));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::input("weights must be finite and strictly positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("weights sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Ok(ScalingDistribution { k, n, atoms, weights, moment_residual, closure_rule, cumulative })
    }

    /// Point mass at `z`: no rescaling when `z = 1`.
    pub fn degenerate(z: f64, k: usize, n: usize) -> Result<Self> {
        Self::new(k, n, vec![z], vec![1.0], 0.0, "degenerate".into())
    }

    pub fn max_atom(&self) -> f64 {
        self.atoms.iter().copied().fold(0.0, f64::max)
    }

    pub fn moment(&self, l: i32) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(z, w)| w * z.powi(l)).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ScalingDistribution = serde_json::from_str(text)?;
        Self::new(raw.k, raw.n, raw.atoms, raw.weights, raw.moment_residual, raw.closure_rule)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// One draw of `z`.
pub fn sample_scaling<R: Rng + ?Sized>(dist: &ScalingDistribution, rng: &mut R) -> f64 {
    if dist.atoms.len() == 1 {
        return dist.atoms[0];
    }
    let u: f64 = rng.random();
    let i = dist.cumulative.partition_point(|&c| c <= u).min(dist.atoms.len() - 1);
    dist.atoms[i]
}

/// Relative residuals `(Σ w_i z_i^l − μ_l) / μ_l` for `l = 0..k-1`,
/// accumulated in double-double.
pub fn moment_residuals(m: &XiMoments, atoms: &[f64], weights: &[f64]) -> Vec<f64> {
    (0..m.k)
        .map(|l| {
            let s = atoms.iter().zip(weights).fold(TwoFloat::from(0.0), |acc, (&z, &w)| {
                acc + TwoFloat::from(z).powi(l as i32) * w
            });
            let mu = m.dd(l);
            f64::from_dd((s - mu).quot(mu))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiOptions {
    /// `δ` in `μ_k = (1+δ)·μ_k^min`.
    pub slack: f64,
}

impl Default for XiOptions {
    fn default() -> Self {
        XiOptions { slack: DEFAULT_SLACK }
    }
}

pub fn closure_rule_name(slack: f64) -> String {
    format!("min-psd-slack-{slack:e}")
}

/// Exact solve of `a x = b` by Gaussian elimination.
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = &a[r][c] / &a[c][c];
            for j in c..n {
                let t = &f * &a[c][j];
                a[r][j] -= t;
            }
            let t = &f * &b[c];
            b[r] -= t;
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for j in r + 1..n {
            s -= &a[r][j] * &x[j];
        }
        x[r] = s / &a[r][r];
    }
    Some(x)
}

/// Smallest `μ_k` for which the `p×p` shifted Hankel matrix of
/// `μ_1..μ_k` stays positive semidefinite: the Schur complement
/// `vᵀ H′⁻¹ v` of its leading block.
pub fn pseudo_moment_min(m: &XiMoments) -> Result<BigRational> {
    let p = m.k.div_ceil(2);
    let lead: Vec<Vec<BigRational>> =
        (0..p - 1).map(|i| (0..p - 1).map(|j| m.mu[i + j + 1].clone()).collect()).collect();
    let v: Vec<BigRational> = (0..p - 1).map(|i| m.mu[p + i].clone()).collect();
    let x = solve_exact(lead, v.clone())
        .ok_or_else(|| Error::SolverFailure("shifted Hankel block is singular".into()))?;
    Ok(v.iter().zip(&x).map(|(a, b)| a * b).fold(BigRational::zero(), |s, t| s + t))
}

/// Monic recurrence `π_{j+1} = (x − α_j) π_j − β_j π_{j−1}` from `2p`
/// moments by the Chebyshev algorithm, exactly.
fn chebyshev_recurrence(mom: &[BigRational], p: usize) -> Result<(Vec<BigRational>, Vec<BigRational>)> {
    let mut alpha = vec![BigRational::zero(); p];
    let mut beta = vec![BigRational::zero(); p];
    let mut sig_prev = vec![BigRational::zero(); 2 * p];
    let mut sig = mom.to_vec();
    alpha[0] = &mom[1] / &mom[0];
    beta[0] = mom[0].clone();
    for j in 1..p {
        let mut next = vec![BigRational::zero(); 2 * p];
        for l in j..2 * p - j {
            next[l] = &sig[l + 1] - &alpha[j - 1] * &sig[l] - &beta[j - 1] * &sig_prev[l];
        }
        if !next[j].is_positive() {
            return Err(Error::SolverFailure(format!(
                "recurrence breaks down at degree {j}: the closed moment sequence is not positive definite"
            )));
        }
        alpha[j] = &next[j + 1] / &next[j] - &sig[j] / &sig[j - 1];
        beta[j] = &next[j] / &sig[j - 1];
        sig_prev = std::mem::replace(&mut sig, next);
    }
    Ok((alpha, beta))
}

/// `π_p`, `π_p′` and the orthonormal values `π_j / √(β_0⋯β_j)` for `j < p`.
fn eval_recurrence(alpha: &[TwoFloat], beta: &[TwoFloat], x: TwoFloat) -> (TwoFloat, TwoFloat, TwoFloat) {
    let p = alpha.len();
    let (mut pm1, mut pi) = (TwoFloat::from(0.0), TwoFloat::from(1.0));
    let (mut dm1, mut di) = (TwoFloat::from(0.0), TwoFloat::from(0.0));
    let mut norm_sq = TwoFloat::from(1.0) / beta[0].hi();
    let mut christoffel_sum = norm_sq;
    let mut scale = beta[0];
    for j in 0..p {
        let b = if j == 0 { TwoFloat::from(0.0) } else { beta[j] };
        let next = (x - alpha[j]) * pi - b * pm1;
        let dnext = pi + (x - alpha[j]) * di - b * dm1;
        pm1 = pi;
        pi = next;
        dm1 = di;
        di = dnext;
        if j + 1 < p {
            scale *= beta[j + 1];
            norm_sq = (pi * pi).quot(scale);
            christoffel_sum += norm_sq;
        }
    }
    (pi, di, christoffel_sum)
}

pub fn solve_xi(k: usize, n: usize) -> Result<ScalingDistribution> {
    solve_xi_with(k, n, XiOptions::default())
}

pub fn solve_xi_with(k: usize, n: usize, opts: XiOptions) -> Result<ScalingDistribution> {
    if !(opts.slack > 0.0 && opts.slack.is_finite()) {
        return Err(Error::input(format!("closure slack must be positive, got {}", opts.slack)));
    }
    let m = xi_moments(k, n)?;
    if n == k {
        // Every moment is 1: the point mass at 1, i.e. no rescaling.
        return ScalingDistribution::new(k, n, vec![1.0], vec![1.0], 0.0, "point-mass".into());
    }
    let check = check_stieltjes_solvable(&hankel_matrices(&m));
    if !check.solvable {
        return Err(Error::SolverFailure(format!("moment sequence is not Stieltjes-solvable: {check:?}")));
    }
    let p = k.div_ceil(2);
    let mu_min = pseudo_moment_min(&m)?;
    let slack = BigRational::from_float(opts.slack).expect("finite slack");
    let mu_k = mu_min * (BigRational::one() + slack);
    let mut mom = m.mu.clone();
    mom.push(mu_k);
    let (alpha, beta) = chebyshev_recurrence(&mom, p)?;
    let a: Vec<TwoFloat> = alpha.iter().map(rational_to_dd).collect();
    let b: Vec<TwoFloat> = beta.iter().map(rational_to_dd).collect();

    let mut jm = vec![vec![TwoFloat::from(0.0); p]; p];
    for i in 0..p {
        jm[i][i] = a[i];
        if i + 1 < p {
            let s = b[i + 1].sqrt();
            jm[i][i + 1] = s;
            jm[i + 1][i] = s;
        }
    }
    let mut atoms_dd = jacobi_eigenvalues(jm);
    for z in atoms_dd.iter_mut() {
        for _ in 0..4 {
            let (f, df, _) = eval_recurrence(&a, &b, *z);
            if df.hi() == 0.0 {
                break;
            }
            *z -= f.quot(df);
        }
    }
    let weights_dd: Vec<TwoFloat> =
        atoms_dd.iter().map(|&z| TwoFloat::from(1.0).quot(eval_recurrence(&a, &b, z).2)).collect();

    let atoms: Vec<f64> = atoms_dd.iter().map(|&z| f64::from_dd(z)).collect();
    let total = weights_dd.iter().fold(TwoFloat::from(0.0), |s, w| s + *w);
    let weights: Vec<f64> = weights_dd.iter().map(|&w| f64::from_dd(w.quot(total))).collect();
    if let Some(i) = (0..p).find(|&i| !(atoms[i] > 0.0) || !(weights[i] > 1e-300)) {
        return Err(Error::SolverFailure(format!(
            "non-positive atom or weight at index {i}: atom {}, weight {}",
            atoms[i], weights[i]
        )));
    }
    let residual = moment_residuals(&m, &atoms, &weights).iter().fold(0.0f64, |r, e| r.max(e.abs()));
    if !(residual <= MOMENT_TOLERANCE) {
        return Err(Error::SolverFailure(format!(
            "moment residual {residual:.3e} exceeds {MOMENT_TOLERANCE:e}"
        )));
    }
    ScalingDistribution::new(k, n, atoms, weights, residual, closure_rule_name(opts.slack))
}
