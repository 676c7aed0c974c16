//! Power-sum moments and moment matching of finite sets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::eigen::SymmetricSpectrum;
use crate::error::{Error, Result};
use crate::poly::{aberth_roots, polish_real_root};
use crate::precision::{needs_extended, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Power sums divided by the set size, so `μ_0 = 1`.
    Mean,
    /// Plain power sums.
    Raw,
}

/// Moments `μ_0..μ_r`, held in double-double.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    values: Vec<TwoFloat>,
    normalization: Normalization,
}

impl MomentSequence {
    pub fn new(values: Vec<f64>, normalization: Normalization) -> Result<Self> {
        Self::from_dd(values.into_iter().map(TwoFloat::from).collect(), normalization)
    }

    pub fn from_dd(values: Vec<TwoFloat>, normalization: Normalization) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("moment sequence must contain μ_0"));
        }
        if values.iter().any(|v| !v.is_valid()) {
            return Err(Error::input("moment values must be finite"));
        }
        if normalization == Normalization::Mean && (values[0] - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!(
                "mean-normalized moments need μ_0 = 1, got {}",
                values[0].hi()
            )));
        }
        Ok(MomentSequence { values, normalization })
    }

    /// Mean power sums `(1/n) Σ x_i^r` for `r = 0..=r_max`.
    pub fn of_samples(samples: &[f64], r_max: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::input("cannot take moments of an empty set"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("samples must be finite"));
        }
        let mut sums = vec![TwoFloat::from(0.0); r_max + 1];
        for &x in samples {
            let x = TwoFloat::from(x);
            let mut p = TwoFloat::from(1.0);
            for s in sums.iter_mut() {
                *s += p;
                p *= x;
            }
        }
        let n = samples.len() as f64;
        let values = sums.into_iter().map(|s| s / n).collect();
        Ok(MomentSequence { values, normalization: Normalization::Mean })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Highest moment index held.
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn get(&self, i: usize) -> f64 {
        f64::from_dd(self.values[i])
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from_dd(v)).collect()
    }

    pub(crate) fn dd(&self) -> &[TwoFloat] {
        &self.values
    }
}

/// `(1/size) Σ σ_i^r` for `r = 0..=r_max`: the trace moments `tr(M^r)/size`.
pub fn spectral_moments(spectrum: &SymmetricSpectrum, r_max: usize) -> Result<MomentSequence> {
    if r_max == 0 {
        return Err(Error::input("r_max must be at least 1"));
    }
    MomentSequence::of_samples(spectrum.values(), r_max)
}

/// Relative tolerance on imaginary parts and negativity of matched values.
const ROOT_TOL: f64 = 1e-8;

/// A `k`-element set whose mean power sums equal those of `set` for
/// `r = 1..=k`, returned ascending.
///
/// The target power sums are turned into elementary symmetric polynomials by
/// Newton's identities; the answer is the root set of the resulting monic
/// polynomial. Fails with [`Error::InfeasibleMoments`] when that polynomial
/// has complex or negative roots.
pub fn moment_match_set(set: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = set.len();
    if k == 0 || k > n {
        return Err(Error::input(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if set.iter().any(|&a| !a.is_finite() || a < 0.0) {
        return Err(Error::input("set must contain finite nonnegative values"));
    }
    let max = set.iter().copied().fold(0.0, f64::max);
    let min = set.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min <= 1e-14 * max || max == 0.0 {
        let mean = set.iter().sum::<f64>() / n as f64;
        return Ok(vec![mean; k]);
    }
    if needs_extended(k) {
        match_in::<TwoFloat>(set, k, max)
    } else {
        match_in::<f64>(set, k, max)
    }
}

fn match_in<T: Scalar>(set: &[f64], k: usize, scale: f64) -> Result<Vec<f64>> {
    let n = set.len();
    let inv_scale = T::one().quot(T::of(scale));
    let ratio = T::of(k as f64).quot(T::of(n as f64));

    // p_r = (k/n) Σ (a/scale)^r
    let mut power = vec![T::zero(); k + 1];
    for &a in set {
        let x = T::of(a) * inv_scale;
        let mut p = x;
        for slot in power.iter_mut().skip(1) {
            *slot = *slot + p;
            p = p * x;
        }
    }
    for p in power.iter_mut() {
        *p = *p * ratio;
    }

    // Newton's identities: r e_r = Σ_{i=1}^r (-1)^{i-1} e_{r-i} p_i
    let mut e = vec![T::zero(); k + 1];
    e[0] = T::one();
    for r in 1..=k {
        let mut acc = T::zero();
        for i in 1..=r {
            let term = e[r - i] * power[i];
            acc = if i % 2 == 1 { acc + term } else { acc - term };
        }
        e[r] = acc.quot(T::of(r as f64));
    }
    // x^k - e1 x^{k-1} + e2 x^{k-2} - …
    let coeffs: Vec<T> = (1..=k).map(|i| if i % 2 == 1 { -e[i] } else { e[i] }).collect();
    let coeffs_f64: Vec<f64> = coeffs.iter().map(|c| c.as_f64()).collect();

    let roots = real_roots_with_clusters(&aberth_roots(&coeffs_f64))?;
    let mut out = Vec::with_capacity(k);
    for (i, &r) in roots.iter().enumerate() {
        let simple = (i == 0 || roots[i - 1] != r) && (i + 1 == roots.len() || roots[i + 1] != r);
        let x = if simple { polish_real_root(&coeffs, T::of(r)) } else { T::of(r) };
        let x = x.as_f64();
        if x < -ROOT_TOL {
            return Err(Error::InfeasibleMoments(format!(
                "matched value {} is negative",
                x * scale
            )));
        }
        out.push(x.max(0.0));
    }
    out.sort_by(f64::total_cmp);

    // Round trip in working precision.
    for r in 1..=k {
        let got = out.iter().fold(T::zero(), |acc, &b| acc + T::of(b).powi(r as i32));
        let rel = (got - power[r]).quot(power[r]).abs().as_f64();
        if !(rel <= ROOT_TOL) {
            return Err(Error::InfeasibleMoments(format!(
                "no {k}-point set with uniform weights reproduces power sum r = {r} \
                 (relative mismatch {rel:.3e})"
            )));
        }
    }
    Ok(out.into_iter().map(|b| b * scale).collect())
}

/// Accepts a root set as real when every root is real within tolerance, or
/// when the stray complex roots form a tight cluster around a real point
/// (the numerical footprint of a repeated root).
fn real_roots_with_clusters(roots: &[Complex64]) -> Result<Vec<f64>> {
    let is_real = |z: &Complex64| z.im.abs() <= ROOT_TOL * z.norm().max(1e-300);
    if roots.iter().all(is_real) {
        let mut v: Vec<f64> = roots.iter().map(|z| z.re).collect();
        v.sort_by(f64::total_cmp);
        return Ok(v);
    }
    // Roots are scaled to O(1); a k-fold root spreads by about eps^(1/k).
    let radius = 1e-2;
    let k = roots.len();
    let mut group = vec![usize::MAX; k];
    let mut next = 0;
    for i in 0..k {
        if group[i] != usize::MAX {
            continue;
        }
        group[i] = next;
        let mut stack = vec![i];
        while let Some(a) = stack.pop() {
            for b in 0..k {
                if group[b] == usize::MAX && (roots[a] - roots[b]).norm() <= radius {
                    group[b] = next;
                    stack.push(b);
                }
            }
        }
        next += 1;
    }
    let mut out = Vec::with_capacity(k);
    for g in 0..next {
        let members: Vec<&Complex64> = (0..k).filter(|&i| group[i] == g).map(|i| &roots[i]).collect();
        let m = members.len();
        let centroid = members.iter().copied().sum::<Complex64>() / m as f64;
        if members.iter().all(|z| is_real(z)) {
            out.extend(members.iter().map(|z| z.re));
        } else if m >= 2 && centroid.im.abs() <= ROOT_TOL * centroid.norm().max(1e-300) {
            out.extend(std::iter::repeat_n(centroid.re, m));
        } else {
            return Err(Error::InfeasibleMoments(format!(
                "moment polynomial has a complex root {:.6e}{:+.6e}i",
                centroid.re, centroid.im
            )));
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}
