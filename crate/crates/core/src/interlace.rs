//! The sandwich test `σ_{c−1}(B) ≥ σ_j(A) ≥ σ_{c+1}(B)`, `c = ⌈jk/n⌉`.

use serde::Serialize;

use crate::eigen::SymmetricSpectrum;

/// Rounding slack, relative to the largest eigenvalue involved.
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterlacingReport {
    /// One flag per `j = 1..n`.
    pub flags: Vec<bool>,
    /// `σ_{c+1}(B)` per `j`, with `σ_{k+1} = 0`.
    pub lower: Vec<f64>,
    /// `σ_{c−1}(B)` per `j`, with `σ_0 = +∞`.
    pub upper: Vec<f64>,
    /// `|σ_j(A) − bound| / max(σ_j(A), bound)` for violated indices, else 0.
    pub relative_violation: Vec<f64>,
    pub coverage: f64,
    /// Whether `k | n`; the check still runs otherwise.
    pub divisible: bool,
}

impl InterlacingReport {
    pub fn mean_relative_violation(&self) -> f64 {
        self.relative_violation.iter().sum::<f64>() / self.relative_violation.len() as f64
    }
}

/// Checks every eigenvalue of `a` against its two neighbouring eigenvalues
/// of `b`, both in descending order.
pub fn interlacing_check(a: &SymmetricSpectrum, b: &SymmetricSpectrum) -> InterlacingReport {
    let n = a.size();
    let k = b.size();
    let divisible = n.is_multiple_of(k);
    let slack = SLACK * a.max().abs().max(b.max().abs());
    let mut flags = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut viol = Vec::with_capacity(n);
    for j in 1..=n {
        let c = (j * k).div_ceil(n);
        let hi = if c == 1 { f64::INFINITY } else { b.sigma(c - 1) };
        let lo = if c + 1 > k { 0.0 } else { b.sigma(c + 1) };
        let x = a.sigma(j);
        let ok = x <= hi + slack && x >= lo - slack;
        let v = if ok {
            0.0
        } else if x > hi {
            (x - hi) / x.abs().max(hi.abs())
        } else {
            (lo - x) / x.abs().max(lo.abs())
        };
        flags.push(ok);
        lower.push(lo);
        upper.push(hi);
        viol.push(v);
    }
    let coverage = flags.iter().filter(|&&f| f).count() as f64 / n as f64;
    InterlacingReport { flags, lower, upper, relative_violation: viol, coverage, divisible }
}
