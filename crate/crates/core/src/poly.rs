//! Real polynomials: evaluation and simultaneous root finding.

use num_complex::Complex64;

use crate::precision::Scalar;

/// Horner evaluation of a monic polynomial `x^k + c[0] x^{k-1} + … + c[k-1]`.
pub(crate) fn eval_monic<T: Scalar>(coeffs: &[T], x: T) -> (T, T) {
    let mut p = T::one();
    let mut dp = T::zero();
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn eval_monic_complex(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of a monic polynomial by Aberth–Ehrlich iteration.
pub(crate) fn aberth_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let k = coeffs.len();
    if k == 0 {
        return Vec::new();
    }
    let bound = 1.0 + coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let radius = bound.min(
        // Fujiwara-style refinement keeps the start circle near the roots.
        2.0 * coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.abs().powf(1.0 / (i + 1) as f64))
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE),
    );
    let mut z: Vec<Complex64> = (0..k)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / k as f64 + 0.4;
            Complex64::from_polar(0.5 * radius, theta)
        })
        .collect();
    for _ in 0..1000 {
        let mut max_step: f64 = 0.0;
        for j in 0..k {
            let (p, dp) = eval_monic_complex(coeffs, z[j]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulse: Complex64 = (0..k)
                .filter(|&i| i != j)
                .map(|i| {
                    let d = z[j] - z[i];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulse);
            if step.is_finite() {
                z[j] -= step;
                max_step = max_step.max(step.norm() / z[j].norm().max(1e-300));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    z
}

/// Newton refinement of a simple real root in the working precision.
pub(crate) fn polish_real_root<T: Scalar>(coeffs: &[T], mut x: T) -> T {
    for _ in 0..8 {
        let (p, dp) = eval_monic(coeffs, x);
        if dp == T::zero() {
            break;
        }
        let step = p.quot(dp);
        let next = x - step;
        if !next.is_finite() {
            break;
        }
        x = next;
        if step.abs() <= T::of(T::unit_roundoff()) * x.abs() {
            break;
        }
    }
    x
}
