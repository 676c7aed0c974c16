//! Point sets, radial kernels and Gram matrix assembly.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` points in `d` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    n: usize,
    d: usize,
}

impl PointSet {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::input("point set must contain at least one point"));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::input("points must have at least one coordinate"));
        }
        let mut coords = Vec::with_capacity(n * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::input(format!(
                    "point {i} has {} coordinates, expected {d}",
                    row.len()
                )));
            }
            coords.extend(row);
        }
        Ok(PointSet { coords, n, d })
    }

    pub fn from_flat(coords: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || coords.is_empty() || !coords.len().is_multiple_of(d) {
            return Err(Error::input(format!(
                "{} coordinates cannot be split into points of dimension {d}",
                coords.len()
            )));
        }
        let n = coords.len() / d;
        Ok(PointSet { coords, n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointSet { coords, n: indices.len(), d: self.d }
    }

    /// Every coordinate multiplied by `factor`.
    pub fn scaled(mut self, factor: f64) -> PointSet {
        for c in &mut self.coords {
            *c *= factor;
        }
        self
    }
}

/// `n` points with independent U[0,1] coordinates.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> PointSet {
    assert!(n >= 1 && d >= 1, "sample_uniform needs n >= 1 and d >= 1");
    let coords = (0..n * d).map(|_| rng.random::<f64>()).collect();
    PointSet { coords, n, d }
}

/// Profile of a custom radial kernel, as a function of `λ‖x−y‖²`.
pub type RadialProfile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelFamily {
    /// `exp(−λ r²)`
    Gaussian,
    /// `1 / (1 + λ r²)`
    Cauchy,
    /// `profile(λ r²)`
    CustomRadial { name: String, profile: RadialProfile },
}

impl fmt::Debug for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Gaussian => f.write_str("Gaussian"),
            KernelFamily::Cauchy => f.write_str("Cauchy"),
            KernelFamily::CustomRadial { name, .. } => write!(f, "CustomRadial({name})"),
        }
    }
}

/// A radial kernel together with its length scale `λ`.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    family: KernelFamily,
    length_scale: f64,
}

/// Serializable summary of a kernel, used in report headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEcho {
    pub family: String,
    pub lambda: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, length_scale: f64) -> Result<Self> {
        if !(length_scale > 0.0 && length_scale.is_finite()) {
            return Err(Error::input(format!(
                "length scale must be positive and finite, got {length_scale}"
            )));
        }
        Ok(KernelSpec { family, length_scale })
    }

    pub fn gaussian(length_scale: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, length_scale)
    }

    pub fn cauchy(length_scale: f64) -> Result<Self> {
        Self::new(KernelFamily::Cauchy, length_scale)
    }

    pub fn custom(
        name: impl Into<String>,
        length_scale: f64,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(
            KernelFamily::CustomRadial { name: name.into(), profile: Arc::new(profile) },
            length_scale,
        )
    }

    /// Parses `gaussian` or `cauchy`.
    pub fn from_name(name: &str, length_scale: f64) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "gaussian" => Self::gaussian(length_scale),
            "cauchy" => Self::cauchy(length_scale),
            other => Err(Error::input(format!(
                "unknown kernel family '{other}' (expected gaussian or cauchy)"
            ))),
        }
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn name(&self) -> &str {
        match &self.family {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Cauchy => "cauchy",
            KernelFamily::CustomRadial { name, .. } => name,
        }
    }

    pub fn echo(&self) -> KernelEcho {
        KernelEcho { family: self.name().to_string(), lambda: self.length_scale }
    }

    /// Kernel value at squared distance `r2`.
    #[inline]
    pub fn radial(&self, r2: f64) -> f64 {
        let t = self.length_scale * r2;
        match &self.family {
            KernelFamily::Gaussian => (-t).exp(),
            KernelFamily::Cauchy => 1.0 / (1.0 + t),
            KernelFamily::CustomRadial { profile, .. } => profile(t),
        }
    }
}

#[inline]
pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::input(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(spec.radial(squared_distance(x, y)))
}

/// Dense Gram matrix `κ(P, P)`.
///
/// Rows of the upper triangle are evaluated in parallel and mirrored, so the
/// result is exactly symmetric and independent of the worker count.
pub fn gram_matrix(spec: &KernelSpec, points: &PointSet) -> DMatrix<f64> {
    let n = points.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = points.point(i);
            (i..n).map(|j| spec.radial(squared_distance(xi, points.point(j)))).collect()
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Sequential Gram assembly for the small matrices formed inside trials.
pub(crate) fn gram_matrix_serial(spec: &KernelSpec, points: &PointSet) -> DMatrix<f64> {
    let n = points.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = spec.radial(0.0);
        for j in i + 1..n {
            let v = spec.radial(squared_distance(points.point(i), points.point(j)));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use approx::assert_relative_eq;

    #[test]
    fn uniform_points_in_unit_cube() {
        let mut rng = substream(1, Purpose::Custom(0), 0);
        let p = sample_uniform(1, 1, &mut rng);
        assert!((0.0..=1.0).contains(&p.point(0)[0]));

        let p = sample_uniform(49, 1, &mut rng);
        let mut v: Vec<f64> = p.coords().to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        assert_eq!(v.len(), 49);
        assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn uniform_mean_near_half() {
        let mut rng = substream(2, Purpose::Custom(0), 0);
        let p = sample_uniform(1000, 3, &mut rng);
        for c in 0..3 {
            let mean = p.iter().map(|x| x[c]).sum::<f64>() / 1000.0;
            assert!((mean - 0.5).abs() < 0.05, "coordinate {c} mean {mean}");
        }
    }

    #[test]
    fn same_seed_same_points() {
        let a = sample_uniform(20, 2, &mut substream(3, Purpose::Data, 0));
        let b = sample_uniform(20, 2, &mut substream(3, Purpose::Data, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_values() {
        let g = KernelSpec::gaussian(1000.0).unwrap();
        assert_eq!(kernel_eval(&g, &[0.3], &[0.3]).unwrap(), 1.0);
        assert_relative_eq!(
            kernel_eval(&g, &[0.0], &[0.1]).unwrap(),
            (-10.0f64).exp(),
            max_relative = 1e-12
        );
        assert_relative_eq!(kernel_eval(&g, &[0.0], &[0.1]).unwrap(), 4.53999e-5, max_relative = 1e-5);

        let c = KernelSpec::cauchy(10000.0).unwrap();
        assert_relative_eq!(kernel_eval(&c, &[0.0, 0.0], &[0.01, 0.0]).unwrap(), 0.5, max_relative = 1e-12);
        assert!(kernel_eval(&c, &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn kernel_is_symmetric() {
        let c = KernelSpec::cauchy(3.0).unwrap();
        let x = [0.1, 0.7, 0.2];
        let y = [0.9, 0.05, 0.4];
        assert_eq!(kernel_eval(&c, &x, &y).unwrap(), kernel_eval(&c, &y, &x).unwrap());
    }

    #[test]
    fn rejects_bad_length_scale() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::cauchy(-1.0).is_err());
        assert!(KernelSpec::gaussian(f64::NAN).is_err());
        assert!(KernelSpec::from_name("laplace", 1.0).is_err());
    }

    #[test]
    fn gram_small_cases() {
        let g = KernelSpec::gaussian(1000.0).unwrap();
        let one = PointSet::from_rows(vec![vec![0.4]]).unwrap();
        assert_eq!(gram_matrix(&g, &one), DMatrix::from_element(1, 1, 1.0));

        let twin = PointSet::from_rows(vec![vec![0.4, 0.2], vec![0.4, 0.2]]).unwrap();
        assert_eq!(gram_matrix(&g, &twin), DMatrix::from_element(2, 2, 1.0));
    }

    #[test]
    fn gram_symmetric_unit_diagonal() {
        let g = KernelSpec::gaussian(1000.0).unwrap();
        let p = sample_uniform(49, 1, &mut substream(9, Purpose::Data, 0));
        let m = gram_matrix(&g, &p);
        assert_eq!(m.nrows(), 49);
        for i in 0..49 {
            assert_eq!(m[(i, i)], 1.0);
            for j in 0..49 {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
        assert_eq!(m, gram_matrix_serial(&g, &p));
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::from_rows(vec![]).is_err());
        assert!(PointSet::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(PointSet::from_flat(vec![1.0, 2.0, 3.0], 2).is_err());
        let p = PointSet::from_flat(vec![1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(p.select(&[1]).point(0), &[3.0, 4.0]);
        assert_eq!(p.scaled(0.5).point(1), &[1.5, 2.0]);
    }
}
