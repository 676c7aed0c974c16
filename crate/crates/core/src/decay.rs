//! Monte-Carlo check of the fast-decay condition: for a closed walk `π`
//! with `l` distinct vertices, compare
//! `∫_{[0,s]^l} Π κ(x_{π(i−1)}, x_{π(i)}) dx` with `s` times the same
//! integral over `[0,1]^l`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::Z95;
use crate::kernel::KernelSpec;
use crate::rng::{substream, Purpose, StreamRng};

/// Fewest samples a ratio estimate accepts.
pub const MIN_SAMPLES: usize = 10_000;

/// A closed walk on vertices `1..=l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Walk {
    vertices: Vec<usize>,
    l: usize,
}

impl Walk {
    /// Validates closure and relabels nothing; vertices are 1-based.
    pub fn new(vertices: Vec<usize>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::input("a walk needs at least one step"));
        }
        if vertices.first() != vertices.last() {
            return Err(Error::input("walk must start and end at the same vertex"));
        }
        if vertices.contains(&0) {
            return Err(Error::input("walk vertices are 1-based"));
        }
        let mut distinct = vertices.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let l = distinct.len();
        // Compact labels so that vertex v indexes coordinate v-1.
        let vertices = vertices.iter().map(|v| distinct.binary_search(v).unwrap() + 1).collect();
        Ok(Walk { vertices, l })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Number of steps.
    pub fn r(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Number of distinct vertices.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn label(&self) -> String {
        self.vertices.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-")
    }
}

/// `(1, 2, …, l, 1, …, 1)` of length `r + 1`.
pub fn canonical_walk(r: usize, l: usize) -> Result<Walk> {
    if l == 0 || l > r {
        return Err(Error::input(format!("need 1 <= l <= r, got r = {r}, l = {l}")));
    }
    let mut v: Vec<usize> = (1..=l).collect();
    v.resize(r + 1, 1);
    Walk::new(v)
}

/// A uniformly random closed walk with `r` steps and exactly `l` distinct
/// vertices, starting at vertex 1, by rejection.
pub fn random_walk<R: Rng + ?Sized>(r: usize, l: usize, rng: &mut R) -> Result<Walk> {
    if l == 0 || l > r {
        return Err(Error::input(format!("need 1 <= l <= r, got r = {r}, l = {l}")));
    }
    loop {
        let mut v = Vec::with_capacity(r + 1);
        v.push(1);
        for _ in 1..r {
            v.push(rng.random_range(1..=l));
        }
        v.push(1);
        let mut seen = vec![false; l + 1];
        v.iter().for_each(|&x| seen[x] = true);
        if seen[1..].iter().all(|&b| b) {
            return Walk::new(v);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub ratio: f64,
    /// 95% half-width by the delta method, including the covariance of
    /// the common-random-number numerator and denominator.
    pub halfwidth: f64,
}

fn walk_product(kernel: &KernelSpec, walk: &Walk, x: &[f64], dim: usize) -> f64 {
    let v = walk.vertices();
    let mut p = 1.0;
    for w in v.windows(2) {
        let (a, b) = (w[0] - 1, w[1] - 1);
        if a == b {
            p *= kernel.radial(0.0);
            continue;
        }
        let r2: f64 = (0..dim).map(|c| {
            let t = x[a * dim + c] - x[b * dim + c];
            t * t
        }).sum();
        p *= kernel.radial(r2);
    }
    p
}

/// Ratio estimate for `dim`-dimensional vertices; `s` is a volume fraction,
/// so the numerator's cube has side `s^{1/dim}`.
fn ratio_in(kernel: &KernelSpec, walk: &Walk, s: f64, samples: usize, dim: usize, rng: &mut StreamRng) -> Result<RatioEstimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::input(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::input(format!("s must lie in (0, 1], got {s}")));
    }
    let l = walk.l();
    let side = if dim == 1 { s } else { s.powf(1.0 / dim as f64) };
    let mut u = vec![0.0; l * dim];
    let mut su = vec![0.0; l * dim];
    let (mut sf, mut sg, mut sff, mut sgg, mut sfg) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        for (a, b) in u.iter_mut().zip(su.iter_mut()) {
            *a = rng.random::<f64>();
            *b = side * *a;
        }
        let f = walk_product(kernel, walk, &u, dim);
        let g = if s == 1.0 { f } else { walk_product(kernel, walk, &su, dim) };
        sf += f;
        sg += g;
        sff += f * f;
        sgg += g * g;
        sfg += f * g;
    }
    let n = samples as f64;
    let (mf, mg) = (sf / n, sg / n);
    if !(mf > 0.0) {
        return Err(Error::Numerical(format!(
            "denominator estimate {mf:e} is not positive; the kernel must be positive"
        )));
    }
    let vol = if s == 1.0 { 1.0 } else { s.powi(l as i32) };
    let ratio = vol * mg / mf;
    let vf = (sff / n - mf * mf).max(0.0);
    let vg = (sgg / n - mg * mg).max(0.0);
    let cfg = sfg / n - mf * mg;
    let rel_var = if mg > 0.0 { (vg / (mg * mg) + vf / (mf * mf) - 2.0 * cfg / (mf * mg)).max(0.0) } else { 0.0 };
    Ok(RatioEstimate { ratio, halfwidth: Z95 * ratio * (rel_var / n).sqrt() })
}

/// One-dimensional ratio estimate.
pub fn decay_ratio(kernel: &KernelSpec, walk: &Walk, s: f64, samples: usize, rng: &mut StreamRng) -> Result<RatioEstimate> {
    ratio_in(kernel, walk, s, samples, 1, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayConfig {
    pub l_max: usize,
    pub s_grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Longest walk checked; defaults to `l_max`.
    pub r_max: Option<usize>,
    /// Random walks per `(r, l)` with `r > l`, on top of the canonical one.
    pub random_walks: usize,
    /// Vertex dimension; 1 is the scalar condition.
    pub dim: usize,
}

impl DecayConfig {
    pub fn new(l_max: usize, s_grid: Vec<f64>, samples: usize, seed: u64) -> Self {
        DecayConfig { l_max, s_grid, samples, seed, r_max: None, random_walks: 8, dim: 1 }
    }

    /// `{0.1, 0.2, …, 1.0}`.
    pub fn tenths() -> Vec<f64> {
        (1..=10).map(|i| i as f64 / 10.0).collect()
    }

    /// Every walk checked, with its stream index.
    pub fn walks(&self) -> Result<Vec<(u64, Walk)>> {
        let r_max = self.r_max.unwrap_or(self.l_max).max(self.l_max);
        let mut out = Vec::new();
        for l in 1..=self.l_max {
            for r in l.max(1)..=r_max {
                let base = ((l as u64) << 40) | ((r as u64) << 20);
                let canonical = canonical_walk(r, l)?;
                out.push((base, canonical.clone()));
                if r > l && l > 1 {
                    let mut rng = substream(self.seed, Purpose::Custom(0xdeca), base);
                    for i in 0..self.random_walks {
                        let w = random_walk(r, l, &mut rng)?;
                        if !out.iter().any(|(_, o)| *o == w) {
                            out.push((base + 1 + i as u64, w));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEntry {
    pub l: usize,
    pub s: f64,
    /// Ratio of the walk that deviates most from `s` in this cell.
    pub ratio: f64,
    pub halfwidth: f64,
    pub r: usize,
    pub walk: String,
    pub walks_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub entries: Vec<DecayEntry>,
    /// Largest `|ratio − s|` over the grid.
    pub epsilon_hat: f64,
    /// Smallest `s` checked; nothing is claimed below it.
    pub t_effective: f64,
}

impl DecayReport {
    pub fn entry(&self, l: usize, s: f64) -> Option<&DecayEntry> {
        self.entries.iter().find(|e| e.l == l && e.s == s)
    }
}

pub fn epsilon_estimate(kernel: &KernelSpec, config: &DecayConfig) -> Result<DecayReport> {
    if config.l_max == 0 {
        return Err(Error::input("l_max must be at least 1"));
    }
    if config.s_grid.is_empty() || config.s_grid.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
        return Err(Error::input("s grid must be non-empty and inside (0, 1]"));
    }
    if config.dim == 0 {
        return Err(Error::input("vertex dimension must be positive"));
    }
    let walks = config.walks()?;
    let jobs: Vec<(usize, usize)> =
        (0..walks.len()).flat_map(|w| (0..config.s_grid.len()).map(move |s| (w, s))).collect();
    let results: Vec<Result<RatioEstimate>> = jobs
        .par_iter()
        .map(|&(w, si)| {
            let (stream, walk) = &walks[w];
            let mut rng = substream(config.seed, Purpose::Decay, *stream);
            ratio_in(kernel, walk, config.s_grid[si], config.samples, config.dim, &mut rng)
        })
        .collect();
    let mut entries: Vec<DecayEntry> = Vec::new();
    for l in 1..=config.l_max {
        for (si, &s) in config.s_grid.iter().enumerate() {
            let mut worst: Option<DecayEntry> = None;
            let mut count = 0;
            for (job, res) in jobs.iter().zip(&results) {
                let (_, walk) = &walks[job.0];
                if job.1 != si || walk.l() != l {
                    continue;
                }
                let est = match res {
                    Ok(e) => *e,
                    Err(e) => return Err(Error::Numerical(format!("walk {}: {e}", walk.label()))),
                };
                count += 1;
                if worst.as_ref().is_none_or(|w| (est.ratio - s).abs() > (w.ratio - s).abs()) {
                    worst = Some(DecayEntry {
                        l,
                        s,
                        ratio: est.ratio,
                        halfwidth: est.halfwidth,
                        r: walk.r(),
                        walk: walk.label(),
                        walks_checked: 0,
                    });
                }
            }
            if let Some(mut e) = worst {
                e.walks_checked = count;
                entries.push(e);
            }
        }
    }
    let epsilon_hat = entries.iter().map(|e| (e.ratio - e.s).abs()).fold(0.0, f64::max);
    let t_effective = config.s_grid.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DecayReport { entries, epsilon_hat, t_effective })
}

/// Ratio for each Gaussian length scale, all from the same random numbers.
pub fn gaussian_limit_check(lambdas: &[f64], walk: &Walk, s: f64, samples: usize, seed: u64) -> Result<Vec<RatioEstimate>> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("length scales must be non-empty and strictly increasing"));
    }
    lambdas
        .iter()
        .map(|&lam| {
            let kernel = KernelSpec::gaussian(lam)?;
            let mut rng = substream(seed, Purpose::Decay, u64::MAX);
            decay_ratio(&kernel, walk, s, samples, &mut rng)
        })
        .collect()
}
