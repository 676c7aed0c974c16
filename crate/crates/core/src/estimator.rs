//! Randomized quantile estimation: average the sorted spectra of many small
//! Gram matrices formed from rescaled random subsamples.

use nalgebra::DMatrix;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{eigenvalues_sym, SymmetricSpectrum};
use crate::error::{Error, Result};
use crate::interlace::{interlacing_check, InterlacingReport};
use crate::kernel::{gram_matrix_serial, sample_uniform, KernelEcho, KernelSpec, PointSet};
use crate::rng::{substream, Purpose};
use crate::xi::{sample_scaling, ScalingDistribution};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// `k` distinct points of the data set per trial.
    #[default]
    SubsampleFromX,
    /// `k` fresh `U[0,1]^d` points per trial.
    FreshUniform,
}

/// Trial count used when none is given: `2000·k²`.
pub fn default_trials(k: usize) -> usize {
    2000 * k * k
}

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub k: usize,
    pub n: usize,
    /// Dimension in the scaling exponent `(1/z)^{1/d}`, and of fresh points.
    /// Independent of the ambient dimension of a supplied data set.
    pub d: usize,
    pub kernel: KernelSpec,
    pub trials: usize,
    pub seed: u64,
    pub sampling_mode: SamplingMode,
    pub xi: ScalingDistribution,
}

/// Serializable view of a config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub kernel: KernelEcho,
    pub trials: usize,
    pub seed: u64,
    pub sampling_mode: SamplingMode,
    pub xi_atoms: Vec<f64>,
    pub xi_weights: Vec<f64>,
    pub xi_closure_rule: String,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n == 0 || self.d == 0 {
            return Err(Error::input("k, n and d must be positive"));
        }
        if !self.n.is_multiple_of(self.k) {
            return Err(Error::input(format!("k = {} must divide n = {}", self.k, self.n)));
        }
        if self.trials == 0 {
            return Err(Error::input("need at least one trial"));
        }
        if self.xi.k != self.k || self.xi.n != self.n {
            return Err(Error::input(format!(
                "scaling distribution was built for (k, n) = ({}, {}), not ({}, {})",
                self.xi.k, self.xi.n, self.k, self.n
            )));
        }
        Ok(())
    }

    pub fn repeat_factor(&self) -> usize {
        self.n / self.k
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            k: self.k,
            n: self.n,
            d: self.d,
            kernel: self.kernel.echo(),
            trials: self.trials,
            seed: self.seed,
            sampling_mode: self.sampling_mode,
            xi_atoms: self.xi.atoms.clone(),
            xi_weights: self.xi.weights.clone(),
            xi_closure_rule: self.xi.closure_rule.clone(),
        }
    }

    fn data<'a>(&self, x: Option<&'a PointSet>) -> Result<Option<&'a PointSet>> {
        match (self.sampling_mode, x) {
            (SamplingMode::FreshUniform, _) => Ok(None),
            (SamplingMode::SubsampleFromX, None) => {
                Err(Error::input("subsample-from-x mode needs a data set"))
            }
            (SamplingMode::SubsampleFromX, Some(x)) if x.len() != self.n => Err(Error::input(format!(
                "data set has {} points but n = {}",
                x.len(),
                self.n
            ))),
            (SamplingMode::SubsampleFromX, Some(x)) => Ok(Some(x)),
        }
    }
}

/// The `k×k` matrix of trial `trial_index`.
///
/// One `z` is drawn per trial and every coordinate of every point is
/// multiplied by `(1/z)^{1/d}`.
pub fn sample_b(config: &EstimatorConfig, x: Option<&PointSet>, trial_index: u64) -> Result<DMatrix<f64>> {
    config.validate()?;
    let x = config.data(x)?;
    Ok(sample_b_unchecked(config, x, trial_index))
}

fn sample_b_unchecked(config: &EstimatorConfig, x: Option<&PointSet>, trial_index: u64) -> DMatrix<f64> {
    let mut rng = substream(config.seed, Purpose::Trial, trial_index);
    let z = sample_scaling(&config.xi, &mut rng);
    let base = match x {
        Some(x) => x.select(&index::sample(&mut rng, config.n, config.k).into_vec()),
        None => sample_uniform(config.k, config.d, &mut rng),
    };
    let factor = if z == 1.0 { 1.0 } else { z.powf(-1.0 / config.d as f64) };
    gram_matrix_serial(&config.kernel, &base.scaled(factor))
}

/// Sorted spectra of all trials, in trial order.
#[derive(Debug, Clone)]
pub struct TrialSet {
    k: usize,
    n: usize,
    /// Row-major `m×k`, each row descending.
    eigenvalues: Vec<f64>,
}

impl TrialSet {
    pub fn trials(&self) -> usize {
        self.eigenvalues.len() / self.k
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn trial(&self, t: usize) -> &[f64] {
        &self.eigenvalues[t * self.k..(t + 1) * self.k]
    }

    /// Smallest `σ_min / σ_max` over all trials.
    pub fn min_relative_eigenvalue(&self) -> f64 {
        (0..self.trials())
            .map(|t| {
                let e = self.trial(t);
                e[self.k - 1] / e[0].abs().max(f64::MIN_POSITIVE)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn quantiles(&self) -> QuantileEstimate {
        let m = self.trials();
        let k = self.k;
        let mut mean = vec![0.0; k];
        for t in 0..m {
            for (a, v) in mean.iter_mut().zip(self.trial(t)) {
                *a += v;
            }
        }
        mean.iter_mut().for_each(|a| *a /= m as f64);
        let mut var = vec![0.0; k];
        for t in 0..m {
            for ((s, v), mu) in var.iter_mut().zip(self.trial(t)).zip(&mean) {
                *s += (v - mu) * (v - mu);
            }
        }
        let stddev = var
            .into_iter()
            .map(|s| if m > 1 { (s / (m - 1) as f64).sqrt() } else { 0.0 })
            .collect();
        QuantileEstimate {
            averaged_eigenvalues: mean,
            repeat_factor: self.n / k,
            per_trial_stddev: stddev,
            m_used: m,
        }
    }

    /// Ratio of the trial mean of `tr(B^r)/k` to `tr(A^r)/n` of `reference`.
    pub fn trace_diagnostics(&self, reference: &SymmetricSpectrum) -> Result<TraceDiagnostics> {
        if reference.size() != self.n {
            return Err(Error::input(format!(
                "reference spectrum has size {}, expected n = {}",
                reference.size(),
                self.n
            )));
        }
        let moments: Vec<f64> =
            (1..=self.k as u32).map(|r| reference.power_sum(r) / self.n as f64).collect();
        self.trace_diagnostics_against(&moments)
    }

    /// Trial mean of `tr(B^r)/k` for `r = 1..k`, with 95% half-widths.
    pub fn trace_means(&self) -> Vec<(f64, f64)> {
        let m = self.trials();
        let k = self.k;
        (1..=k as i32)
            .map(|r| {
                let per_trial: Vec<f64> =
                    (0..m).map(|t| self.trial(t).iter().map(|v| v.powi(r)).sum::<f64>() / k as f64).collect();
                let mean = per_trial.iter().sum::<f64>() / m as f64;
                let var = if m > 1 {
                    per_trial.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64
                } else {
                    0.0
                };
                (mean, Z95 * (var / m as f64).sqrt())
            })
            .collect()
    }

    /// As [`TrialSet::trace_diagnostics`], against given `tr(A^r)/n`, `r = 1..k`.
    pub fn trace_diagnostics_against(&self, reference_moments: &[f64]) -> Result<TraceDiagnostics> {
        if reference_moments.len() != self.k {
            return Err(Error::input(format!("need {} reference moments", self.k)));
        }
        let entries = self
            .trace_means()
            .into_iter()
            .zip(reference_moments)
            .enumerate()
            .map(|(i, ((mean, hw), &reference))| TraceRatio {
                r: i + 1,
                sample_mean: mean,
                reference,
                ratio: mean / reference,
                halfwidth: hw / reference,
            })
            .collect();
        Ok(TraceDiagnostics { entries })
    }
}

/// Runs `config.trials` independent trials on the global rayon pool.
///
/// Results land in a buffer indexed by trial number, so the outcome does
/// not depend on the number of workers.
pub fn run_trials(config: &EstimatorConfig, x: Option<&PointSet>) -> Result<TrialSet> {
    config.validate()?;
    let x = config.data(x)?;
    let spectra: Vec<Result<Vec<f64>>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| Ok(eigenvalues_sym(&sample_b_unchecked(config, x, t))?.values().to_vec()))
        .collect();
    let mut eigenvalues = Vec::with_capacity(config.trials * config.k);
    for s in spectra {
        eigenvalues.extend(s?);
    }
    Ok(TrialSet { k: config.k, n: config.n, eigenvalues })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileEstimate {
    /// `σ̄_1 ≥ … ≥ σ̄_k`.
    pub averaged_eigenvalues: Vec<f64>,
    pub repeat_factor: usize,
    pub per_trial_stddev: Vec<f64>,
    pub m_used: usize,
}

impl QuantileEstimate {
    /// Standard error of each `σ̄_j`.
    pub fn standard_errors(&self) -> Vec<f64> {
        self.per_trial_stddev.iter().map(|s| s / (self.m_used as f64).sqrt()).collect()
    }

    pub fn spectrum(&self) -> Result<SymmetricSpectrum> {
        SymmetricSpectrum::from_values(self.averaged_eigenvalues.clone())
    }

    /// Each `σ̄_j` repeated `n/k` times: the step approximation of A's spectrum.
    pub fn steps(&self) -> Vec<f64> {
        self.averaged_eigenvalues
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, self.repeat_factor))
            .collect()
    }
}

pub fn estimate_quantiles(config: &EstimatorConfig, x: Option<&PointSet>) -> Result<QuantileEstimate> {
    Ok(run_trials(config, x)?.quantiles())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileReport {
    pub steps: Vec<f64>,
    pub coverage: Option<f64>,
    #[serde(skip)]
    pub interlacing: Option<InterlacingReport>,
}

pub fn quantile_report(est: &QuantileEstimate, reference: Option<&SymmetricSpectrum>) -> Result<QuantileReport> {
    let steps = est.steps();
    let interlacing = match reference {
        None => None,
        Some(a) => {
            if a.size() != steps.len() {
                return Err(Error::input(format!(
                    "reference spectrum has size {}, expected n = {}",
                    a.size(),
                    steps.len()
                )));
            }
            Some(interlacing_check(a, &est.spectrum()?))
        }
    };
    Ok(QuantileReport { steps, coverage: interlacing.as_ref().map(|r| r.coverage), interlacing })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRatio {
    pub r: usize,
    /// Trial mean of `tr(B^r)/k`.
    pub sample_mean: f64,
    /// `tr(A^r)/n`.
    pub reference: f64,
    pub ratio: f64,
    /// 95% Monte-Carlo half-width of `ratio`.
    pub halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceDiagnostics {
    pub entries: Vec<TraceRatio>,
}

impl TraceDiagnostics {
    pub fn ratios(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.ratio).collect()
    }

    /// Whether every ratio lies in `[1−(ε+hw_r), 1+(ε+hw_r)]`.
    pub fn within(&self, epsilon: f64) -> bool {
        self.entries.iter().all(|e| (e.ratio - 1.0).abs() <= epsilon + e.halfwidth)
    }
}

pub fn trace_ratio_diagnostic(
    config: &EstimatorConfig,
    x: Option<&PointSet>,
    reference: &SymmetricSpectrum,
) -> Result<TraceDiagnostics> {
    run_trials(config, x)?.trace_diagnostics(reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::gram_matrix;
    use crate::xi::solve_xi;

    fn config(k: usize, n: usize, d: usize, lambda: f64, trials: usize, mode: SamplingMode) -> EstimatorConfig {
        let xi = if k >= 3 { solve_xi(k, n).unwrap() } else { ScalingDistribution::degenerate(1.0, k, n).unwrap() };
        EstimatorConfig {
            k,
            n,
            d,
            kernel: KernelSpec::gaussian(lambda).unwrap(),
            trials,
            seed: 11,
            sampling_mode: mode,
            xi,
        }
    }

    fn data(n: usize, d: usize) -> PointSet {
        sample_uniform(n, d, &mut substream(11, Purpose::Data, 0))
    }

    #[test]
    fn unit_scaling_gives_plain_gram() {
        let mut c = config(3, 6, 1, 50.0, 1, SamplingMode::SubsampleFromX);
        c.xi = ScalingDistribution::degenerate(1.0, 3, 6).unwrap();
        let x = data(6, 1);
        let b = sample_b(&c, Some(&x), 0).unwrap();
        let mut rng = substream(c.seed, Purpose::Trial, 0);
        let _ = sample_scaling(&c.xi, &mut rng);
        let idx = index::sample(&mut rng, 6, 3).into_vec();
        assert_eq!(b, gram_matrix(&c.kernel, &x.select(&idx)));
    }

    #[test]
    fn huge_z_collapses_to_ones() {
        let mut c = config(3, 6, 1, 1000.0, 1, SamplingMode::FreshUniform);
        c.xi = ScalingDistribution::degenerate(1e30, 3, 6).unwrap();
        let b = sample_b(&c, None, 5).unwrap();
        assert!(b.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let e = eigenvalues_sym(&b).unwrap();
        assert!((e.sigma(1) - 3.0).abs() < 1e-10 && e.sigma(2).abs() < 1e-10);
    }

    #[test]
    fn trials_are_reproducible_with_unit_diagonal() {
        let c = config(7, 49, 1, 1000.0, 1, SamplingMode::SubsampleFromX);
        let x = data(49, 1);
        let a = sample_b(&c, Some(&x), 3).unwrap();
        assert_eq!(a, sample_b(&c, Some(&x), 3).unwrap());
        assert_ne!(a, sample_b(&c, Some(&x), 4).unwrap());
        assert!((0..7).all(|i| a[(i, i)] == 1.0));
    }

    #[test]
    fn single_trial_is_its_own_average() {
        let c = config(3, 9, 2, 10.0, 1, SamplingMode::FreshUniform);
        let est = estimate_quantiles(&c, None).unwrap();
        let e = eigenvalues_sym(&sample_b(&c, None, 0).unwrap()).unwrap();
        assert_eq!(est.averaged_eigenvalues, e.values());
        assert_eq!(est.per_trial_stddev, vec![0.0; 3]);
    }

    #[test]
    fn k1_average_is_one() {
        let c = config(1, 4, 1, 10.0, 50, SamplingMode::FreshUniform);
        let est = estimate_quantiles(&c, None).unwrap();
        assert_eq!(est.averaged_eigenvalues, vec![1.0]);
        assert_eq!(est.repeat_factor, 4);
    }

    #[test]
    fn averages_are_sorted_and_psd() {
        let c = config(5, 25, 2, 30.0, 400, SamplingMode::FreshUniform);
        let t = run_trials(&c, None).unwrap();
        let est = t.quantiles();
        assert!(est.averaged_eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(t.min_relative_eigenvalue() >= -1e-10);
    }

    #[test]
    fn input_errors() {
        let c = config(3, 9, 1, 10.0, 2, SamplingMode::SubsampleFromX);
        assert!(matches!(sample_b(&c, None, 0), Err(Error::Input(_))));
        assert!(sample_b(&c, Some(&data(8, 1)), 0).is_err());
        let mut bad = c.clone();
        bad.n = 10;
        assert!(bad.validate().is_err());
        let mut bad = c;
        bad.trials = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn report_with_and_without_reference() {
        let est = QuantileEstimate {
            averaged_eigenvalues: vec![3.0, 2.0, 1.0],
            repeat_factor: 1,
            per_trial_stddev: vec![0.0; 3],
            m_used: 1,
        };
        let a = SymmetricSpectrum::from_values(vec![3.0, 2.0, 1.0]).unwrap();
        assert_eq!(quantile_report(&est, Some(&a)).unwrap().coverage, Some(1.0));
        let r = quantile_report(&est, None).unwrap();
        assert_eq!(r.coverage, None);
        assert_eq!(r.steps, vec![3.0, 2.0, 1.0]);
        let wrong = SymmetricSpectrum::from_values(vec![1.0; 4]).unwrap();
        assert!(quantile_report(&est, Some(&wrong)).is_err());
    }

    #[test]
    fn identical_sampling_gives_unit_trace_ratios() {
        // k = n with z = 1: B and A are identically distributed.
        let mut c = config(3, 3, 1, 20.0, 20_000, SamplingMode::FreshUniform);
        c.xi = ScalingDistribution::degenerate(1.0, 3, 3).unwrap();
        let t = run_trials(&c, None).unwrap();
        let mut other = c.clone();
        other.seed = 12;
        let reference = run_trials(&other, None).unwrap().trace_means();
        let moments: Vec<f64> = reference.iter().map(|p| p.0).collect();
        let diag = t.trace_diagnostics_against(&moments).unwrap();
        for (e, (mu, hw)) in diag.entries.iter().zip(&reference) {
            let combined = e.halfwidth.hypot(hw / mu);
            assert!((e.ratio - 1.0).abs() <= 2.0 * combined, "{e:?}");
        }
    }
}
