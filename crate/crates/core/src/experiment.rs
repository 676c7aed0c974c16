//! Experiment presets and their orchestration: oracle spectrum, estimator
//! run, diagnostics and report files.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::eigen::{eigenvalues_sym, SymmetricSpectrum};
use crate::error::{Error, Result};
use crate::estimator::{run_trials, ConfigEcho, EstimatorConfig, QuantileEstimate, SamplingMode, TraceDiagnostics};
use crate::interlace::interlacing_check;
use crate::kernel::{gram_matrix, sample_uniform, KernelSpec, PointSet};
use crate::moments::{moment_match_set, MomentSequence};
use crate::oracle::{full_spectrum_oracle, nystrom_baseline, spectrum_fit_metric};
use crate::orthopoly::{cdf_bounds, orthopoly_from_moments};
use crate::report::{num, spectrum_svg, write_json, Mark, Series, Table, SPEC_VERSION};
use crate::rng::{substream, Purpose};
use crate::xi::{solve_xi_with, ScalingDistribution, XiOptions, DEFAULT_SLACK};

/// The 15-point set used by the moment-matching illustration.
pub const REFERENCE_SET: [f64; 15] =
    [1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 9.0, 12.0, 13.0, 14.0, 22.0, 23.0, 29.0, 30.0, 31.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExperimentId {
    #[serde(rename = "fig1")]
    Fig1,
    #[serde(rename = "fig2")]
    Fig2,
    #[serde(rename = "ex3.1")]
    Ex31,
    #[serde(rename = "ex3.2")]
    Ex32,
    #[serde(rename = "ex3.3")]
    Ex33,
    #[serde(rename = "ex3.4")]
    Ex34,
    #[serde(rename = "fig8")]
    Fig8,
    #[serde(rename = "custom")]
    Custom,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::Fig1,
        ExperimentId::Fig2,
        ExperimentId::Ex31,
        ExperimentId::Ex32,
        ExperimentId::Ex33,
        ExperimentId::Ex34,
        ExperimentId::Fig8,
        ExperimentId::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Fig1 => "fig1",
            ExperimentId::Fig2 => "fig2",
            ExperimentId::Ex31 => "ex3.1",
            ExperimentId::Ex32 => "ex3.2",
            ExperimentId::Ex33 => "ex3.3",
            ExperimentId::Ex34 => "ex3.4",
            ExperimentId::Fig8 => "fig8",
            ExperimentId::Custom => "custom",
        }
    }
}

impl FromStr for ExperimentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::input(format!("unknown experiment id {s:?}")))
    }
}

/// Parameters a preset resolves to. Every run is reproducible from these.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub kernel: String,
    pub lambda: f64,
    pub m: usize,
    pub seed: u64,
    pub oracle_trials: usize,
    pub sampling: SamplingMode,
    pub slack: f64,
    pub allow_large: bool,
    /// Nyström column count (fig1).
    pub subset: usize,
    /// Length scales compared by fig1.
    pub lambdas: Vec<f64>,
    /// Scaling dimensions tried by a dimension sweep.
    pub candidates: Vec<usize>,
}

/// Keys accepted in `overrides`.
pub const OVERRIDE_KEYS: [&str; 14] = [
    "n",
    "k",
    "d",
    "kernel",
    "lambda",
    "m",
    "seed",
    "oracle_trials",
    "sampling",
    "slack",
    "allow_large",
    "subset",
    "lambdas",
    "candidates",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub overrides: BTreeMap<String, String>,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::input(format!("invalid value {v:?} for {key}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let out = v.split(',').map(|t| parse(key, t)).collect::<Result<Vec<T>>>()?;
    if out.is_empty() {
        return Err(Error::input(format!("{key} must not be empty")));
    }
    Ok(out)
}

impl ExperimentSpec {
    pub fn new(id: ExperimentId) -> Self {
        ExperimentSpec { id, overrides: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.overrides.insert(key.to_string(), value.to_string());
        self
    }

    fn preset(&self) -> (ExperimentParams, Vec<String>) {
        let base = |n, k, d, kernel: &str, lambda, m| ExperimentParams {
            n,
            k,
            d,
            kernel: kernel.to_string(),
            lambda,
            m,
            seed: 1,
            oracle_trials: 10,
            sampling: SamplingMode::SubsampleFromX,
            slack: DEFAULT_SLACK,
            allow_large: false,
            subset: 32,
            lambdas: Vec::new(),
            candidates: vec![d],
        };
        let scaled = |published: usize| format!("m = {} is the published trial count {published} divided by 8", published / 8);
        match self.id {
            ExperimentId::Ex31 | ExperimentId::Custom => (base(49, 7, 1, "gaussian", 1000.0, 32_000), vec![scaled(256_000)]),
            ExperimentId::Ex32 => (base(729, 9, 3, "gaussian", 500.0, 16_000), vec![scaled(128_000)]),
            ExperimentId::Ex33 => (
                base(729, 9, 6, "cauchy", 10_000.0, 16_000),
                vec![
                    scaled(128_000),
                    "the published plot for this example reports m = 8000; the text value 128000 is used".into(),
                    "the kernel is published on R^7 while d = 6; this preset uses d = 6".into(),
                ],
            ),
            ExperimentId::Ex34 => (
                base(729, 9, 1, "gaussian", 500.0, 16_000),
                vec![scaled(128_000), "ex3.2 with d = 1: a negative control".into()],
            ),
            ExperimentId::Fig8 => {
                let mut p = base(729, 9, 3, "gaussian", 500.0, 16_000);
                p.candidates = vec![2, 3, 4];
                (p, vec![scaled(128_000), "ex3.2 with the scaling dimension swept".into()])
            }
            ExperimentId::Fig1 => {
                let mut p = base(512, 1, 1, "gaussian", 10.0, 1);
                p.lambdas = vec![10.0, 100.0, 10_000.0];
                (p, Vec::new())
            }
            ExperimentId::Fig2 => (base(15, 5, 1, "gaussian", 1.0, 1), Vec::new()),
        }
    }

    /// Preset values with overrides applied. Unknown keys are an error.
    pub fn resolve(&self) -> Result<(ExperimentParams, Vec<String>)> {
        let (mut p, notes) = self.preset();
        for (key, v) in &self.overrides {
            match key.as_str() {
                "n" => p.n = parse(key, v)?,
                "k" => p.k = parse(key, v)?,
                "d" => {
                    p.d = parse(key, v)?;
                    if self.id != ExperimentId::Fig8 {
                        p.candidates = vec![p.d];
                    }
                }
                "kernel" => {
                    KernelSpec::from_name(v, 1.0)?;
                    p.kernel = v.clone();
                }
                "lambda" => {
                    p.lambda = parse(key, v)?;
                    p.lambdas = vec![p.lambda];
                }
                "m" => p.m = parse(key, v)?,
                "seed" => p.seed = parse(key, v)?,
                "oracle_trials" => p.oracle_trials = parse(key, v)?,
                "sampling" => {
                    p.sampling = match v.as_str() {
                        "subsample-from-x" | "subsample" => SamplingMode::SubsampleFromX,
                        "fresh-uniform" | "fresh" => SamplingMode::FreshUniform,
                        _ => return Err(Error::input(format!("invalid sampling mode {v:?}"))),
                    }
                }
                "slack" => p.slack = parse(key, v)?,
                "allow_large" => p.allow_large = parse(key, v)?,
                "subset" => p.subset = parse(key, v)?,
                "lambdas" => p.lambdas = parse_list(key, v)?,
                "candidates" => p.candidates = parse_list(key, v)?,
                _ => {
                    return Err(Error::input(format!(
                        "unknown parameter {key:?}; known: {}",
                        OVERRIDE_KEYS.join(", ")
                    )))
                }
            }
        }
        if self.id == ExperimentId::Fig1 && p.lambdas.is_empty() {
            p.lambdas = vec![p.lambda];
        }
        if p.n == 0 || p.k == 0 || p.d == 0 || p.m == 0 || p.oracle_trials == 0 {
            return Err(Error::input("n, k, d, m and oracle_trials must be positive"));
        }
        Ok((p, notes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NystromSummary {
    pub lambda: f64,
    pub subset: usize,
    /// Mean absolute log-ratio over the first 100 eigenvalues.
    pub fit_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentMatchResult {
    pub set: Vec<f64>,
    pub matched: Vec<f64>,
    pub coverage: f64,
    pub cdf_lower: Vec<f64>,
    pub cdf_upper: Vec<f64>,
    pub empirical_cdf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub d: usize,
    pub coverage: f64,
    pub mean_relative_violation: f64,
    /// `(1 − coverage) + mean relative violation`; lower is better.
    pub misfit: f64,
    pub averaged_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub argmin: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub spec_version: &'static str,
    pub experiment: ExperimentId,
    pub params: ExperimentParams,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<ConfigEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_spectrum: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantiles: Option<QuantileEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nystrom: Option<Vec<NystromSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_match: Option<MomentMatchResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepReport>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    /// Wall-clock seconds per stage. Kept out of the JSON so reports stay
    /// byte-identical across reruns.
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

struct Timer(Vec<(String, f64)>, Instant);

impl Timer {
    fn new() -> Self {
        Timer(Vec::new(), Instant::now())
    }
    fn lap(&mut self, stage: &str) {
        self.0.push((stage.to_string(), self.1.elapsed().as_secs_f64()));
        self.1 = Instant::now();
    }
}

/// The data set `X` for a run: `n` uniform points from the `(seed, Data, 0)` stream.
pub fn data_set(n: usize, d: usize, seed: u64) -> PointSet {
    sample_uniform(n, d, &mut substream(seed, Purpose::Data, 0))
}

fn kernel_of(p: &ExperimentParams) -> Result<KernelSpec> {
    KernelSpec::from_name(&p.kernel, p.lambda)
}

fn xi_of(p: &ExperimentParams) -> Result<ScalingDistribution> {
    if p.k == 1 || p.n == p.k {
        return ScalingDistribution::degenerate(1.0, p.k, p.n);
    }
    solve_xi_with(p.k, p.n, XiOptions { slack: p.slack })
}

pub fn estimator_config(p: &ExperimentParams) -> Result<EstimatorConfig> {
    Ok(EstimatorConfig {
        k: p.k,
        n: p.n,
        d: p.d,
        kernel: kernel_of(p)?,
        trials: p.m,
        seed: p.seed,
        sampling_mode: p.sampling,
        xi: xi_of(p)?,
    })
}

fn quantiles_table(q: &QuantileEstimate) -> Table {
    let mut t = Table::new(&["j", "sigma_bar", "stddev", "repeat_factor"]);
    for (j, (s, sd)) in q.averaged_eigenvalues.iter().zip(&q.per_trial_stddev).enumerate() {
        t.push(vec![(j + 1).to_string(), num(*s), num(*sd), q.repeat_factor.to_string()]);
    }
    t
}

pub fn write_quantiles_csv(q: &QuantileEstimate, path: &Path) -> Result<()> {
    quantiles_table(q).write(path)
}

pub fn write_spectrum_csv(s: &SymmetricSpectrum, path: &Path) -> Result<()> {
    let mut t = Table::new(&["j", "sigma"]);
    for (j, v) in s.values().iter().enumerate() {
        t.push(vec![(j + 1).to_string(), num(*v)]);
    }
    t.write(path)
}

pub fn write_trace_csv(d: &TraceDiagnostics, path: &Path) -> Result<()> {
    let mut t = Table::new(&["r", "ratio", "halfwidth", "sample_mean", "reference"]);
    for e in &d.entries {
        t.push(vec![e.r.to_string(), num(e.ratio), num(e.halfwidth), num(e.sample_mean), num(e.reference)]);
    }
    t.write(path)
}

fn quantile_svg(title: &str, oracle: &SymmetricSpectrum, q: &QuantileEstimate) -> String {
    spectrum_svg(
        title,
        &[
            Series { label: "averaged A".into(), values: oracle.values().to_vec(), mark: Mark::Dots, color: "#1f77b4" },
            Series { label: "averaged B, repeated".into(), values: q.steps(), mark: Mark::Steps, color: "#d62728" },
        ],
    )
}

struct Outputs<'a> {
    dir: Option<&'a Path>,
    names: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: Option<&'a Path>) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Outputs { dir, names: Vec::new() })
    }

    fn emit(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if let Some(d) = self.dir {
            write(&d.join(name))?;
            self.names.push(name.to_string());
        }
        Ok(())
    }

    fn text(&mut self, name: &str, body: String) -> Result<()> {
        self.emit(name, |p| Ok(std::fs::write(p, body)?))
    }
}

fn empty_report(id: ExperimentId, params: ExperimentParams, notes: Vec<String>) -> ExperimentReport {
    ExperimentReport {
        spec_version: SPEC_VERSION,
        experiment: id,
        params,
        notes,
        estimator: None,
        oracle_spectrum: None,
        quantiles: None,
        coverage: None,
        trace: None,
        nystrom: None,
        moment_match: None,
        sweep: None,
        artifacts: Vec::new(),
        timings: Vec::new(),
    }
}

/// Runs a preset and, when `outdir` is given, writes its CSV, SVG and
/// `report.json` files there.
pub fn run_example(spec: &ExperimentSpec, outdir: Option<&Path>) -> Result<ExperimentReport> {
    let (params, notes) = spec.resolve()?;
    let mut out = Outputs::new(outdir)?;
    let mut timer = Timer::new();
    let mut report = empty_report(spec.id, params.clone(), notes);
    match spec.id {
        ExperimentId::Fig1 => run_fig1(&params, &mut report, &mut out, &mut timer)?,
        ExperimentId::Fig2 => run_fig2(&params, &mut report, &mut out)?,
        ExperimentId::Fig8 => {
            let (sweep, _) = sweep_params(&params, &mut out, &mut timer)?;
            report.sweep = Some(sweep);
        }
        _ => run_quantiles(spec.id, &params, &mut report, &mut out, &mut timer)?,
    }
    report.artifacts = out.names.clone();
    if outdir.is_some() {
        report.artifacts.push("report.json".into());
        out.emit("report.json", |p| write_json(&report, p))?;
    }
    report.timings = timer.0;
    Ok(report)
}

fn run_quantiles(
    id: ExperimentId,
    p: &ExperimentParams,
    report: &mut ExperimentReport,
    out: &mut Outputs,
    timer: &mut Timer,
) -> Result<()> {
    let config = estimator_config(p)?;
    timer.lap("solve_xi");
    let kernel = kernel_of(p)?;
    let oracle = full_spectrum_oracle(p.n, p.d, &kernel, p.oracle_trials, p.seed, p.allow_large)?;
    timer.lap("oracle");
    let x = data_set(p.n, p.d, p.seed);
    let trials = run_trials(&config, Some(&x))?;
    timer.lap("estimator");
    let q = trials.quantiles();
    let coverage = interlacing_check(&oracle, &q.spectrum()?).coverage;
    let trace = trials.trace_diagnostics(&oracle)?;

    out.emit("quantiles.csv", |path| write_quantiles_csv(&q, path))?;
    out.emit("oracle.csv", |path| write_spectrum_csv(&oracle, path))?;
    out.emit("trace.csv", |path| write_trace_csv(&trace, path))?;
    out.text("plot.svg", quantile_svg(&format!("{} (coverage {coverage:.3})", id.name()), &oracle, &q))?;

    report.estimator = Some(config.echo());
    report.oracle_spectrum = Some(oracle.values().to_vec());
    report.quantiles = Some(q);
    report.coverage = Some(coverage);
    report.trace = Some(trace);
    Ok(())
}

fn run_fig1(p: &ExperimentParams, report: &mut ExperimentReport, out: &mut Outputs, timer: &mut Timer) -> Result<()> {
    let x = data_set(p.n, p.d, p.seed);
    let mut table = Table::new(&["lambda", "j", "exact", "nystrom"]);
    let mut summary = Vec::new();
    for &lambda in &p.lambdas {
        let kernel = KernelSpec::from_name(&p.kernel, lambda)?;
        let exact = eigenvalues_sym(&gram_matrix(&kernel, &x))?;
        let nys = nystrom_baseline(&x, &kernel, p.subset, p.seed)?;
        let shown = 100.min(p.n);
        for j in 1..=shown {
            table.push(vec![num(lambda), j.to_string(), num(exact.sigma(j)), num(nys.sigma(j))]);
        }
        let svg = spectrum_svg(
            &format!("first {shown} eigenvalues, lambda = {lambda}"),
            &[
                Series { label: "A".into(), values: exact.values()[..shown].to_vec(), mark: Mark::Dots, color: "#1f77b4" },
                Series { label: format!("Nystrom, {} columns", p.subset), values: nys.values()[..shown].to_vec(), mark: Mark::Crosses, color: "#d62728" },
            ],
        );
        out.text(&format!("nystrom_lambda_{lambda}.svg"), svg)?;
        summary.push(NystromSummary { lambda, subset: p.subset, fit_metric: spectrum_fit_metric(&exact, &nys, 100) });
        timer.lap(&format!("nystrom lambda={lambda}"));
    }
    out.emit("nystrom.csv", |path| table.write(path))?;
    report.nystrom = Some(summary);
    Ok(())
}

/// Moment-matches a set and checks the interlacing and CDF bounds.
pub fn moment_match_study(set: &[f64], k: usize) -> Result<MomentMatchResult> {
    let matched = moment_match_set(set, k)?;
    let a = SymmetricSpectrum::from_values(set.to_vec())?;
    let b = SymmetricSpectrum::from_values(matched.clone())?;
    let coverage = interlacing_check(&a, &b).coverage;
    let basis = orthopoly_from_moments(&MomentSequence::of_samples(&matched, 2 * k)?, k)?;
    let bounds = cdf_bounds(&basis)?;
    let n = set.len() as f64;
    let empirical_cdf = bounds.nodes.iter().map(|&x| set.iter().filter(|&&a| a <= x).count() as f64 / n).collect();
    Ok(MomentMatchResult {
        set: set.to_vec(),
        matched,
        coverage,
        cdf_lower: bounds.lower,
        cdf_upper: bounds.upper,
        empirical_cdf,
    })
}

fn run_fig2(p: &ExperimentParams, report: &mut ExperimentReport, out: &mut Outputs) -> Result<()> {
    let r = moment_match_study(&REFERENCE_SET, p.k)?;
    let mut t = Table::new(&["set", "i", "value"]);
    for (i, v) in r.set.iter().enumerate() {
        t.push(vec!["S".into(), (i + 1).to_string(), num(*v)]);
    }
    for (i, v) in r.matched.iter().enumerate() {
        t.push(vec!["T".into(), (i + 1).to_string(), num(*v)]);
    }
    out.emit("moment_match.csv", |path| t.write(path))?;
    let mut c = Table::new(&["i", "node", "lower", "upper", "empirical_cdf"]);
    for i in 0..r.matched.len() {
        c.push(vec![(i + 1).to_string(), num(r.matched[i]), num(r.cdf_lower[i]), num(r.cdf_upper[i]), num(r.empirical_cdf[i])]);
    }
    out.emit("cdf_bounds.csv", |path| c.write(path))?;
    let mut s_desc = r.set.clone();
    s_desc.reverse();
    let mut t_desc: Vec<f64> = r.matched.iter().rev().copied().collect();
    let rep = r.set.len() / r.matched.len().max(1);
    if rep * r.matched.len() == r.set.len() {
        t_desc = t_desc.iter().flat_map(|&v| std::iter::repeat_n(v, rep)).collect();
    }
    out.text(
        "fig2.svg",
        spectrum_svg(
            "S and its moment-matched T",
            &[
                Series { label: "S".into(), values: s_desc, mark: Mark::Dots, color: "#1f77b4" },
                Series { label: "T, repeated".into(), values: t_desc, mark: Mark::Steps, color: "#d62728" },
            ],
        ),
    )?;
    report.moment_match = Some(r);
    Ok(())
}

/// Runs the estimator once per candidate scaling dimension on a fixed data
/// set and scores each against `reference`.
pub fn dimension_sweep_on(
    data: &PointSet,
    reference: &SymmetricSpectrum,
    config: &EstimatorConfig,
    candidates: &[usize],
) -> Result<(SweepReport, Vec<QuantileEstimate>)> {
    if candidates.is_empty() {
        return Err(Error::input("need at least one candidate dimension"));
    }
    let mut entries = Vec::with_capacity(candidates.len());
    let mut estimates = Vec::with_capacity(candidates.len());
    for &d in candidates {
        if d == 0 {
            return Err(Error::input("candidate dimensions must be positive"));
        }
        let mut c = config.clone();
        c.d = d;
        c.sampling_mode = SamplingMode::SubsampleFromX;
        let q = run_trials(&c, Some(data))?.quantiles();
        let check = interlacing_check(reference, &q.spectrum()?);
        let violation = check.mean_relative_violation();
        entries.push(SweepEntry {
            d,
            coverage: check.coverage,
            mean_relative_violation: violation,
            misfit: (1.0 - check.coverage) + violation,
            averaged_eigenvalues: q.averaged_eigenvalues.clone(),
        });
        estimates.push(q);
    }
    let best = entries
        .iter()
        .min_by(|a, b| a.misfit.total_cmp(&b.misfit))
        .map(|e| e.d)
        .expect("non-empty");
    Ok((SweepReport { entries, argmin: best }, estimates))
}

fn sweep_params(p: &ExperimentParams, out: &mut Outputs, timer: &mut Timer) -> Result<(SweepReport, SymmetricSpectrum)> {
    let config = estimator_config(p)?;
    let kernel = kernel_of(p)?;
    let oracle = full_spectrum_oracle(p.n, p.d, &kernel, p.oracle_trials, p.seed, p.allow_large)?;
    timer.lap("oracle");
    let x = data_set(p.n, p.d, p.seed);
    let (sweep, estimates) = dimension_sweep_on(&x, &oracle, &config, &p.candidates)?;
    timer.lap("sweep");
    let mut t = Table::new(&["d", "coverage", "mean_relative_violation", "misfit"]);
    for e in &sweep.entries {
        t.push(vec![e.d.to_string(), num(e.coverage), num(e.mean_relative_violation), num(e.misfit)]);
    }
    out.emit("sweep.csv", |path| t.write(path))?;
    out.emit("oracle.csv", |path| write_spectrum_csv(&oracle, path))?;
    for (e, q) in sweep.entries.iter().zip(&estimates) {
        out.emit(&format!("quantiles_d{}.csv", e.d), |path| write_quantiles_csv(q, path))?;
        out.text(&format!("sweep_d{}.svg", e.d), quantile_svg(&format!("scaling dimension {} (misfit {:.3})", e.d, e.misfit), &oracle, q))?;
    }
    Ok((sweep, oracle))
}

/// Dimension sweep over `candidates` on the configuration `base` resolves to.
pub fn dimension_sweep(base: &ExperimentSpec, candidates: &[usize]) -> Result<SweepReport> {
    dimension_sweep_report(base, candidates, None).map(|r| r.sweep.expect("sweep report"))
}

/// As [`dimension_sweep`], returning a full report and writing files to `outdir`.
pub fn dimension_sweep_report(base: &ExperimentSpec, candidates: &[usize], outdir: Option<&Path>) -> Result<ExperimentReport> {
    let (mut params, mut notes) = base.resolve()?;
    params.candidates = candidates.to_vec();
    notes.push(format!("dimension sweep based on {}", base.id.name()));
    let mut out = Outputs::new(outdir)?;
    let mut timer = Timer::new();
    let mut report = empty_report(base.id, params.clone(), notes);
    let (sweep, _) = sweep_params(&params, &mut out, &mut timer)?;
    report.sweep = Some(sweep);
    report.artifacts = out.names.clone();
    if outdir.is_some() {
        report.artifacts.push("report.json".into());
        out.emit("report.json", |p| write_json(&report, p))?;
    }
    report.timings = timer.0;
    Ok(report)
}
