use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use kquant::report::{read_points, write_json, SPEC_VERSION};
use kquant::{
    data_set, default_trials, dimension_sweep_report, epsilon_estimate, full_spectrum_oracle,
    run_example, run_trials, solve_xi_with, write_quantiles_csv, write_spectrum_csv, DecayConfig, EstimatorConfig,
    ExperimentId, ExperimentReport, ExperimentSpec, KernelSpec, SamplingMode, ScalingDistribution, XiOptions,
    DEFAULT_SLACK,
};

/// Eigenvalue quantile estimation for kernel Gram matrices by moment-matched subsampling.
#[derive(Parser, Debug)]
#[command(name = "kquant", version)]
struct Cli {
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// TOML file with `workers` and a `[set]` table of experiment overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the scaling distribution and write it as JSON.
    SolveXi {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// Relative slack on the closing pseudo-moment.
        #[arg(long, default_value_t = DEFAULT_SLACK)]
        slack: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the eigenvalue quantiles of an n-point Gram matrix.
    Estimate(EstimateArgs),
    /// Average the exact spectra of fresh n-point Gram matrices.
    Oracle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum)]
        kernel: Family,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Lift the n ≤ 5000 guard.
        #[arg(long)]
        allow_large: bool,
        /// `.csv` for a table, anything else for JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo check of the kernel's decay condition.
    VerifyDecay {
        #[arg(long, value_enum)]
        kernel: Family,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        lmax: usize,
        /// Comma-separated s values in (0, 1].
        #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
        sgrid: String,
        #[arg(long, default_value_t = kquant::MIN_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Longest walk checked; defaults to lmax.
        #[arg(long)]
        rmax: Option<usize>,
        /// Extra random walks per (r, l) with r > l.
        #[arg(long, default_value_t = 8)]
        random_walks: usize,
        /// Vertex dimension.
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// `.csv` for a table, anything else for JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment preset.
    Example {
        #[arg(long)]
        id: String,
        /// Override a preset parameter, e.g. `--set m=8000`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Run the estimator for several scaling dimensions and score each.
    DimSweep {
        /// Comma-separated candidate dimensions.
        #[arg(long)]
        candidates: String,
        /// Preset the sweep starts from.
        #[arg(long, default_value = "ex3.2")]
        base: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        outdir: PathBuf,
    },
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    /// Scaling dimension of the data.
    #[arg(long)]
    d: usize,
    #[arg(long, value_enum)]
    kernel: Family,
    #[arg(long)]
    lambda: f64,
    /// Defaults to 2000·k².
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Scaling distribution from `solve-xi`; solved on the fly when absent.
    #[arg(long)]
    xi: Option<PathBuf>,
    /// Draw fresh uniform points instead of subsampling the data set.
    #[arg(long)]
    fresh: bool,
    /// Data set file (comma or whitespace separated rows); a uniform
    /// sample from the seed is used when absent.
    #[arg(long)]
    points: Option<PathBuf>,
    /// `.csv` for a table, anything else for JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Gaussian,
    Cauchy,
}

impl Family {
    fn kernel(self, lambda: f64) -> kquant::Result<KernelSpec> {
        match self {
            Family::Gaussian => KernelSpec::gaussian(lambda),
            Family::Cauchy => KernelSpec::cauchy(lambda),
        }
    }
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    workers: Option<usize>,
    #[serde(default)]
    set: BTreeMap<String, toml::Value>,
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    spec_version: &'static str,
    command: &'a str,
    config: C,
    result: R,
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn parse_csv_list<T: std::str::FromStr>(what: &str, s: &str) -> anyhow::Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| input(format!("invalid {what} entry {t:?}"))))
        .collect()
}

fn input(msg: impl Into<String>) -> anyhow::Error {
    kquant::Error::input(msg).into()
}

fn overrides(config: &ConfigFile, set: &[String]) -> anyhow::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (k, v) in &config.set {
        let value = match v {
            toml::Value::String(s) => s.clone(),
            toml::Value::Array(items) => items
                .iter()
                .map(|i| match i {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        };
        out.insert(k.clone(), value);
    }
    for item in set {
        let (k, v) = item.split_once('=').ok_or_else(|| input(format!("--set expects KEY=VALUE, got {item:?}")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn report_timings(timings: &[(String, f64)]) {
    for (stage, secs) in timings {
        eprintln!("{stage}: {secs:.3} s");
    }
}

fn finish_experiment(report: &ExperimentReport, outdir: &Path) {
    report_timings(&report.timings);
    if let Some(c) = report.coverage {
        eprintln!("coverage: {c:.4}");
    }
    if let Some(s) = &report.sweep {
        eprintln!("argmin d: {}", s.argmin);
    }
    eprintln!("wrote {} files to {}", report.artifacts.len(), outdir.display());
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
                .map_err(|e| input(format!("{e:#}")))?;
            toml::from_str::<ConfigFile>(&text).map_err(|e| input(format!("{}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    if let Some(w) = cli.workers.or(config.workers) {
        if w == 0 {
            return Err(input("--workers must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    let started = Instant::now();
    match cli.command {
        Command::SolveXi { k, n, slack, out } => {
            let dist = solve_xi_with(k, n, XiOptions { slack })?;
            dist.write_json(&out)?;
            eprintln!("{} atoms, moment residual {:.3e}", dist.atoms.len(), dist.moment_residual);
        }
        Command::Estimate(args) => estimate(args)?,
        Command::Oracle { n, d, kernel, lambda, trials, seed, allow_large, out } => {
            let spec = kernel.kernel(lambda)?;
            let spectrum = full_spectrum_oracle(n, d, &spec, trials, seed, allow_large)?;
            if is_csv(&out) {
                write_spectrum_csv(&spectrum, &out)?;
            } else {
                #[derive(Serialize)]
                struct Echo {
                    n: usize,
                    d: usize,
                    kernel: kquant::KernelEcho,
                    trials: usize,
                    seed: u64,
                }
                let env = Envelope {
                    spec_version: SPEC_VERSION,
                    command: "oracle",
                    config: Echo { n, d, kernel: spec.echo(), trials, seed },
                    result: spectrum.values(),
                };
                write_json(&env, &out)?;
            }
        }
        Command::VerifyDecay { kernel, lambda, lmax, sgrid, samples, seed, rmax, random_walks, dim, out } => {
            let spec = kernel.kernel(lambda)?;
            let mut cfg = DecayConfig::new(lmax, parse_csv_list("s grid", &sgrid)?, samples, seed);
            cfg.r_max = rmax;
            cfg.random_walks = random_walks;
            cfg.dim = dim;
            let report = epsilon_estimate(&spec, &cfg)?;
            eprintln!("epsilon_hat: {:.5} (t = {})", report.epsilon_hat, report.t_effective);
            if is_csv(&out) {
                let mut t = kquant::report::Table::new(&["l", "s", "ratio", "halfwidth", "r", "walk", "walks_checked"]);
                for e in &report.entries {
                    t.push(vec![
                        e.l.to_string(),
                        kquant::report::num(e.s),
                        kquant::report::num(e.ratio),
                        kquant::report::num(e.halfwidth),
                        e.r.to_string(),
                        e.walk.clone(),
                        e.walks_checked.to_string(),
                    ]);
                }
                t.write(&out)?;
            } else {
                #[derive(Serialize)]
                struct Echo {
                    kernel: kquant::KernelEcho,
                    l_max: usize,
                    r_max: usize,
                    s_grid: Vec<f64>,
                    samples: usize,
                    seed: u64,
                    random_walks: usize,
                    dim: usize,
                }
                let config = Echo {
                    kernel: spec.echo(),
                    l_max: lmax,
                    r_max: rmax.unwrap_or(lmax).max(lmax),
                    s_grid: cfg.s_grid.clone(),
                    samples,
                    seed,
                    random_walks,
                    dim,
                };
                write_json(&Envelope { spec_version: SPEC_VERSION, command: "verify-decay", config, result: report }, &out)?;
            }
        }
        Command::Example { id, set, outdir } => {
            let spec = ExperimentSpec { id: id.parse::<ExperimentId>()?, overrides: overrides(&config, &set)? };
            let report = run_example(&spec, Some(&outdir))?;
            finish_experiment(&report, &outdir);
        }
        Command::DimSweep { candidates, base, set, outdir } => {
            let cands: Vec<usize> = parse_csv_list("candidate", &candidates)?;
            let spec = ExperimentSpec { id: base.parse::<ExperimentId>()?, overrides: overrides(&config, &set)? };
            let report = dimension_sweep_report(&spec, &cands, Some(&outdir))?;
            finish_experiment(&report, &outdir);
        }
    }
    eprintln!("total: {:.3} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn estimate(args: EstimateArgs) -> anyhow::Result<()> {
    let kernel = args.kernel.kernel(args.lambda)?;
    let xi = match &args.xi {
        Some(path) => {
            let dist = ScalingDistribution::read_json(path)?;
            if dist.k != args.k || dist.n != args.n {
                return Err(input(format!(
                    "{} was solved for k={}, n={}, not k={}, n={}",
                    path.display(),
                    dist.k,
                    dist.n,
                    args.k,
                    args.n
                )));
            }
            dist
        }
        None if args.k == 1 || args.k == args.n => ScalingDistribution::degenerate(1.0, args.k, args.n)?,
        None => solve_xi_with(args.k, args.n, XiOptions::default())?,
    };
    let x = match (&args.points, args.fresh) {
        (Some(_), true) => return Err(input("--points and --fresh are mutually exclusive")),
        (Some(path), false) => {
            let x = read_points(path)?;
            if x.len() != args.n {
                return Err(input(format!("{} has {} points, expected n = {}", path.display(), x.len(), args.n)));
            }
            Some(x)
        }
        (None, false) => Some(data_set(args.n, args.d, args.seed)),
        (None, true) => None,
    };
    let config = EstimatorConfig {
        k: args.k,
        n: args.n,
        d: args.d,
        kernel,
        trials: args.trials.unwrap_or_else(|| default_trials(args.k)),
        seed: args.seed,
        sampling_mode: if args.fresh { SamplingMode::FreshUniform } else { SamplingMode::SubsampleFromX },
        xi,
    };
    let trials = run_trials(&config, x.as_ref())?;
    let q = trials.quantiles();
    if is_csv(&args.out) {
        write_quantiles_csv(&q, &args.out)?;
    } else {
        #[derive(Serialize)]
        struct Result<'a> {
            quantiles: &'a kquant::QuantileEstimate,
            trace_means: Vec<(f64, f64)>,
        }
        let env = Envelope {
            spec_version: SPEC_VERSION,
            command: "estimate",
            config: config.echo(),
            result: Result { quantiles: &q, trace_means: trials.trace_means() },
        };
        write_json(&env, &args.out)?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<kquant::Error>() {
        Some(e) if !e.is_input() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
