//! Acceptance gate. Each criterion prints one `PASS`/`FAIL` line with the
//! measured values next to the pinned thresholds. Runs without the libtest
//! harness so the lines are never captured.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use kquant::rng::{substream, Purpose};
use kquant::{
    canonical_walk, cdf_bounds, check_stieltjes_solvable, christoffel, data_set, decay_ratio, dimension_sweep,
    eigenvalues_sym, epsilon_estimate, gram_matrix, hankel_matrices, interlacing_check, moment_match_set,
    moment_residuals, nystrom_baseline, nystrom_with_columns, orthopoly_from_moments, run_example, solve_xi,
    spectrum_fit_metric, xi_moments, DecayConfig, ExperimentId, ExperimentSpec, KernelSpec, MomentSequence,
    SymmetricSpectrum, REFERENCE_SET,
};
use rand::Rng;

fn verdict(id: u32, name: &str, pass: bool, elapsed: Duration, limit: Duration, detail: String) {
    let pass_time = elapsed <= limit;
    let ok = pass && pass_time;
    println!(
        "{} criterion {id} ({name}): {detail}; runtime {:.2}s (limit {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(pass_time, "criterion {id} exceeded its runtime limit");
}

const MATCH_REL_TOL: f64 = 1e-3;

fn criterion_01_moment_match_reference_set() {
    let expected = [1.51216, 6.52312, 9.54601, 20.5897, 30.1624];
    let start = Instant::now();
    let t = moment_match_set(&REFERENCE_SET, 5).unwrap();
    let a = SymmetricSpectrum::from_values(REFERENCE_SET.to_vec()).unwrap();
    let coverage = interlacing_check(&a, &SymmetricSpectrum::from_values(t.clone()).unwrap()).coverage;
    let elapsed = start.elapsed();
    let worst = t.iter().zip(expected).map(|(x, e)| ((x - e) / e).abs()).fold(0.0, f64::max);
    verdict(
        1,
        "moment matching of the 15-point set",
        worst <= MATCH_REL_TOL && coverage == 1.0,
        elapsed,
        Duration::from_secs(1),
        format!("T = {t:.5?}, worst relative error {worst:.2e} (tol {MATCH_REL_TOL:e}), coverage {coverage}"),
    );
}

const PUBLISHED_RESIDUAL_TOL: f64 = 5e-3;
const SOLVED_RESIDUAL_TOL: f64 = 1e-8;

fn criterion_02_scaling_distribution_moment_system() {
    let start = Instant::now();
    let m = xi_moments(7, 49).unwrap();
    let published = moment_residuals(
        &m,
        &[4.8651, 9.6827, 24.519, 130.90],
        &[0.41166, 0.56810, 0.020241, 1.4709e-6],
    );
    let solved = solve_xi(7, 49).unwrap();
    let ours = moment_residuals(&m, &solved.atoms, &solved.weights);
    let elapsed = start.elapsed();
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let (p, o) = (max_abs(&published), max_abs(&ours));
    verdict(
        2,
        "scaling distribution for k=7, n=49",
        p <= PUBLISHED_RESIDUAL_TOL && o <= SOLVED_RESIDUAL_TOL,
        elapsed,
        Duration::from_secs(5),
        format!(
            "published solution residual {p:.2e} (tol {PUBLISHED_RESIDUAL_TOL:e}), solved residual {o:.2e} (tol {SOLVED_RESIDUAL_TOL:e}), atoms {:.4?}",
            solved.atoms
        ),
    );
}

fn criterion_03_hankel_solvability_grid() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst = f64::INFINITY;
    for k in (3..=15).step_by(2) {
        for ratio in 2..=10 {
            let c = check_stieltjes_solvable(&hankel_matrices(&xi_moments(k, k * ratio).unwrap()));
            worst = worst.min(c.h_min_eigenvalue).min(c.h_prime_min_eigenvalue);
            if !c.solvable {
                failures.push((k, k * ratio));
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        3,
        "Hankel positivity for odd k in 3..15, n/k in 2..10",
        failures.is_empty(),
        elapsed,
        Duration::from_secs(10),
        format!("63 cases, failures {failures:?}, smallest scaled eigenvalue {worst:.3e}"),
    );
}

const ORTHONORMALITY_TOL: f64 = 1e-6;
const ROOT_TOL: f64 = 1e-6;
const CHRISTOFFEL_TOL: f64 = 1e-8;
const SANDWICH_TOL: f64 = 1e-9;
const SUITE_SEED: u64 = 4;
const SUITE_SETS: usize = 50;

fn criterion_04_orthopoly_suite() {
    let start = Instant::now();
    let mut rng = substream(SUITE_SEED, Purpose::Custom(4), 0);
    let (mut used, mut skipped) = (0, 0);
    let (mut orth, mut root, mut chr) = (0.0f64, 0.0f64, 0.0f64);
    let mut sandwich_failures = Vec::new();
    while used < SUITE_SETS {
        let k = rng.random_range(1..=7usize);
        let m = rng.random_range(1..=20 / k);
        let s: Vec<f64> = (0..k * m).map(|_| rng.random_range(0.0..10.0)).collect();
        // Sets outside the hypotheses: no nonnegative real match, or a
        // match with coincident values (fewer than k distinct nodes).
        let Ok(t) = moment_match_set(&s, k) else {
            skipped += 1;
            continue;
        };
        let Ok(basis) = orthopoly_from_moments(&MomentSequence::of_samples(&t, 2 * k).unwrap(), k) else {
            skipped += 1;
            continue;
        };
        used += 1;
        let vals: Vec<Vec<f64>> = t.iter().map(|&x| basis.evaluate(x)).collect();
        for i in 0..k {
            for j in 0..k {
                let g = vals.iter().map(|v| v[i] * v[j]).sum::<f64>() / k as f64;
                orth = orth.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        let (lo, hi) = (t[0], t[k - 1]);
        let hull_max = (0..=1000)
            .map(|i| basis.p_k(lo + (hi - lo) * i as f64 / 1000.0).abs())
            .fold(f64::MIN_POSITIVE, f64::max);
        for v in &vals {
            root = root.max(v[k].abs() / hull_max);
        }
        for &x in &t {
            chr = chr.max((christoffel(&basis, x) - 1.0 / k as f64).abs());
        }
        let flags = cdf_bounds(&basis).unwrap().sandwich_flags(&s, SANDWICH_TOL);
        if !flags.iter().all(|&f| f) {
            sandwich_failures.push((k, m));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        4,
        "orthogonal polynomial suite on 50 random sets",
        orth <= ORTHONORMALITY_TOL && root <= ROOT_TOL && chr <= CHRISTOFFEL_TOL && sandwich_failures.is_empty(),
        elapsed,
        Duration::from_secs(30),
        format!(
            "{used} sets ({skipped} skipped), orthonormality {orth:.2e} (tol {ORTHONORMALITY_TOL:e}), \
             root {root:.2e} (tol {ROOT_TOL:e}), Christoffel {chr:.2e} (tol {CHRISTOFFEL_TOL:e}), \
             sandwich failures (k, n/k) {sandwich_failures:?}"
        ),
    );
}

const DECAY_SAMPLES: usize = 1_000_000;
const DECAY_EPS_MAX: f64 = 0.05;
const WIDE_RATIO_TOL: f64 = 0.03;

/// `ε̂` for gaussian λ = 1000 over `l ≤ 3` and the tenths grid.
fn narrow_epsilon() -> f64 {
    static EPS: OnceLock<f64> = OnceLock::new();
    *EPS.get_or_init(|| {
        let kernel = KernelSpec::gaussian(1000.0).unwrap();
        epsilon_estimate(&kernel, &DecayConfig::new(3, DecayConfig::tenths(), DECAY_SAMPLES, 1))
            .unwrap()
            .epsilon_hat
    })
}

fn criterion_05_decay_verifier() {
    let start = Instant::now();
    let eps = narrow_epsilon();
    let wide = KernelSpec::gaussian(1e-4).unwrap();
    let walk = canonical_walk(2, 2).unwrap();
    let r = decay_ratio(&wide, &walk, 0.5, DECAY_SAMPLES, &mut substream(1, Purpose::Decay, 0)).unwrap();
    let elapsed = start.elapsed();
    verdict(
        5,
        "decay condition, narrow and wide gaussian",
        eps <= DECAY_EPS_MAX && (r.ratio - 0.25).abs() <= WIDE_RATIO_TOL,
        elapsed,
        Duration::from_secs(120),
        format!(
            "epsilon_hat {eps:.4} (max {DECAY_EPS_MAX}), wide ratio at s=0.5, l=2: {:.4} ± {:.4} (target 0.25 ± {WIDE_RATIO_TOL})",
            r.ratio, r.halfwidth
        ),
    );
}

const EX31_COVERAGE_MIN: f64 = 0.80;

fn criterion_06_small_gaussian_example() {
    let eps = narrow_epsilon();
    let start = Instant::now();
    let report = run_example(&ExperimentSpec::new(ExperimentId::Ex31).with("m", 32_000), None).unwrap();
    let elapsed = start.elapsed();
    let coverage = report.coverage.unwrap();
    let trace = report.trace.unwrap();
    let outside: Vec<String> = trace
        .entries
        .iter()
        .filter(|e| (e.ratio - 1.0).abs() > eps + e.halfwidth)
        .map(|e| format!("r={} {:.3}±{:.3}", e.r, e.ratio, e.halfwidth))
        .collect();
    let all: Vec<String> = trace.entries.iter().map(|e| format!("{:.3}", e.ratio)).collect();
    verdict(
        6,
        "n=49, k=7, d=1 gaussian run at m=32000",
        coverage >= EX31_COVERAGE_MIN && outside.is_empty(),
        elapsed,
        Duration::from_secs(180),
        format!(
            "coverage {coverage:.4} (min {EX31_COVERAGE_MIN}), epsilon_hat {eps:.4}, trace ratios [{}], outside band: {outside:?}",
            all.join(", ")
        ),
    );
}

fn criterion_07_negative_control() {
    let start = Instant::now();
    let good = run_example(&ExperimentSpec::new(ExperimentId::Ex32).with("m", 16_000), None).unwrap();
    let bad = run_example(&ExperimentSpec::new(ExperimentId::Ex34).with("m", 16_000), None).unwrap();
    let elapsed = start.elapsed();
    let (cg, cb) = (good.coverage.unwrap(), bad.coverage.unwrap());
    let ratios = bad.trace.unwrap().ratios();
    let escaped = ratios.iter().any(|r| !(0.8..=1.2).contains(r));
    verdict(
        7,
        "wrong scaling dimension as a negative control",
        cb < cg && escaped,
        elapsed,
        Duration::from_secs(300),
        format!("coverage d=1 {cb:.4} vs d=3 {cg:.4}, d=1 trace ratios {ratios:.3?}"),
    );
}

const NYSTROM_EXACT_TOL: f64 = 1e-8;

fn criterion_08_nystrom_baseline() {
    let start = Instant::now();
    let x = data_set(512, 1, 1);
    let mut metrics = Vec::new();
    let mut exact_err = 0.0f64;
    for lambda in [10.0, 100.0, 10_000.0] {
        let kernel = KernelSpec::gaussian(lambda).unwrap();
        let exact = eigenvalues_sym(&gram_matrix(&kernel, &x)).unwrap();
        metrics.push(spectrum_fit_metric(&exact, &nystrom_baseline(&x, &kernel, 32, 1).unwrap(), 100));
        let all: Vec<usize> = (0..512).collect();
        let full = nystrom_with_columns(&x, &kernel, &all).unwrap();
        for (a, b) in exact.values().iter().zip(full.values()) {
            exact_err = exact_err.max((a - b).abs() / exact.max());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        8,
        "Nystrom baseline with 32 columns",
        exact_err <= NYSTROM_EXACT_TOL && metrics[0] < metrics[1] && metrics[1] < metrics[2],
        elapsed,
        Duration::from_secs(60),
        format!("full-subset error {exact_err:.2e} (tol {NYSTROM_EXACT_TOL:e}), fit metric for lambda 10/100/10000: {metrics:.4?}"),
    );
}

fn criterion_09_dimension_sweep() {
    let start = Instant::now();
    let sweep = dimension_sweep(&ExperimentSpec::new(ExperimentId::Ex32).with("m", 16_000), &[2, 3, 4]).unwrap();
    let elapsed = start.elapsed();
    let scores: Vec<String> = sweep
        .entries
        .iter()
        .map(|e| format!("d={} misfit {:.4} (coverage {:.4})", e.d, e.misfit, e.coverage))
        .collect();
    verdict(
        9,
        "scaling dimension sweep on the n=729, d=3 configuration",
        sweep.argmin == 3,
        elapsed,
        Duration::from_secs(600),
        format!("argmin {} from [{}]", sweep.argmin, scores.join("; ")),
    );
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn run_all_subcommands(workers: usize, root: &Path) {
    let bin = env!("CARGO_BIN_EXE_kquant");
    let w = workers.to_string();
    let p = |name: &str| root.join(name).to_string_lossy().into_owned();
    let xi = p("xi.json");
    let calls: Vec<Vec<String>> = vec![
        vec!["solve-xi", "--k", "7", "--n", "49", "--out", &xi],
        vec!["estimate", "--k", "7", "--n", "49", "--d", "1", "--kernel", "gaussian", "--lambda", "1000", "--trials", "3000", "--seed", "3", "--xi", &xi, "--out", &p("est.json")],
        vec!["estimate", "--k", "7", "--n", "49", "--d", "1", "--kernel", "gaussian", "--lambda", "1000", "--trials", "3000", "--seed", "3", "--xi", &xi, "--out", &p("est.csv")],
        vec!["estimate", "--k", "3", "--n", "27", "--d", "2", "--kernel", "cauchy", "--lambda", "50", "--trials", "3000", "--seed", "3", "--fresh", "--out", &p("fresh.csv")],
        vec!["oracle", "--n", "200", "--d", "2", "--kernel", "cauchy", "--lambda", "100", "--trials", "3", "--seed", "3", "--out", &p("oracle.json")],
        vec!["oracle", "--n", "200", "--d", "2", "--kernel", "cauchy", "--lambda", "100", "--trials", "3", "--seed", "3", "--out", &p("oracle.csv")],
        vec!["verify-decay", "--kernel", "gaussian", "--lambda", "1000", "--lmax", "3", "--samples", "20000", "--seed", "3", "--out", &p("decay.json")],
        vec!["verify-decay", "--kernel", "cauchy", "--lambda", "1000", "--lmax", "2", "--sgrid", "0.25,0.5,1", "--samples", "20000", "--seed", "3", "--out", &p("decay.csv")],
        vec!["example", "--id", "fig2", "--outdir", &p("fig2")],
        vec!["example", "--id", "fig1", "--set", "n=256", "--outdir", &p("fig1")],
        vec!["example", "--id", "ex3.1", "--set", "m=4000", "--set", "oracle_trials=3", "--outdir", &p("ex31")],
        vec!["example", "--id", "ex3.3", "--set", "n=81", "--set", "m=2000", "--set", "oracle_trials=2", "--outdir", &p("ex33")],
        vec!["dim-sweep", "--candidates", "1,2,3", "--set", "n=81", "--set", "m=2000", "--set", "oracle_trials=2", "--outdir", &p("sweep")],
    ]
    .into_iter()
    .map(|c| c.into_iter().map(String::from).collect())
    .collect();
    for args in calls {
        let status = Command::new(bin).arg("--workers").arg(&w).args(&args).output().unwrap();
        assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
    }
}

fn criterion_10_determinism() {
    let start = Instant::now();
    let runs: Vec<(usize, tempfile::TempDir)> =
        [1, 1, 4, 4].into_iter().map(|w| (w, tempfile::tempdir().unwrap())).collect();
    for (w, dir) in &runs {
        run_all_subcommands(*w, dir.path());
    }
    let snaps: Vec<_> = runs.iter().map(|(_, d)| snapshot(d.path())).collect();
    let reference = &snaps[0];
    let mut differing = Vec::new();
    for (i, s) in snaps.iter().enumerate().skip(1) {
        if s.keys().ne(reference.keys()) {
            differing.push(format!("run {i}: file sets differ"));
            continue;
        }
        for (name, bytes) in s {
            if reference[name] != *bytes {
                differing.push(format!("run {i} (workers {}): {name}", runs[i].0));
            }
        }
    }
    let elapsed = start.elapsed();
    let files = reference.keys().filter(|n| n.ends_with(".csv") || n.ends_with(".json")).count();
    verdict(
        10,
        "bitwise determinism across reruns and worker counts 1 and 4",
        differing.is_empty() && files > 0,
        elapsed,
        Duration::from_secs(600),
        format!("{} files per run ({files} CSV/JSON), 4 runs, differences {differing:?}", reference.len()),
    );
}

fn main() {
    let criteria: [(&str, fn()); 10] = [
        ("criterion_01_moment_match_reference_set", criterion_01_moment_match_reference_set),
        ("criterion_02_scaling_distribution_moment_system", criterion_02_scaling_distribution_moment_system),
        ("criterion_03_hankel_solvability_grid", criterion_03_hankel_solvability_grid),
        ("criterion_04_orthopoly_suite", criterion_04_orthopoly_suite),
        ("criterion_05_decay_verifier", criterion_05_decay_verifier),
        ("criterion_06_small_gaussian_example", criterion_06_small_gaussian_example),
        ("criterion_07_negative_control", criterion_07_negative_control),
        ("criterion_08_nystrom_baseline", criterion_08_nystrom_baseline),
        ("criterion_09_dimension_sweep", criterion_09_dimension_sweep),
        ("criterion_10_determinism", criterion_10_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    std::panic::set_hook(Box::new(|info| eprintln!("  {info}")));
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|pat| name.contains(pat.as_str())) {
            continue;
        }
        ran += 1;
        if std::panic::catch_unwind(f).is_err() {
            failed.push(name);
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
