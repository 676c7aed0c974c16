//! Subquadratic estimates of every eigenvalue quantile of a kernel Gram
//! matrix `A = κ(X, X)`, from the averaged spectra of many small matrices
//! `B = κ(Y, Y)` built on rescaled random subsamples.
//!
//! The pieces: moment matching and interlacing checks for finite sets
//! ([`moment_match_set`], [`interlacing_check`], [`cdf_bounds`]), the
//! scaling distribution ([`solve_xi`]), the estimator itself
//! ([`estimate_quantiles`]), a Monte Carlo check of the kernel's decay
//! condition ([`epsilon_estimate`]) and the experiment presets
//! ([`run_example`]).

// Index loops mirror the matrix algebra, and `!(x > tol)` deliberately treats NaN as a failure.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

mod decay;
mod eigen;
mod error;
mod estimator;
mod experiment;
mod interlace;
mod kernel;
mod moments;
mod oracle;
mod orthopoly;
mod poly;
pub mod report;
pub mod precision;
pub mod rng;
mod xi;

pub use eigen::{eigen_sym, eigenvalues_sym, jacobi_eigenvalues, SymmetricSpectrum};
pub use error::{Error, Result};
pub use kernel::{gram_matrix, kernel_eval, sample_uniform, KernelEcho, KernelFamily, KernelSpec, PointSet};
pub use moments::{moment_match_set, spectral_moments, MomentSequence, Normalization};
pub use interlace::{interlacing_check, InterlacingReport};
pub use orthopoly::{cdf_bounds, christoffel, orthopoly_from_moments, CdfBounds, OrthoPolyBasis};
pub use xi::{
    check_stieltjes_solvable, closure_rule_name, hankel_matrices, moment_residuals, pseudo_moment_min, sample_scaling,
    solve_xi, solve_xi_with, xi_moments, HankelPair, ScalingDistribution, StieltjesCheck, XiMoments, XiOptions,
    DEFAULT_SLACK, MOMENT_TOLERANCE,
};
pub use estimator::{
    default_trials, estimate_quantiles, quantile_report, run_trials, sample_b, trace_ratio_diagnostic, ConfigEcho,
    EstimatorConfig, QuantileEstimate, QuantileReport, SamplingMode, TraceDiagnostics, TraceRatio, TrialSet, Z95,
};
pub use decay::{
    canonical_walk, decay_ratio, epsilon_estimate, gaussian_limit_check, random_walk, DecayConfig, DecayEntry,
    DecayReport, RatioEstimate, Walk, MIN_SAMPLES,
};
pub use oracle::{
    full_spectrum_oracle, nystrom_baseline, nystrom_with_columns, spectrum_fit_metric, NystromRun, ORACLE_MAX_N,
    PINV_TOLERANCE,
};
pub use experiment::{
    data_set, dimension_sweep, dimension_sweep_on, dimension_sweep_report, estimator_config, moment_match_study,
    run_example, write_quantiles_csv, write_spectrum_csv, write_trace_csv, ExperimentId, ExperimentParams,
    ExperimentReport, ExperimentSpec, MomentMatchResult, NystromSummary, SweepEntry, SweepReport, REFERENCE_SET,
    OVERRIDE_KEYS,
};
