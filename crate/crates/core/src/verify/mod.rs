//! Inequality checkers and the verification suites.
//!
//! Every suite returns a [`VerificationReport`] sorted by check id. Margins
//! are signed so that `margin >= -tol` means the check holds.

mod auxiliary;
mod block;
mod common;
mod harmonic;

pub use auxiliary::{suite_auxiliary, suite_realization};
pub use block::{block_summary, suite_block, BlockSummaryRow};
pub use harmonic::suite_harmonic;

use thiserror::Error;

use crate::curve::CurveError;
use crate::mesh::MeshError;
use crate::orbit::OrbitError;
use crate::report::VerificationReport;
use crate::sampling::DEFAULT_PAIR_BUDGET;
use crate::scalar::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("points {index} and {next} are {gap} apart, closer than alpha = {alpha}", next = index + 1)]
    NotSeparated { index: usize, gap: f64, alpha: f64 },
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("point set is empty")]
    NoPoints,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Pairs visited by sampled sweeps.
    pub pair_budget: usize,
    /// Every pair `m < n <= full_pairs_upto` is checked exhaustively.
    pub full_pairs_upto: usize,
    /// Longest orbit for which every Cesaro mean is streamed; longer orbits
    /// fall back to probe indices.
    pub stream_cap: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            pair_budget: DEFAULT_PAIR_BUDGET,
            full_pairs_upto: 2000,
            stream_cap: 100_000,
        }
    }
}

impl SuiteOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// `(1 + 32x) - exp(2x + 16x^2)` for `0 <= x <= 1/16`.
pub fn check_exp_ineq(x: f64) -> Result<f64, VerifyError> {
    if !(0.0..=0.0625).contains(&x) {
        return Err(VerifyError::Domain {
            name: "x",
            value: x,
            domain: "[0, 1/16]",
        });
    }
    // written around e^a - 1 so that small x keeps full relative accuracy
    let a = 2.0 * x + 16.0 * x * x;
    Ok((32.0 * x - a) - (a.exp_m1() - a))
}

/// `2 - exp(x) - exp(-y)` for `0 <= x <= 1/16`, `y >= x + 16x^2`.
pub fn check_expexp(x: f64, y: f64) -> Result<f64, VerifyError> {
    if !(0.0..=0.0625).contains(&x) {
        return Err(VerifyError::Domain {
            name: "x",
            value: x,
            domain: "[0, 1/16]",
        });
    }
    if !(y >= x + 16.0 * x * x) {
        return Err(VerifyError::Domain {
            name: "y",
            value: y,
            domain: "[x + 16x^2, inf)",
        });
    }
    Ok(-x.exp_m1() - (-y).exp_m1())
}

/// Relative slack allowed on the separation precondition, for knots that
/// went through rounding.
const SEPARATION_SLACK: f64 = 1e-12;

fn check_separated(points: &[f64], alpha: f64) -> Result<(), VerifyError> {
    if points.is_empty() {
        return Err(VerifyError::NoPoints);
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(VerifyError::Domain {
            name: "alpha",
            value: alpha,
            domain: "(0, 1]",
        });
    }
    for (i, w) in points.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if !(gap >= alpha * (1.0 - SEPARATION_SLACK)) {
            return Err(VerifyError::NotSeparated { index: i + 1, gap, alpha });
        }
    }
    Ok(())
}

/// `(max_i sum_j exp(-(s_i - s_j)^2), (1 + sqrt(pi)) / alpha)` for an
/// increasing, `alpha`-separated point set. Rows are summed in full.
pub fn check_sep_sum(points: &[f64], alpha: f64) -> Result<(f64, f64), VerifyError> {
    use rayon::prelude::*;
    check_separated(points, alpha)?;
    let lhs = points
        .par_iter()
        .map(|&si| points.iter().map(|&sj| (-(si - sj) * (si - sj)).exp()).collect::<CompensatedSum<f64>>().value())
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok((lhs, sep_sum_bound(alpha)))
}

/// Same maximum through the symmetric accumulation `i < j`, each term
/// added to both rows.
pub fn sep_sum_symmetric(points: &[f64]) -> f64 {
    let mut rows: Vec<CompensatedSum<f64>> = vec![CompensatedSum::new(); points.len()];
    for i in 0..points.len() {
        rows[i].add(1.0);
        for j in i + 1..points.len() {
            let e = (-(points[j] - points[i]).powi(2)).exp();
            rows[i].add(e);
            rows[j].add(e);
        }
    }
    rows.iter().map(CompensatedSum::value).fold(f64::NEG_INFINITY, f64::max)
}

pub fn sep_sum_bound(alpha: f64) -> f64 {
    (1.0 + std::f64::consts::PI.sqrt()) / alpha
}

/// Run the suite by name.
pub fn run_suite(name: &str, cfg: &SuiteConfig, opts: &SuiteOptions) -> Result<VerificationReport, VerifyError> {
    match name {
        "harmonic" => suite_harmonic(cfg.delta, cfg.n, opts),
        "block" => suite_block(cfg.q1, cfg.blocks, opts),
        "auxiliary" => Ok(suite_auxiliary(opts.seed)),
        "realization" => suite_realization(opts.seed),
        other => Err(VerifyError::UnknownSuite(other.to_string())),
    }
}

/// Mesh parameters shared by the suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub delta: f64,
    pub n: usize,
    pub q1: u64,
    pub blocks: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            delta: 0.125,
            n: 10_000,
            q1: 8,
            blocks: 4,
        }
    }
}
