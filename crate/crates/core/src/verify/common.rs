//! Orbit checks shared by the harmonic and block suites.

use serde_json::json;

use crate::orbit::{Orbit, OrbitIndex};
use crate::report::{params, VerificationReport, EXACT_TOL, IDENTITY_REL_TOL, INEQUALITY_ABS_TOL};
use crate::sampling::PairPlan;

use super::SuiteOptions;

/// Firm nonexpansiveness is asserted on the raw residual at this slack.
pub(super) const FIRM_TOL: f64 = 1e-12;
/// `|firm_residual(m, inf)|` must vanish to this level.
pub(super) const FIRM_INF_TOL: f64 = 1e-15;
/// Streaming against direct Cesaro norms, relative.
pub(super) const CESARO_CONSISTENCY_TOL: f64 = 1e-10;

/// Max over `range` of `f`, with its argmax (first on ties, NaN wins).
pub(super) fn max_over(range: impl Iterator<Item = usize>, f: impl Fn(usize) -> f64) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for n in range {
        let v = f(n);
        if v > best.0 || v.is_nan() && !best.0.is_nan() {
            best = (v, n);
        }
    }
    best
}

pub(super) fn min_over(range: impl Iterator<Item = usize>, f: impl Fn(usize) -> f64) -> (f64, usize) {
    let (v, n) = max_over(range, |n| -f(n));
    (-v, n)
}

pub(super) fn rho_checks(rep: &mut VerificationReport, orbit: &Orbit<f64>, limit: Option<f64>) {
    let len = orbit.len();
    rep.record("rho.first", params([("n", 1)]), -(orbit.rho(1) - 1.0).abs(), EXACT_TOL);
    rep.record(
        "rho.recursion",
        params([("indices", len)]),
        -orbit.rho_recursion_deviation(),
        IDENTITY_REL_TOL,
    );
    let (m, n) = min_over(1..len, |n| {
        let (a, b) = (orbit.rho_recursive(n), orbit.rho_recursive(n + 1));
        (a - b) / a
    });
    rep.record("rho.decreasing", params([("n", n)]), m, EXACT_TOL);

    let (lo, hi) = orbit.rho_inf_bracket();
    let mut p = params([("lo", lo), ("hi", hi)]);
    rep.record("rho.bracket", p.clone(), lo.min(hi - lo), EXACT_TOL);
    if let Some(limit) = limit {
        p.insert("limit".into(), json!(limit));
        rep.record("rho.limit_in_bracket", p, (limit - lo).min(hi - limit), INEQUALITY_ABS_TOL);
    }
}

/// Exhaustive sweep up to `full_pairs_upto`, a sampled sweep over the whole
/// orbit beyond it, the `n = inf` column and the factored cross-check.
pub(super) fn firm_checks(rep: &mut VerificationReport, orbit: &Orbit<f64>, opts: &SuiteOptions) {
    // residual at (m, n) needs x_{n+1}
    let top = orbit.len() - 1;
    let firm = |m: usize, n: usize| orbit.firm_residual(m, n).unwrap_or(f64::NAN);
    let pair_params = |plan: &PairPlan, m: usize, n: usize| {
        let mut p = params([("m", m), ("n", n), ("len", plan.len()), ("pairs", plan.pair_count())]);
        p.insert("exhaustive".into(), json!(plan.is_exhaustive()));
        p
    };

    let full = PairPlan::All { len: top.min(opts.full_pairs_upto) };
    if let Some((v, m, n)) = full.min_by(firm) {
        rep.record("firm.sweep_full", pair_params(&full, m, n), v, FIRM_TOL);
    }
    if let Some((v, m, n)) = full.min_by(|m, n| {
        let a = firm(m, n);
        let b = orbit.firm_residual_factored(m, n).unwrap_or(f64::NAN);
        -(a - b).abs()
    }) {
        rep.record("firm.routes_agree", pair_params(&full, m, n), v, IDENTITY_REL_TOL);
    }
    if top > opts.full_pairs_upto {
        let sampled = PairPlan::new(top, opts.pair_budget, opts.seed);
        if let Some((v, m, n)) = sampled.min_by(firm) {
            rep.record("firm.sweep_sampled", pair_params(&sampled, m, n), v, FIRM_TOL);
        }
    }
    let (v, m) = max_over(1..=top, |m| {
        orbit.firm_residual(m, OrbitIndex::Infinity).map(f64::abs).unwrap_or(f64::NAN)
    });
    rep.record("firm.infinity", params([("m", m)]), -v, FIRM_INF_TOL);
}

pub(super) fn identity_checks(rep: &mut VerificationReport, orbit: &Orbit<f64>, opts: &SuiteOptions) {
    let top = orbit.len() - 1;
    let ids: Vec<_> = (1..=top).map(|n| orbit.orbit_identities(n).expect("n + 1 in range")).collect();
    let (v, n) = max_over(1..=top, |n| ids[n - 1].consecutive_inner);
    rep.record("kurve.consecutive_inner", params([("n", n)]), -v, IDENTITY_REL_TOL);
    let (v, n) = max_over(1..=top, |n| ids[n - 1].orthogonality);
    rep.record("kurve.orthogonality", params([("n", n)]), -v, IDENTITY_REL_TOL);

    let plan = PairPlan::new(orbit.len(), opts.pair_budget, opts.seed);
    if let Some((v, m, n)) = plan.min_by(|m, n| orbit.gram(m, n)) {
        let mut p = params([("m", m), ("n", n), ("pairs", plan.pair_count())]);
        p.insert("exhaustive".into(), json!(plan.is_exhaustive()));
        rep.record("kurve.gram_positive", p, v, EXACT_TOL);
    }
}

/// Compare streamed norms against the full Gram sum at `probes`.
pub(super) fn consistency_check(
    rep: &mut VerificationReport,
    orbit: &Orbit<f64>,
    trace: &crate::orbit::CesaroTrace<f64>,
    probes: &[usize],
) {
    let (v, n) = max_over(probes.iter().copied(), |n| {
        let direct = crate::orbit::cesaro_norm_direct(orbit, n).unwrap_or(f64::NAN);
        let streamed = trace.y(n).unwrap_or(f64::NAN);
        (streamed - direct).abs() / direct
    });
    rep.record(
        "cesaro.streaming_consistency",
        params([("n", n), ("probes", probes.len())]),
        -v,
        CESARO_CONSISTENCY_TOL,
    );
}
