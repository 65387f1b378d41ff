use std::f64::consts::PI;

use serde_json::json;

use super::common::{consistency_check, firm_checks, identity_checks, max_over, min_over, rho_checks};
use super::{SuiteOptions, VerifyError};
use crate::mesh::{build_harmonic_mesh, validate_mesh, ValidateOptions};
use crate::orbit::{build_orbit, cesaro_norms, cesaro_probe_norms, Orbit};
use crate::report::{params, VerificationReport, EXACT_TOL, IDENTITY_REL_TOL, INEQUALITY_ABS_TOL};

/// Probe point for the weak-convergence checks.
const WEAK_S: f64 = 0.0;
/// Knot beyond which `<u(0), x_n>` must stay below `WEAK_LEVEL`.
const WEAK_FROM: f64 = 2.0;
const WEAK_LEVEL: f64 = 0.1;

/// Harmonic mesh `d_n = delta / n` with `n_steps` steps.
pub fn suite_harmonic(delta: f64, n_steps: usize, opts: &SuiteOptions) -> Result<VerificationReport, VerifyError> {
    if n_steps < 2 {
        return Err(VerifyError::Domain {
            name: "n",
            value: n_steps as f64,
            domain: "[2, inf)",
        });
    }
    let mesh = build_harmonic_mesh(delta, n_steps)?;
    let mut rep = VerificationReport::new("harmonic", opts.seed);
    rep.extend(validate_mesh(
        &mesh,
        &ValidateOptions {
            tol: IDENTITY_REL_TOL,
            pair_budget: opts.pair_budget,
            seed: opts.seed,
        },
    ));
    let orbit = build_orbit(mesh, None)?;
    let delta2 = delta * delta;

    let limit = (-delta2 * PI * PI / 6.0).exp();
    rho_checks(&mut rep, &orbit, Some(limit));
    let rho_n = orbit.rho(n_steps);
    let tail = delta2 / (n_steps - 1) as f64;
    let mut p = params([("rho_n", rho_n), ("limit", limit), ("tail", tail)]);
    p.insert("n".into(), json!(n_steps));
    rep.record("rho.tail_bound", p, tail - (rho_n - limit).abs(), INEQUALITY_ABS_TOL);

    firm_checks(&mut rep, &orbit, opts);
    identity_checks(&mut rep, &orbit, opts);
    cesaro_checks(&mut rep, &orbit, delta, n_steps, opts);
    weak_checks(&mut rep, &orbit, n_steps);

    rep.sort();
    Ok(rep)
}

fn cesaro_checks(rep: &mut VerificationReport, orbit: &Orbit<f64>, delta: f64, n_steps: usize, opts: &SuiteOptions) {
    let delta2 = delta * delta;
    let streamed = n_steps <= opts.stream_cap;
    let mut probes = vec![1, 2, n_steps.min(1000), n_steps];
    probes.sort_unstable();
    probes.dedup();
    let trace = if streamed {
        cesaro_norms(orbit, n_steps, &probes)
    } else {
        let geometric: Vec<usize> = std::iter::successors(Some(1usize), |&n| Some(n * 2))
            .take_while(|&n| n < n_steps)
            .chain([n_steps])
            .collect();
        cesaro_probe_norms(orbit, &geometric)
    }
    .expect("indices are inside the orbit");
    let ns: Vec<usize> = trace.indices().to_vec();
    let y = |n: usize| trace.y(n).expect("stored index");
    let mode = || {
        let mut p = params([("indices", ns.len())]);
        p.insert("streamed".into(), json!(streamed));
        p
    };

    rep.record("cesaro.first", params([("n", 1)]), -(y(1) - 1.0).abs(), IDENTITY_REL_TOL);

    let bound = 0.5 * (-delta2 * (PI * PI + 3.0) / 6.0).exp();
    let (m, n) = min_over(ns.iter().copied(), y);
    let mut p = mode();
    p.insert("n".into(), json!(n));
    p.insert("min".into(), json!(m));
    p.insert("bound".into(), json!(bound));
    rep.record("cesaro.lower_bound", p, m - bound, INEQUALITY_ABS_TOL);

    let (m, n) = max_over(ns.iter().copied(), y);
    let mut p = mode();
    p.insert("n".into(), json!(n));
    rep.record("cesaro.upper_bound", p, 1.0 - m, INEQUALITY_ABS_TOL);

    // upper half {floor(n/2)+1, ..., n}
    let lo = orbit.rho_inf_bracket().0;
    let half = |n: usize| n / 2 + 1;
    let spread = |n: usize| orbit.t(n) - orbit.t(half(n));
    let (m, n) = max_over(1..=n_steps, spread);
    rep.record("cesaro.upper_half_spread", params([("n", n)]), delta - m, EXACT_TOL);

    let (m, n) = min_over(ns.iter().copied(), |n| {
        let count = (n + 1 - half(n)) as f64;
        let s = spread(n);
        y(n) - count / n as f64 * lo * (-s * s / 2.0).exp()
    });
    let mut p = mode();
    p.insert("n".into(), json!(n));
    rep.record("cesaro.upper_half_lemma", p, m, INEQUALITY_ABS_TOL);

    if streamed {
        consistency_check(rep, orbit, &trace, &probes);
    }
}

fn weak_checks(rep: &mut VerificationReport, orbit: &Orbit<f64>, n_steps: usize) {
    let v = |n: usize| orbit.weak_probe(WEAK_S, n).expect("index in range");
    let d = |n: usize| *orbit.mesh().d(n);

    // past the peak both factors decrease
    let from = (1..=n_steps).find(|&n| orbit.t(n) >= WEAK_S + d(n)).unwrap_or(n_steps);
    let (m, n) = min_over(from..=n_steps, |n| v(n) - v(n + 1));
    rep.record("weak.decay", params([("n", n), ("from", from)]), m, EXACT_TOL);

    let far: Vec<usize> = (1..=n_steps).filter(|&n| orbit.t(n) >= WEAK_FROM).collect();
    let (m, n) = max_over(far.iter().copied(), v);
    let mut p = params([("count", far.len())]);
    if !far.is_empty() {
        p.insert("n".into(), json!(n));
    }
    p.insert("t_last".into(), json!(orbit.t(n_steps)));
    rep.record("weak.far_level", p, WEAK_LEVEL - m.max(0.0), EXACT_TOL);

    let t = orbit.t(n_steps);
    rep.record(
        "weak.final_bound",
        params([("n", n_steps)]),
        (-t * t).exp() - v(n_steps),
        EXACT_TOL,
    );
}
