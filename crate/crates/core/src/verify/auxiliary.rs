use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::common::{max_over, min_over};
use super::{check_exp_ineq, check_expexp, check_sep_sum, sep_sum_bound, sep_sum_symmetric, VerifyError};
use crate::curve::{
    coord_inner_truncated, coord_truncation_index, derivative_identities, kernel_eval, l2_inner_quadrature,
    GaussianTranslateCurve, QuadratureRule,
};
use crate::report::{params, VerificationReport, EXACT_TOL, IDENTITY_REL_TOL, INEQUALITY_ABS_TOL};

const EXP_GRID: usize = 1_000_000;
const EXPEXP_SAMPLES: usize = 100_000;
const SEP_SETS: usize = 1000;
const SEP_MAX_POINTS: usize = 200;

const COORD_GRID: usize = 50;
const COORD_SPAN: f64 = 2.0;
const COORD_TOL: f64 = 1e-12;
const L2_GRID: usize = 20;
const L2_SPAN: f64 = 5.0;
const L2_TOL: f64 = 1e-10;
const DERIV_PAIRS: usize = 100;
const DERIV_SPAN: f64 = 3.0;
const DERIV_STEP: f64 = 1e-5;
const DERIV_TOL: f64 = 1e-6;

fn grid(count: usize, span: f64) -> impl Iterator<Item = f64> + Clone {
    (0..count).map(move |i| span * i as f64 / (count - 1) as f64)
}

/// The scalar inequalities and the separated-sum bound on seeded inputs.
pub fn suite_auxiliary(seed: u64) -> VerificationReport {
    let mut rep = VerificationReport::new("auxiliary", seed);

    let margins: Vec<f64> = (0..EXP_GRID)
        .into_par_iter()
        .map(|i| check_exp_ineq(0.0625 * i as f64 / (EXP_GRID - 1) as f64).unwrap_or(f64::NAN))
        .collect();
    let (m, i) = min_over(0..EXP_GRID, |i| margins[i]);
    let x = 0.0625 * i as f64 / (EXP_GRID - 1) as f64;
    let mut p = params([("points", EXP_GRID)]);
    p.insert("x".into(), json!(x));
    rep.record("aux.exp_ineq_grid", p, m, INEQUALITY_ABS_TOL);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(f64, f64)> = (0..EXPEXP_SAMPLES)
        .map(|i| {
            let x: f64 = rng.gen_range(0.0..=0.0625);
            let edge = x + 16.0 * x * x;
            // every fourth sample sits on the constraint boundary
            let y = if i % 4 == 0 { edge } else { edge + rng.gen_range(0.0..2.0) * edge.max(1e-3) };
            (x, y)
        })
        .collect();
    let (m, i) = min_over(0..EXPEXP_SAMPLES, |i| check_expexp(pairs[i].0, pairs[i].1).unwrap_or(f64::NAN));
    let mut p = params([("samples", EXPEXP_SAMPLES)]);
    p.insert("x".into(), json!(pairs[i].0));
    p.insert("y".into(), json!(pairs[i].1));
    rep.record("aux.expexp_random", p, m, INEQUALITY_ABS_TOL);

    let sets: Vec<(Vec<f64>, f64)> = (0..SEP_SETS)
        .map(|_| {
            let n = rng.gen_range(1..=SEP_MAX_POINTS);
            let alpha: f64 = rng.gen_range(0.05..=1.0);
            let mut pts = Vec::with_capacity(n);
            let mut s = rng.gen_range(-10.0..10.0);
            for _ in 0..n {
                pts.push(s);
                // half of the gaps are tight
                let extra = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..2.0) };
                s += alpha * (1.0 + 1e-9 + extra);
            }
            (pts, alpha)
        })
        .collect();
    let results: Vec<(f64, f64, f64)> = sets
        .iter()
        .map(|(pts, alpha)| match check_sep_sum(pts, *alpha) {
            Ok((l, r)) => (r - l, (l - sep_sum_symmetric(pts)).abs() / l, l * alpha),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        })
        .collect();
    let (m, i) = min_over(0..SEP_SETS, |i| results[i].0);
    let mut p = params([("sets", SEP_SETS), ("set", i), ("points", sets[i].0.len())]);
    p.insert("alpha".into(), json!(sets[i].1));
    rep.record("aux.sep_sum_random", p, m, INEQUALITY_ABS_TOL);
    let (m, i) = max_over(0..SEP_SETS, |i| results[i].1);
    rep.record("aux.sep_sum_routes", params([("set", i)]), -m, IDENTITY_REL_TOL);
    let (m, i) = max_over(0..SEP_SETS, |i| results[i].2);
    let mut p = params([("set", i)]);
    p.insert("scaled_lhs".into(), json!(m));
    rep.record("aux.sep_sum_scaled", p, sep_sum_bound(1.0) - m, INEQUALITY_ABS_TOL);

    let lattice: Vec<f64> = (0..100).map(f64::from).collect();
    let margin = check_sep_sum(&lattice, 1.0).map(|(l, r)| r - l).unwrap_or(f64::NAN);
    rep.record("aux.sep_sum_lattice", params([("points", 100)]), margin, INEQUALITY_ABS_TOL);

    rep.sort();
    rep
}

/// Both explicit realizations against the closed-form kernel, plus the
/// derivative identities.
pub fn suite_realization(seed: u64) -> Result<VerificationReport, VerifyError> {
    let mut rep = VerificationReport::new("realization", seed);

    let k_max = coord_truncation_index(COORD_SPAN, COORD_TOL)?;
    let pts: Vec<(f64, f64)> = grid(COORD_GRID, COORD_SPAN)
        .flat_map(|s| grid(COORD_GRID, COORD_SPAN).map(move |t| (s, t)))
        .collect();
    let errs: Vec<f64> = pts
        .par_iter()
        .map(|&(s, t)| (coord_inner_truncated(s, t, k_max) - kernel_eval(s, t)).abs())
        .collect();
    let (m, i) = max_over(0..errs.len(), |i| errs[i]);
    let mut p = params([("s", pts[i].0), ("t", pts[i].1)]);
    p.insert("k_max".into(), json!(k_max));
    rep.record("real.coord_grid", p, COORD_TOL - m, EXACT_TOL);

    let quad = QuadratureRule::<f64>::default();
    let pts: Vec<(f64, f64)> = grid(L2_GRID, L2_SPAN)
        .flat_map(|s| grid(L2_GRID, L2_SPAN).map(move |t| (s, t)))
        .collect();
    let errs: Vec<f64> = pts
        .par_iter()
        .map(|&(s, t)| match l2_inner_quadrature(s, t, &quad) {
            Ok(v) => (v - kernel_eval(s, t)).abs(),
            Err(_) => f64::NAN,
        })
        .collect();
    let (m, i) = max_over(0..errs.len(), |i| errs[i]);
    rep.record("real.l2_grid", params([("s", pts[i].0), ("t", pts[i].1)]), L2_TOL - m, EXACT_TOL);

    // ||u'(t)||^2 = 2 in the L2 realization
    let curve = GaussianTranslateCurve;
    let (m, i) = max_over(0..L2_GRID, |i| {
        let t = L2_SPAN * i as f64 / (L2_GRID - 1) as f64;
        let lo = 2.0 * t - quad.half_width;
        let hi = 2.0 * t + quad.half_width;
        (quad.integrate(lo, hi, |r| curve.derivative(t, r).powi(2)) - 2.0).abs()
    });
    rep.record("real.l2_speed", params([("i", i)]), L2_TOL - m, EXACT_TOL);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(f64, f64)> = (0..DERIV_PAIRS)
        .map(|_| (rng.gen_range(0.0..=DERIV_SPAN), rng.gen_range(0.0..=DERIV_SPAN)))
        .collect();
    let res: Vec<f64> = pairs
        .par_iter()
        .map(|&(s, t)| derivative_identities(s, t, DERIV_STEP).map(|r| r.max()).unwrap_or(f64::NAN))
        .collect();
    let (m, i) = max_over(0..DERIV_PAIRS, |i| res[i]);
    let mut p = params([("s", pairs[i].0), ("t", pairs[i].1), ("h", DERIV_STEP)]);
    p.insert("pairs".into(), json!(DERIV_PAIRS));
    rep.record("real.derivative", p, DERIV_TOL - m, EXACT_TOL);

    rep.sort();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auxiliary_passes() {
        let rep = suite_auxiliary(7);
        assert!(rep.all_passed(), "{:#?}", rep.failures().collect::<Vec<_>>());
    }

    #[test]
    fn realization_passes() {
        let rep = suite_realization(7).unwrap();
        assert!(rep.all_passed(), "{:#?}", rep.failures().collect::<Vec<_>>());
    }
}
