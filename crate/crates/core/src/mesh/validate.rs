use serde_json::json;

use super::{BlockMeta, Mesh, MeshError, MeshKind};
use crate::report::{params, Params, VerificationReport, EXACT_TOL, INEQUALITY_ABS_TOL};
use crate::sampling::{PairPlan, DEFAULT_PAIR_BUDGET};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    /// Relative rounding tolerance for the normalized mesh checks.
    pub tol: f64,
    pub pair_budget: usize,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            pair_budget: DEFAULT_PAIR_BUDGET,
            seed: 0,
        }
    }
}

fn at(n: usize) -> Params {
    params([("n", n)])
}

fn at_pair(m: usize, n: usize, pairs: usize, exhaustive: bool) -> Params {
    let mut p = params([("m", m), ("n", n), ("pairs", pairs)]);
    p.insert("exhaustive".into(), json!(exhaustive));
    p
}

/// Minimum of `f(n)` over `range` with its argmin (first on ties).
fn min_over<I: Iterator<Item = usize>>(range: I, f: impl Fn(usize) -> f64) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for n in range {
        let v = f(n);
        if v < best.0 || v.is_nan() && !best.0.is_nan() {
            best = (v, n);
        }
    }
    best
}

/// Cheap O(N) axiom screen: positive steps, `d_1 <= 1/8`, the contraction
/// `d_{n+1} <= d_n / (1 + 64 d_n^2)` up to relative `tol`, and `t_1 = 0`.
pub fn check_axioms<F: Real>(mesh: &Mesh<F>, tol: f64) -> Result<(), MeshError> {
    let tol = F::of(tol);
    if !mesh.t(1).is_zero() {
        return Err(MeshError::Axiom { axiom: "t_1 = 0", n: 1 });
    }
    if *mesh.d(1) > F::of(0.125) {
        return Err(MeshError::Axiom { axiom: "d_1 <= 1/8", n: 1 });
    }
    for n in 1..=mesh.len() {
        let d = *mesh.d(n);
        if !(d > F::zero()) || !d.is_finite() {
            return Err(MeshError::Axiom { axiom: "d_n > 0", n });
        }
        if n < mesh.len() {
            let bound = d / (F::one() + F::of(64.0) * d * d);
            if *mesh.d(n + 1) > bound * (F::one() + tol) {
                return Err(MeshError::Axiom {
                    axiom: "d_{n+1} <= d_n / (1 + 64 d_n^2)",
                    n,
                });
            }
        }
    }
    Ok(())
}

/// Per-index verdicts of the three equivalent step conditions
/// `d_{n+1} <= d_n/(1+64 d_n^2)`, `1/d_{n+1} - 1/d_n >= 64 d_n` and
/// `1/d_n - 64 t_n <= 1/d_{n+1} - 64 t_{n+1}`, each with relative slack `tol`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormAgreement {
    pub contraction: Vec<bool>,
    pub reciprocal: Vec<bool>,
    pub shifted: Vec<bool>,
}

impl FormAgreement {
    /// Indices `n` (1-based) where the three verdicts differ.
    pub fn disagreements(&self) -> Vec<usize> {
        (0..self.contraction.len())
            .filter(|&i| !(self.contraction[i] == self.reciprocal[i] && self.reciprocal[i] == self.shifted[i]))
            .map(|i| i + 1)
            .collect()
    }
}

pub fn form_agreement<F: Real>(mesh: &Mesh<F>, tol: f64) -> FormAgreement {
    let tol = F::of(tol);
    let c64 = F::of(64.0);
    let steps = mesh.len().saturating_sub(1);
    let mut out = FormAgreement {
        contraction: Vec::with_capacity(steps),
        reciprocal: Vec::with_capacity(steps),
        shifted: Vec::with_capacity(steps),
    };
    for n in 1..=steps {
        let (d, d1) = (*mesh.d(n), *mesh.d(n + 1));
        let (t, t1) = (*mesh.t(n), *mesh.t(n + 1));
        let slack = tol / d1;
        out.contraction.push(d1 <= d / (F::one() + c64 * d * d) * (F::one() + tol));
        out.reciprocal.push(F::one() / d1 - F::one() / d - c64 * d >= -slack);
        out.shifted.push((F::one() / d1 - c64 * t1) - (F::one() / d - c64 * t) >= -slack);
    }
    out
}

/// Run every mesh axiom and derived mesh inequality, recording the worst
/// normalized margin of each.
pub fn validate_mesh<F: Real>(mesh: &Mesh<F>, opts: &ValidateOptions) -> VerificationReport {
    let mut rep = VerificationReport::new("mesh", opts.seed);
    let n_len = mesh.len();
    let d = |n: usize| mesh.d(n).as_f64();
    let t = |n: usize| mesh.t(n).as_f64();
    let tol = opts.tol;

    rep.record("mesh.knot_origin", at(1), -t(1).abs(), EXACT_TOL);

    let (m, n) = min_over(1..=n_len, |n| {
        let scale = t(n + 1).max(d(n));
        -((t(n + 1) - t(n)) - d(n)).abs() / scale
    });
    rep.record("mesh.knot_increment", at(n), m, tol);

    rep.record("mesh.first_step", at(1), 0.125 - d(1), INEQUALITY_ABS_TOL);

    let (m, n) = min_over(1..=n_len, d);
    rep.record("mesh.step_positive", at(n), m, EXACT_TOL);

    if n_len >= 2 {
        let (m, n) = min_over(1..n_len, |n| {
            let (a, b) = (*mesh.d(n), *mesh.d(n + 1));
            ((a / (F::one() + F::of(64.0) * a * a) - b) / b).as_f64()
        });
        rep.record("mesh.step_contraction", at(n), m, tol);

        let (m, n) = min_over(1..n_len, |n| (d(n) - d(n + 1)) / d(n));
        rep.record("mesh.steps_decreasing", at(n), m, EXACT_TOL);

        let (m, n) = min_over(1..n_len, |n| {
            let g0 = 1.0 / d(n) - 64.0 * t(n);
            let g1 = 1.0 / d(n + 1) - 64.0 * t(n + 1);
            (g1 - g0) * d(n + 1)
        });
        rep.record("mesh.shifted_reciprocal_increasing", at(n), m, tol);

        let forms = form_agreement(mesh, tol);
        let bad = forms.disagreements();
        let count = |v: &[bool]| v.iter().filter(|&&b| b).count();
        let mut p = params([
            ("indices", forms.contraction.len()),
            ("contraction_pass", count(&forms.contraction)),
            ("reciprocal_pass", count(&forms.reciprocal)),
            ("shifted_pass", count(&forms.shifted)),
        ]);
        if let Some(&first) = bad.first() {
            p.insert("first_disagreement".into(), json!(first));
        }
        rep.record("mesh.form_equivalence", p, -(bad.len() as f64), EXACT_TOL);
    }

    let (m, n) = min_over(1..=n_len + 1, |n| if n > 1 { t(n) - t(n - 1) } else { f64::INFINITY });
    rep.record("mesh.knots_increasing", at(n), m, EXACT_TOL);

    let (m, n) = min_over(1..=n_len, |n| 1.0 - 32.0 * d(n) * t(n + 1));
    rep.record("mesh.step_times_knot", at(n), m, tol);

    // pair checks over m < n <= N
    let plan = PairPlan::new(n_len, opts.pair_budget, opts.seed);
    let pairs = plan.pair_count();
    if let Some((v, m, n)) = plan.min_by(|m, n| {
        let gap = (1.0 / d(n) - 1.0 / d(m)) - 64.0 * (t(n) - t(m));
        gap * d(n)
    }) {
        rep.record("mesh.reciprocal_gap", at_pair(m, n, pairs, plan.is_exhaustive()), v, tol);
    }
    if let Some((v, m, n)) = plan.min_by(|m, n| {
        let delta = t(n + 1) - t(m + 1);
        -(2.0 * d(n) * delta).exp_m1() - (-2.0 * d(m) * delta).exp_m1()
    }) {
        rep.record(
            "mesh.exp_pair",
            at_pair(m, n, pairs, plan.is_exhaustive()),
            v,
            INEQUALITY_ABS_TOL,
        );
    }

    if let MeshKind::Harmonic { delta } = mesh.kind() {
        let delta = delta.as_f64();
        let (m, n) = min_over(1..=n_len, |n| (d(n) - delta / n as f64).abs() * -(n as f64) / delta);
        rep.record("mesh.harmonic_steps", at(n), m, tol);
    }
    rep
}

/// Structural checks of a block mesh against its metadata.
///
/// `const_tol` bounds the relative drift of `1/d_n - 64 t_n` inside a block,
/// where it is constant in exact arithmetic.
pub fn validate_blocks<F: Real>(mesh: &Mesh<F>, meta: &BlockMeta, tol: f64, const_tol: f64) -> VerificationReport {
    let mut rep = VerificationReport::new("blocks", 0);
    let d = |n: usize| mesh.d(n).as_f64();
    let t = |n: usize| mesh.t(n).as_f64();
    let g = |n: usize| 1.0 / d(n) - 64.0 * t(n);

    for b in meta.iter() {
        let k = b.k;
        let q = b.q as f64;
        let w = b.w as f64;
        let pk = || params([("k", k)]);
        if k == 1 {
            rep.record("block.q1", pk(), q - 8.0, EXACT_TOL);
        } else {
            let prev = b.start - 1;
            let lower = (b.start as f64)
                .max(2f64.powi(k as i32 + 1) * w)
                .max((1.0 + 64.0 * d(prev) * d(prev)) / d(prev));
            let mut p = pk();
            p.insert("q".into(), json!(b.q));
            p.insert("lower".into(), json!(lower));
            rep.record("block.q_rule", p, q - lower, EXACT_TOL);
        }
        rep.record("block.start_step", pk(), -(d(b.start) * q - 1.0).abs(), tol);

        let lo = 1.0 / (q + 64.0 * w);
        let hi = 1.0 / q;
        let (m, n) = min_over(b.indices(), |n| ((d(n) - lo) / d(n)).min((hi - d(n)) / d(n)));
        let mut p = pk();
        p.insert("n".into(), json!(n));
        rep.record("block.step_bounds", p, m, tol);

        let base = g(b.start);
        let (m, n) = min_over(b.indices(), |n| -(g(n) - base).abs() * d(n));
        let mut p = pk();
        p.insert("n".into(), json!(n));
        rep.record("block.invariant_constant", p, m, const_tol);

        if b.end < mesh.len() {
            let jump = (g(b.end + 1) - g(b.end)) * d(b.end + 1);
            rep.record("block.invariant_jump", pk(), jump, EXACT_TOL);
        }

        let covered = t(b.end + 1) - t(b.start);
        let before = t(b.end) - t(b.start);
        let mut p = pk();
        p.insert("covered".into(), json!(covered));
        rep.record("block.closing_rule", p, (covered - w).min(w - before), EXACT_TOL);

        let j = b.unit_count() as f64;
        let mut p = pk();
        p.insert("unit_count".into(), json!(b.unit_count()));
        p.insert("q".into(), json!(b.q));
        rep.record("block.unit_count_low", p.clone(), j - q, EXACT_TOL);
        rep.record("block.unit_count_high", p, q + 65.0 - j, EXACT_TOL);
        rep.record(
            "block.unit_end",
            params([("k", k), ("j_unit", b.j_unit)]),
            (b.start as f64 + q + 64.0) - b.j_unit as f64,
            EXACT_TOL,
        );
        let unit_ok = t(b.j_unit) >= t(b.start) + 1.0 && (b.j_unit == b.start || t(b.j_unit - 1) < t(b.start) + 1.0);
        rep.record("block.unit_index", pk(), if unit_ok { 0.0 } else { -1.0 }, EXACT_TOL);

        let size = b.size() as f64;
        let mut p = pk();
        p.insert("size".into(), json!(b.size()));
        rep.record("block.size", p.clone(), size - w * q, EXACT_TOL);
        rep.record("block.size_vs_start", p, size - w * b.start as f64, EXACT_TOL);

        let spread = t(b.j_unit) - t(b.start);
        let mut p = pk();
        p.insert("spread".into(), json!(spread));
        rep.record("block.unit_spread", p, 1.125 - spread, EXACT_TOL);

        let sq: f64 = crate::scalar::compensated_sum(b.indices().map(|n| d(n) * d(n)));
        let bound = 0.25f64.powi(k as i32 + 1) + 0.5f64.powi(k as i32 + 1);
        let mut p = pk();
        p.insert("sum_sq".into(), json!(sq));
        rep.record("block.square_sum", p, bound - sq, INEQUALITY_ABS_TOL);
    }
    rep
}
