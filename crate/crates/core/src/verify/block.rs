use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::common::{consistency_check, firm_checks, identity_checks, min_over, rho_checks};
use super::{check_sep_sum, SuiteOptions, VerifyError};
use crate::mesh::{build_block_mesh, validate_blocks, validate_mesh, BlockInfo, ValidateOptions};
use crate::orbit::{build_orbit, cesaro_norms, cesaro_probe_norms, CesaroTrace, Orbit};
use crate::report::{params, Params, VerificationReport, EXACT_TOL, IDENTITY_REL_TOL, INEQUALITY_ABS_TOL};

/// Drift allowed in `1/d_n - 64 t_n` inside a block, relative.
const BLOCK_CONST_TOL: f64 = 1e-10;
/// Largest knot spread over `J_k`.
const UNIT_SPREAD: f64 = 1.125;

/// One row of the per-block summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummaryRow {
    pub k: usize,
    pub i: usize,
    pub j_unit: usize,
    pub j_end: usize,
    #[serde(rename = "Q")]
    pub q: u64,
    pub w: u64,
    pub z_norm: f64,
    pub y_at_j_unit: f64,
    pub y_at_j_end: f64,
}

/// Per-block summary for every block whose indices the trace covers.
pub fn block_summary(orbit: &Orbit<f64>, trace: &CesaroTrace<f64>) -> Vec<BlockSummaryRow> {
    let Some(meta) = orbit.blocks() else {
        return Vec::new();
    };
    meta.iter()
        .filter_map(|b| {
            Some(BlockSummaryRow {
                k: b.k,
                i: b.start,
                j_unit: b.j_unit,
                j_end: b.end,
                q: b.q,
                w: b.w,
                z_norm: trace.z(b.k)?,
                y_at_j_unit: trace.y(b.j_unit)?,
                y_at_j_end: trace.y(b.end)?,
            })
        })
        .collect()
}

/// `(Q_k / (2 Q_k + 64)) rho_inf_lo exp(-(9/8)^2 / 2)`.
fn unit_threshold(b: &BlockInfo, rho_lo: f64) -> f64 {
    let q = b.q as f64;
    q / (2.0 * q + 64.0) * rho_lo * (-UNIT_SPREAD * UNIT_SPREAD / 2.0).exp()
}

fn pk(k: usize) -> Params {
    params([("k", k)])
}

/// Block mesh with `num_blocks` blocks starting from `Q_1 = q1`.
pub fn suite_block(q1: u64, num_blocks: usize, opts: &SuiteOptions) -> Result<VerificationReport, VerifyError> {
    if num_blocks < 2 {
        return Err(VerifyError::Domain {
            name: "blocks",
            value: num_blocks as f64,
            domain: "[2, inf)",
        });
    }
    let (mesh, meta) = build_block_mesh::<f64>(q1, num_blocks)?;
    let mut rep = VerificationReport::new("block", opts.seed);
    rep.extend(validate_mesh(
        &mesh,
        &ValidateOptions {
            tol: IDENTITY_REL_TOL,
            pair_budget: opts.pair_budget,
            seed: opts.seed,
        },
    ));
    rep.extend(validate_blocks(&mesh, &meta, IDENTITY_REL_TOL, BLOCK_CONST_TOL));
    let orbit = build_orbit(mesh, Some(meta.clone()))?;

    rho_checks(&mut rep, &orbit, None);
    let (lo, _) = orbit.rho_inf_bracket();
    let q1f = q1 as f64;
    let floor = (-(1.0 / (q1f * q1f) + 7.0 / 12.0)).exp();
    rep.record(
        "rho.bracket_floor",
        params([("lo", lo), ("floor", floor)]),
        lo - floor,
        EXACT_TOL,
    );

    firm_checks(&mut rep, &orbit, opts);
    identity_checks(&mut rep, &orbit, opts);

    let n_steps = orbit.mesh().len();
    let probes: Vec<usize> = meta.iter().flat_map(|b| [b.j_unit, b.end]).collect();
    let streamed = n_steps <= opts.stream_cap;
    let trace = if streamed {
        cesaro_norms(&orbit, n_steps, &probes)?
    } else {
        cesaro_probe_norms(&orbit, &probes)?
    };
    let y = |n: usize| trace.y(n).expect("probe index stored");

    for b in meta.iter() {
        let k = b.k;
        let (w, q) = (b.w as f64, b.q as f64);

        let thr = unit_threshold(b, lo);
        let mut p = pk(k);
        p.insert("j_unit".into(), json!(b.j_unit));
        p.insert("threshold".into(), json!(thr));
        rep.record("cesaro.unit_lower", p, y(b.j_unit) - thr, INEQUALITY_ABS_TOL);

        let count = b.unit_count() as f64;
        let spread = orbit.t(b.j_unit) - orbit.t(b.start);
        let lemma = count / b.j_unit as f64 * lo * (-spread * spread / 2.0).exp();
        rep.record("cesaro.unit_lemma", pk(k), y(b.j_unit) - lemma, INEQUALITY_ABS_TOL);

        let z = trace.z(k).expect("every block is inside the orbit");
        let bound = (1.0 + PI.sqrt()) * (1.0 / w + 64.0 / q);
        let mut p = pk(k);
        p.insert("z_norm".into(), json!(z));
        rep.record("block.mean_bound", p, bound - z * z, INEQUALITY_ABS_TOL);

        let mut p = pk(k);
        p.insert("j_end".into(), json!(b.end));
        rep.record("cesaro.end_upper", p, 1.0 / w + z - y(b.end), INEQUALITY_ABS_TOL);

        let alpha = 1.0 / (q + 64.0 * w);
        let knots: Vec<f64> = b.indices().map(|n| orbit.t(n)).collect();
        let mut p = pk(k);
        p.insert("alpha".into(), json!(alpha));
        let margin = match check_sep_sum(&knots, alpha) {
            Ok((l, r)) => r - l,
            Err(e) => {
                p.insert("error".into(), json!(e.to_string()));
                f64::MIN
            }
        };
        rep.record("sep.block_knots", p, margin, INEQUALITY_ABS_TOL);
    }

    let last = meta.len();
    let end = |k: usize| y(meta.block(k).expect("block").end);
    let mut p = params([("first", end(1)), ("last", end(last))]);
    rep.record("cesaro.end_trend", p.clone(), end(1) - end(last), EXACT_TOL);
    let (m, k) = min_over(1..last, |k| end(k) - end(k + 1));
    p.insert("k".into(), json!(k));
    rep.record("cesaro.end_decreasing", p, m, EXACT_TOL);
    let (m, k) = min_over(1..=last, |k| {
        let b = meta.block(k).expect("block");
        y(b.j_unit) - unit_threshold(b, lo)
    });
    rep.record("cesaro.unit_above", pk(k), m, INEQUALITY_ABS_TOL);

    if streamed {
        let b1 = meta.block(1).expect("block");
        let b2 = meta.block(2).expect("block");
        consistency_check(&mut rep, &orbit, &trace, &[b1.j_unit, b1.end, b2.j_unit]);
    }

    rep.sort();
    Ok(rep)
}
