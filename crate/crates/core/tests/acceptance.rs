//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use fneorbit::cli::{parse, run, Parsed};
use fneorbit::curve::{coord_truncation_index, kernel_eval};
use fneorbit::mesh::{build_block_mesh, build_harmonic_mesh, form_agreement, validate_blocks, validate_mesh, ValidateOptions};
use fneorbit::orbit::{block_mean_norm, build_orbit, cesaro_norms, OrbitIndex};
use fneorbit::sampling::PairPlan;
use fneorbit::verify::{check_exp_ineq, suite_auxiliary, suite_block, suite_harmonic, suite_realization, SuiteOptions};
use fneorbit::{Mesh, MeshKind, Orbit64, Rational, VerificationReport};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DELTA: f64 = 0.125;
const HARMONIC_N: usize = 10_000;
const HARMONIC_BUDGET: Duration = Duration::from_secs(60);
const LIMIT_DISTANCE: f64 = 2e-5;
const WEAK_FROM: f64 = 2.0;
const WEAK_LEVEL: f64 = 0.1;

const FIRM_UPTO: usize = 2000;
const FIRM_TOL: f64 = 1e-12;
const FIRM_INF_TOL: f64 = 1e-15;

const IDENTITY_REL: f64 = 1e-12;
const GRAM_SAMPLES: usize = 100_000;

const Q1: u64 = 8;
const BLOCKS: usize = 4;
const BLOCK_BUDGET: Duration = Duration::from_secs(300);
const BLOCK_THREADS: usize = 8;

const EXP_GRID: u64 = 1_000_000;
const EXPEXP_SAMPLES: u64 = 100_000;
const SEP_SETS: u64 = 1000;

const COORD_TOL: f64 = 1e-12;
const L2_TOL: f64 = 1e-10;
const DERIV_TOL: f64 = 1e-6;

const BLOCK_CONST_REL: f64 = 1e-10;

const ORACLE_REL: f64 = 1e-10;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
}

fn record<'a>(rep: &'a VerificationReport, id: &'a str) -> Result<&'a fneorbit::CheckRecord, String> {
    rep.get(id).next().ok_or_else(|| format!("record {id} missing"))
}

fn all_pass(rep: &VerificationReport, id: &str) -> Result<usize, String> {
    let recs: Vec<_> = rep.get(id).collect();
    ensure(!recs.is_empty(), || format!("record {id} missing"))?;
    if let Some(bad) = recs.iter().find(|r| !r.pass) {
        return Err(format!("{id} failed: margin {:e} params {:?}", bad.margin, bad.params));
    }
    Ok(recs.len())
}

/// `rho_n` by the plain product of `exp(-d_k^2)`.
fn rho_oracle(steps: &[f64]) -> Vec<f64> {
    let mut rho = vec![1.0];
    for d in steps {
        let last = *rho.last().unwrap();
        rho.push(last * (-d * d).exp());
    }
    rho
}

/// `t_n` by plain summation.
fn knots_oracle(steps: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0];
    for d in steps {
        let last = *t.last().unwrap();
        t.push(last + d);
    }
    t
}

/// `||y_n||` by the naive double sum of `rho_i rho_j exp(-(t_i - t_j)^2)`.
fn cesaro_oracle(rho: &[f64], t: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += rho[i] * rho[j] * (-(t[i] - t[j]).powi(2)).exp();
        }
    }
    s.sqrt() / n as f64
}

fn harmonic_orbit(n: usize) -> Orbit64 {
    build_orbit(build_harmonic_mesh(DELTA, n).unwrap(), None).unwrap()
}

fn block_orbit() -> Orbit64 {
    let (mesh, meta) = build_block_mesh::<f64>(Q1, BLOCKS).unwrap();
    build_orbit(mesh, Some(meta)).unwrap()
}

fn harmonic_suite() -> Outcome {
    let start = Instant::now();
    let rep = pool(1)
        .install(|| suite_harmonic(DELTA, HARMONIC_N, &SuiteOptions::default()))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(elapsed < HARMONIC_BUDGET, || format!("took {elapsed:?}"))?;
    ensure(rep.all_passed(), || format!("failures: {:?}", rep.failures().map(|r| &r.check_id).collect::<Vec<_>>()))?;

    let orbit = harmonic_orbit(HARMONIC_N);
    let rho = rho_oracle(orbit.mesh().steps());
    ensure(rho.windows(2).all(|w| w[1] < w[0]), || "rho not strictly decreasing".into())?;
    for n in 1..=orbit.len() {
        let r = orbit.rho(n);
        ensure((r - rho[n - 1]).abs() <= ORACLE_REL * r, || format!("rho_{n} off the product"))?;
    }
    let limit = (-PI * PI / 384.0).exp();
    let dist = (orbit.rho(HARMONIC_N) - limit).abs();
    ensure(dist <= LIMIT_DISTANCE, || format!("|rho_N - limit| = {dist:e}"))?;

    let bound = 0.5 * (-(PI * PI + 3.0) / 384.0).exp();
    let lower = record(&rep, "cesaro.lower_bound")?;
    let min_y = lower.params["min"].as_f64().unwrap_or(f64::NAN);
    ensure(lower.pass && min_y >= bound, || format!("min ||y_n|| = {min_y}"))?;
    ensure(lower.params["indices"].as_u64() == Some(HARMONIC_N as u64), || "not every mean streamed".into())?;

    let t = knots_oracle(orbit.mesh().steps());
    let trace = cesaro_norms(&orbit, 600, &[]).unwrap();
    for n in [1, 2, 37, 600] {
        let y = trace.y(n).unwrap();
        let o = cesaro_oracle(&rho, &t, n);
        ensure((y - o).abs() <= ORACLE_REL * o, || format!("||y_{n}|| = {y} vs naive {o}"))?;
    }

    let far: Vec<usize> = (1..=HARMONIC_N).filter(|&n| orbit.t(n) >= WEAK_FROM).collect();
    for &n in &far {
        let v = orbit.weak_probe(0.0, n).unwrap();
        ensure(v <= WEAK_LEVEL, || format!("weak probe {v} at n = {n}"))?;
    }

    Ok(format!(
        "{}/{} records, min ||y_n|| = {min_y:.6} >= {bound:.6} (margin {:.6}), |rho_N - exp(-pi^2/384)| = {dist:.3e}, \
         weak-probe indices with t_n >= 2: {} (t_N = {:.4}), {:.2}s",
        rep.passed(),
        rep.total(),
        lower.margin,
        far.len(),
        orbit.t(HARMONIC_N),
        elapsed.as_secs_f64()
    ))
}

fn firm_sweep(orbit: &Orbit64, label: &str) -> Result<String, String> {
    let plan = PairPlan::All { len: FIRM_UPTO };
    let (v, m, n) = plan.min_by(|m, n| orbit.firm_residual(m, n).unwrap_or(f64::NAN)).unwrap();
    ensure(v >= -FIRM_TOL, || format!("{label}: firm residual {v:e} at ({m}, {n})"))?;
    let top = orbit.len() - 1;
    let mut worst_inf: f64 = 0.0;
    for m in 1..=top {
        let r = orbit.firm_residual(m, OrbitIndex::Infinity).unwrap();
        worst_inf = worst_inf.max(r.abs());
    }
    ensure(worst_inf <= FIRM_INF_TOL, || format!("{label}: |firm(m, inf)| = {worst_inf:e}"))?;

    // factored form from raw knots and norms
    let mesh = orbit.mesh();
    let rho = rho_oracle(mesh.steps());
    let t = knots_oracle(mesh.steps());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let m = rng.gen_range(1..FIRM_UPTO);
        let n = rng.gen_range(m + 1..=FIRM_UPTO);
        let (dm, dn) = (*mesh.d(m), *mesh.d(n));
        let gap = t[n] - t[m];
        let f = rho[m - 1] * rho[n - 1] * (-dm * dm - dn * dn - gap * gap).exp() * (2.0 - (2.0 * dn * gap).exp() - (-2.0 * dm * gap).exp());
        let g = orbit.firm_residual(m, n).unwrap();
        ensure((f - g).abs() <= 1e-12, || format!("{label}: ({m}, {n}) expanded {g:e} vs factored {f:e}"))?;
    }
    Ok(format!("{label} min {v:.3e} at ({m},{n}), max |inf column| {worst_inf:.1e}"))
}

fn firm_nonexpansive() -> Outcome {
    let h = firm_sweep(&harmonic_orbit(HARMONIC_N), "harmonic")?;
    let b = firm_sweep(&block_orbit(), "block")?;
    Ok(format!("all {} pairs per mesh; {h}; {b}", FIRM_UPTO * (FIRM_UPTO - 1) / 2))
}

#[allow(clippy::needless_range_loop)]
fn orbit_identities() -> Outcome {
    let orbit = harmonic_orbit(HARMONIC_N);
    let rho = rho_oracle(orbit.mesh().steps());
    let (mut worst2, mut worst3): (f64, f64) = (0.0, 0.0);
    for n in 1..=HARMONIC_N {
        let r2 = rho[n] * rho[n];
        let cross = orbit.pair_inner(n, n + 1).unwrap();
        let own = orbit.pair_inner(n + 1, n + 1).unwrap();
        worst2 = worst2.max((cross - r2).abs() / r2);
        worst3 = worst3.max((own - cross).abs() / r2);
        let ids = orbit.orbit_identities(n).unwrap();
        worst2 = worst2.max(ids.consecutive_inner);
        worst3 = worst3.max(ids.orthogonality);
    }
    ensure(worst2 <= IDENTITY_REL, || format!("consecutive inner residual {worst2:e}"))?;
    ensure(worst3 <= IDENTITY_REL, || format!("orthogonality residual {worst3:e}"))?;

    let mut min_gram = f64::INFINITY;
    for o in [&orbit, &block_orbit()] {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..GRAM_SAMPLES {
            let i = rng.gen_range(1..=o.len());
            let j = rng.gen_range(1..=o.len());
            min_gram = min_gram.min(o.pair_inner(i, j).unwrap());
        }
    }
    ensure(min_gram > 0.0, || format!("nonpositive Gram entry {min_gram:e}"))?;
    Ok(format!(
        "n <= {HARMONIC_N}: max rel residual {worst2:.2e} / {worst3:.2e}; {} sampled Gram entries, min {min_gram:.3e}",
        2 * GRAM_SAMPLES
    ))
}

fn block_suite() -> Outcome {
    let start = Instant::now();
    let rep = pool(BLOCK_THREADS)
        .install(|| suite_block(Q1, BLOCKS, &SuiteOptions::default()))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(elapsed < BLOCK_BUDGET, || format!("took {elapsed:?}"))?;
    for id in [
        "block.step_bounds",
        "block.unit_count_low",
        "block.unit_count_high",
        "block.unit_end",
        "block.size",
        "block.unit_spread",
        "cesaro.unit_lower",
        "block.mean_bound",
        "cesaro.end_upper",
    ] {
        let count = all_pass(&rep, id)?;
        ensure(count == BLOCKS, || format!("{id}: {count} records"))?;
    }
    let trend = record(&rep, "cesaro.end_trend")?;
    ensure(trend.margin > 0.0, || format!("end trend margin {:e}", trend.margin))?;
    all_pass(&rep, "cesaro.unit_above")?;
    ensure(rep.all_passed(), || format!("failures: {:?}", rep.failures().map(|r| &r.check_id).collect::<Vec<_>>()))?;

    // block 1 means against the naive double sum
    let orbit = block_orbit();
    let meta = orbit.blocks().unwrap().clone();
    let rho = rho_oracle(orbit.mesh().steps());
    let t = knots_oracle(orbit.mesh().steps());
    let b1 = meta.block(1).unwrap();
    let z1 = block_mean_norm(&orbit, 1).unwrap();
    let naive = cesaro_oracle(&rho, &t, b1.end);
    ensure((z1 - naive).abs() <= ORACLE_REL * naive, || format!("z_1 = {z1} vs naive {naive}"))?;

    let unit: Vec<String> = meta.iter().map(|b| format!("{}", b.unit_count())).collect();
    let q: Vec<String> = meta.iter().map(|b| format!("{}", b.q)).collect();
    Ok(format!(
        "{}/{} records, Q = [{}], #J = [{}], ||y_j_end(1)|| - ||y_j_end({BLOCKS})|| = {:.4}, {:.2}s on {BLOCK_THREADS} threads",
        rep.passed(),
        rep.total(),
        q.join(", "),
        unit.join(", "),
        trend.margin,
        elapsed.as_secs_f64()
    ))
}

fn auxiliary() -> Outcome {
    let rep = suite_auxiliary(0);
    for id in ["aux.exp_ineq_grid", "aux.expexp_random", "aux.sep_sum_random", "aux.sep_sum_routes"] {
        all_pass(&rep, id)?;
    }
    let grid = record(&rep, "aux.exp_ineq_grid")?;
    ensure(grid.params["points"].as_u64() == Some(EXP_GRID), || "grid size".into())?;
    let ee = record(&rep, "aux.expexp_random")?;
    ensure(ee.params["samples"].as_u64() == Some(EXPEXP_SAMPLES), || "sample count".into())?;
    let sep = record(&rep, "aux.sep_sum_random")?;
    ensure(sep.params["sets"].as_u64() == Some(SEP_SETS), || "set count".into())?;
    let edge = check_exp_ineq(1.0 / 16.0).unwrap();
    ensure((edge - (3.0 - 0.1875f64.exp())).abs() <= 1e-15, || format!("edge margin {edge}"))?;
    ensure(rep.all_passed(), || "auxiliary failures".into())?;
    Ok(format!(
        "grid min margin {:.3e}, expexp min {:.3e}, sep-sum min slack {:.3e}",
        grid.margin, ee.margin, sep.margin
    ))
}

fn realization() -> Outcome {
    let rep = suite_realization(0).map_err(|e| e.to_string())?;
    for id in ["real.coord_grid", "real.l2_grid", "real.derivative"] {
        all_pass(&rep, id)?;
    }
    let coord = record(&rep, "real.coord_grid")?;
    let k_max = coord_truncation_index(2.0, COORD_TOL).unwrap();
    ensure(coord.params["k_max"].as_u64() == Some(k_max as u64), || "truncation index".into())?;
    ensure(coord.tol == 0.0 && coord.margin <= COORD_TOL, || "coordinate tolerance".into())?;
    let l2 = record(&rep, "real.l2_grid")?;
    let der = record(&rep, "real.derivative")?;

    // exponential series of the kernel, independent of the library
    let mut worst: f64 = 0.0;
    for (s, t) in [(0.0, 0.0), (0.3, 1.7), (2.0, 2.0), (1.1, 0.4)] {
        let x: f64 = 2.0 * s * t;
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..=60 {
            term *= x / k as f64;
            sum += term;
        }
        let series = sum * (-s * s - t * t).exp();
        worst = worst.max((series - kernel_eval(s, t)).abs());
    }
    ensure(worst <= COORD_TOL, || format!("series oracle {worst:e}"))?;
    ensure(rep.all_passed(), || "realization failures".into())?;
    Ok(format!(
        "coordinate max err {:.2e} (K_max {k_max}), L2 max err {:.2e}, derivative max residual {:.2e}",
        COORD_TOL - coord.margin,
        L2_TOL - l2.margin,
        DERIV_TOL - der.margin
    ))
}

/// The three step conditions evaluated exactly on a rational mesh.
fn exact_forms(mesh: &Mesh<Rational>) -> Vec<[bool; 3]> {
    let c64 = Rational::from_integer(64.into());
    (1..mesh.len())
        .map(|n| {
            let (d, d1) = (mesh.d(n), mesh.d(n + 1));
            let (t, t1) = (mesh.t(n), mesh.t(n + 1));
            let contraction = d1 <= &(d / (Rational::one() + &c64 * d * d));
            let reciprocal = d1.recip() - d.recip() >= &c64 * d;
            let shifted = d1.recip() - &c64 * t1 >= d.recip() - &c64 * t;
            [contraction, reciprocal, shifted]
        })
        .collect()
}

fn mesh_equivalences() -> Outcome {
    let opts = ValidateOptions::default();
    let harmonic = build_harmonic_mesh(DELTA, HARMONIC_N).unwrap();
    let (block, meta) = build_block_mesh::<f64>(Q1, BLOCKS).unwrap();
    for (label, mesh) in [("harmonic", &harmonic), ("block", &block)] {
        let rep = validate_mesh(mesh, &opts);
        all_pass(&rep, "mesh.form_equivalence").map_err(|e| format!("{label}: {e}"))?;
        let forms = form_agreement(mesh, opts.tol);
        ensure(forms.disagreements().is_empty(), || format!("{label}: forms disagree"))?;
        ensure(forms.contraction.iter().all(|&b| b), || format!("{label}: axiom fails"))?;
    }

    // exact rational meshes, including one that breaks the axiom
    let exact = build_harmonic_mesh(Rational::new(1.into(), 8.into()), 300).unwrap();
    let mut steps: Vec<Rational> = exact.steps().to_vec();
    steps[40] = &steps[40] * Rational::new(3.into(), 2.into());
    steps[90] = steps[89].clone();
    let broken = Mesh::from_steps(steps, MeshKind::Block { q1: 8 }).unwrap();
    let mut violations = 0;
    for (label, mesh) in [("exact harmonic", &exact), ("exact perturbed", &broken)] {
        let exact_forms = exact_forms(mesh);
        let float_forms = form_agreement(&mesh.to_real::<f64>(), opts.tol);
        for (i, f) in exact_forms.iter().enumerate() {
            ensure(f[0] == f[1] && f[1] == f[2], || format!("{label}: exact forms disagree at {}", i + 1))?;
            ensure(float_forms.contraction[i] == f[0], || format!("{label}: float verdict differs at {}", i + 1))?;
            violations += usize::from(!f[0]);
        }
    }
    ensure(violations >= 2, || "perturbation did not break the axiom".into())?;

    let rep = validate_blocks(&block, &meta, opts.tol, BLOCK_CONST_REL);
    ensure(all_pass(&rep, "block.invariant_constant")? == BLOCKS, || "invariant records".into())?;
    let mut worst: f64 = 0.0;
    for b in meta.iter() {
        let g = |n: usize| 1.0 / block.d(n) - 64.0 * block.t(n);
        let base = g(b.start);
        for n in b.indices() {
            worst = worst.max((g(n) - base).abs() / (1.0 / block.d(n)));
        }
    }
    ensure(worst <= BLOCK_CONST_REL, || format!("within-block drift {worst:e}"))?;
    Ok(format!(
        "forms agree on {} + {} indices and on exact meshes ({violations} exact violations detected); within-block drift {worst:.2e}",
        harmonic.len() - 1,
        block.len() - 1
    ))
}

fn run_cli(args: &[&str]) -> i32 {
    let mut all = vec!["fneorbit"];
    all.extend_from_slice(args);
    match parse(all) {
        Ok(Parsed::Run(cfg)) => run(&cfg),
        _ => -1,
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [(&str, &[&str]); 4] = [
        ("harmonic", &["--suite", "harmonic", "--n", "3000"]),
        ("block", &["--suite", "block", "--blocks", "3"]),
        ("auxiliary", &["--suite", "auxiliary", "--seed", "9"]),
        ("realization", &["--suite", "realization", "--seed", "9"]),
    ];
    let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
    let mut cross_thread = true;
    for (name, flags) in runs {
        let mut outputs = Vec::new();
        for (i, threads) in ["4", "4", "1"].into_iter().enumerate() {
            let path = dir.path().join(format!("{name}-{i}.json"));
            let mut args = vec!["verify", "--threads", threads, "--out", path.to_str().unwrap()];
            args.extend_from_slice(flags);
            let code = run_cli(&args);
            ensure(code == 0, || format!("{name}: exit {code}"))?;
            outputs.push(read(&path)?);
        }
        ensure(outputs[0] == outputs[1], || format!("{name}: reports differ"))?;
        cross_thread &= outputs[0] == outputs[2];
    }
    Ok(format!(
        "4 suites run twice with identical flags: byte-identical; 1 vs 4 threads identical: {cross_thread}"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("harmonic suite", harmonic_suite),
        ("firm nonexpansiveness", firm_nonexpansive),
        ("orbit identities", orbit_identities),
        ("block suite", block_suite),
        ("auxiliary inequalities", auxiliary),
        ("realization cross-validation", realization),
        ("mesh equivalences", mesh_equivalences),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("ACCEPTANCE {} {name}: PASS {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("ACCEPTANCE {} {name}: FAIL {detail}", i + 1);
            }
        }
    }
    println!("ACCEPTANCE SUMMARY: {}/8 passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
