//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 failed verification.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::io::{self as out, IoError};
use crate::mesh::{build_block_mesh, build_harmonic_mesh, BlockMeta, Mesh, MeshError};
use crate::orbit::{build_orbit, cesaro_norms, cesaro_probe_norms, CesaroTrace, Orbit, OrbitError};
use crate::report::VerificationReport;
use crate::verify::{block_summary, run_suite, SuiteConfig, SuiteOptions, VerifyError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Harmonic,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Harmonic,
    Block,
    Auxiliary,
    Realization,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Harmonic => "harmonic",
            Suite::Block => "block",
            Suite::Auxiliary => "auxiliary",
            Suite::Realization => "realization",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fneorbit", version, about = "Firmly nonexpansive orbits on Gaussian-kernel curves")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Write the step/knot table of a mesh.
    Mesh(CommonArgs),
    /// Write the orbit norms `rho_n` and knots.
    Orbit(CommonArgs),
    /// Write Cesaro mean norms.
    Cesaro(CommonArgs),
    /// Run a verification suite and write its report.
    Verify(CommonArgs),
    /// Write plot data: the Cesaro series plus block markers.
    Export(CommonArgs),
}

/// Flags shared by every command. Unset flags fall back to `--config`,
/// then to built-in defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommonArgs {
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub q1: Option<u64>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Block metadata output (`mesh --kind block`).
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Per-block summary output (`cesaro --kind block`).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// JSON file with any of the flags above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl CommonArgs {
    fn or(self, other: CommonArgs) -> CommonArgs {
        CommonArgs {
            kind: self.kind.or(other.kind),
            delta: self.delta.or(other.delta),
            q1: self.q1.or(other.q1),
            blocks: self.blocks.or(other.blocks),
            n: self.n.or(other.n),
            seed: self.seed.or(other.seed),
            threads: self.threads.or(other.threads),
            out: self.out.or(other.out),
            format: self.format.or(other.format),
            suite: self.suite.or(other.suite),
            meta: self.meta.or(other.meta),
            summary: self.summary.or(other.summary),
            config: self.config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Mesh,
    Orbit,
    Cesaro,
    Verify,
    Export,
}

/// Fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub kind: Kind,
    pub delta: f64,
    pub q1: u64,
    pub blocks: usize,
    pub n: usize,
    pub seed: u64,
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub suite: Suite,
    pub meta: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// A usage problem, reported as a single line.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> UsageError {
    UsageError(format!("error: --{flag}: {msg}"))
}

/// Outcome of argument parsing.
#[derive(Debug)]
pub enum Parsed {
    Run(Box<RunConfig>),
    /// `--help` or `--version`; the text goes to stdout.
    Info(String),
}

pub fn parse<I, T>(args: I) -> Result<Parsed, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Ok(Parsed::Info(e.render().to_string()));
            }
            let text = e.render().to_string();
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("error: bad arguments");
            return Err(UsageError(line.trim().to_string()));
        }
    };
    let (command, args) = match cli.command {
        CommandArgs::Mesh(a) => (Command::Mesh, a),
        CommandArgs::Orbit(a) => (Command::Orbit, a),
        CommandArgs::Cesaro(a) => (Command::Cesaro, a),
        CommandArgs::Verify(a) => (Command::Verify, a),
        CommandArgs::Export(a) => (Command::Export, a),
    };
    resolve(command, args).map(|c| Parsed::Run(Box::new(c)))
}

fn resolve(command: Command, args: CommonArgs) -> Result<RunConfig, UsageError> {
    let args = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage("config", e))?;
            let file: CommonArgs = serde_json::from_str(&text).map_err(|e| usage("config", e))?;
            args.or(file)
        }
        None => args,
    };
    let suite = args.suite.unwrap_or(Suite::Harmonic);
    let kind = args.kind.unwrap_or(match (command, suite) {
        (Command::Verify, Suite::Block) => Kind::Block,
        _ => Kind::Harmonic,
    });
    let cfg = RunConfig {
        command,
        kind,
        delta: args.delta.unwrap_or(0.125),
        q1: args.q1.unwrap_or(8),
        blocks: args.blocks.unwrap_or(4),
        n: args.n.unwrap_or(10_000),
        seed: args.seed.unwrap_or(0),
        threads: args.threads.unwrap_or(1),
        out: args.out,
        format: args.format.unwrap_or(match command {
            Command::Verify => Format::Json,
            _ => Format::Csv,
        }),
        suite,
        meta: args.meta,
        summary: args.summary,
    };
    if !(cfg.delta > 0.0 && cfg.delta <= 0.125) {
        return Err(usage("delta", format_args!("must lie in (0, 1/8], got {}", cfg.delta)));
    }
    if cfg.q1 < 8 {
        return Err(usage("q1", format_args!("must be at least 8, got {}", cfg.q1)));
    }
    let min_blocks = if command == Command::Verify { 2 } else { 1 };
    if cfg.blocks < min_blocks {
        return Err(usage("blocks", format_args!("must be at least {min_blocks}, got {}", cfg.blocks)));
    }
    let min_n = if command == Command::Verify { 2 } else { 1 };
    if cfg.n < min_n {
        return Err(usage("n", format_args!("must be at least {min_n}, got {}", cfg.n)));
    }
    if cfg.threads == 0 {
        return Err(usage("threads", "must be at least 1"));
    }
    Ok(cfg)
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error("error: --{flag}: {source}")]
    Output {
        flag: &'static str,
        #[source]
        source: IoError,
    },
    #[error("error: {0}")]
    Mesh(#[from] MeshError),
    #[error("error: {0}")]
    Orbit(#[from] OrbitError),
    #[error("error: {0}")]
    Verify(#[from] VerifyError),
    #[error("error: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, IoError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn emit<T: Serialize>(
    flag: &'static str,
    path: Option<&Path>,
    format: Format,
    header: &[&str],
    rows: &[T],
) -> Result<(), RunError> {
    let wrap = |source: IoError| RunError::Output { flag, source };
    let mut w = sink(path).map_err(wrap)?;
    match format {
        Format::Csv => out::write_csv_with_header(header, rows, &mut w),
        Format::Json => out::write_json(&rows, &mut w),
    }
    .and_then(|()| w.flush().map_err(IoError::from))
    .map_err(wrap)
}

fn build_mesh(cfg: &RunConfig) -> Result<(Mesh<f64>, Option<BlockMeta>), MeshError> {
    match cfg.kind {
        Kind::Harmonic => Ok((build_harmonic_mesh(cfg.delta, cfg.n)?, None)),
        Kind::Block => build_block_mesh(cfg.q1, cfg.blocks).map(|(m, b)| (m, Some(b))),
    }
}

fn build_trace(orbit: &Orbit<f64>) -> Result<CesaroTrace<f64>, OrbitError> {
    let n = orbit.mesh().len();
    let probes: Vec<usize> = orbit
        .blocks()
        .map(|m| m.iter().flat_map(|b| [b.j_unit, b.end]).collect())
        .unwrap_or_default();
    let cap = SuiteOptions::default().stream_cap;
    if n <= cap {
        cesaro_norms(orbit, n, &probes)
    } else if probes.is_empty() {
        let geometric: Vec<usize> = std::iter::successors(Some(1usize), |&k| Some(k * 2))
            .take_while(|&k| k < n)
            .chain([n])
            .collect();
        cesaro_probe_norms(orbit, &geometric)
    } else {
        cesaro_probe_norms(orbit, &probes)
    }
}

#[derive(Serialize)]
struct OrbitRow {
    n: usize,
    t: f64,
    rho: f64,
}

const ORBIT_HEADER: [&str; 3] = ["n", "t", "rho"];

#[derive(Serialize)]
struct RecordRow<'a> {
    check_id: &'a str,
    params: String,
    margin: f64,
    pass: bool,
    tol: f64,
}

fn write_report(cfg: &RunConfig, rep: &VerificationReport) -> Result<PathBuf, RunError> {
    let path = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("report-{}.json", cfg.suite.name())));
    let wrap = |source: IoError| RunError::Output { flag: "out", source };
    match cfg.format {
        Format::Json => {
            std::fs::write(&path, rep.to_json() + "\n").map_err(|e| wrap(e.into()))?;
        }
        Format::Csv => {
            let rows: Vec<RecordRow> = rep
                .records
                .iter()
                .map(|r| RecordRow {
                    check_id: &r.check_id,
                    params: serde_json::to_string(&r.params).unwrap_or_default(),
                    margin: r.margin,
                    pass: r.pass,
                    tol: r.tol,
                })
                .collect();
            emit("out", Some(&path), Format::Csv, &["check_id", "params", "margin", "pass", "tol"], &rows)?;
        }
    }
    Ok(path)
}

fn execute(cfg: &RunConfig) -> Result<i32, RunError> {
    match cfg.command {
        Command::Mesh => {
            let (mesh, meta) = build_mesh(cfg)?;
            emit("out", cfg.out.as_deref(), cfg.format, &out::MESH_HEADER, &out::mesh_rows(&mesh, meta.as_ref()))?;
            if let (Some(path), Some(meta)) = (&cfg.meta, &meta) {
                emit("meta", Some(path), cfg.format, &out::BLOCK_HEADER, &out::block_rows(meta))?;
            }
            Ok(EXIT_OK)
        }
        Command::Orbit => {
            let (mesh, meta) = build_mesh(cfg)?;
            let orbit = build_orbit(mesh, meta)?;
            let rows: Vec<OrbitRow> = (1..=orbit.len())
                .map(|n| OrbitRow {
                    n,
                    t: orbit.t(n),
                    rho: orbit.rho(n),
                })
                .collect();
            emit("out", cfg.out.as_deref(), cfg.format, &ORBIT_HEADER, &rows)?;
            let (lo, hi) = orbit.rho_inf_bracket();
            eprintln!("rho_inf in [{lo}, {hi}]");
            Ok(EXIT_OK)
        }
        Command::Cesaro => {
            let (mesh, meta) = build_mesh(cfg)?;
            let orbit = build_orbit(mesh, meta)?;
            let trace = build_trace(&orbit)?;
            emit("out", cfg.out.as_deref(), cfg.format, &out::TRACE_HEADER, &out::trace_rows(&orbit, &trace))?;
            if let Some(path) = &cfg.summary {
                emit("summary", Some(path), cfg.format, &out::SUMMARY_HEADER, &block_summary(&orbit, &trace))?;
            }
            Ok(EXIT_OK)
        }
        Command::Export => {
            let (mesh, meta) = build_mesh(cfg)?;
            let orbit = build_orbit(mesh, meta)?;
            let trace = build_trace(&orbit)?;
            let rows = out::plot_rows(&orbit, &trace).map_err(|source| RunError::Output { flag: "out", source })?;
            emit("out", cfg.out.as_deref(), cfg.format, &out::PLOT_HEADER, &rows)?;
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let suite_cfg = SuiteConfig {
                delta: cfg.delta,
                n: cfg.n,
                q1: cfg.q1,
                blocks: cfg.blocks,
            };
            let rep = run_suite(cfg.suite.name(), &suite_cfg, &SuiteOptions::with_seed(cfg.seed))?;
            let path = write_report(cfg, &rep)?;
            println!("{}", rep.summary_line());
            for f in rep.failures() {
                eprintln!("FAIL {} margin={} tol={}", f.check_id, f.margin, f.tol);
            }
            eprintln!("report written to {}", path.display());
            Ok(report_exit_code(&rep))
        }
    }
}

fn report_exit_code(rep: &VerificationReport) -> i32 {
    if rep.all_passed() {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

/// Execute a resolved configuration on a pool of `cfg.threads` workers.
pub fn run(cfg: &RunConfig) -> i32 {
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(RunError::from)
        .and_then(|pool| pool.install(|| execute(cfg)));
    match result {
        Ok(code) => code,
        Err(RunError::Output { source, .. }) if source.is_broken_pipe() => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            EXIT_USAGE
        }
    }
}

/// Parse `args` (program name first) and run.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse(args) {
        Ok(Parsed::Run(cfg)) => run(&cfg),
        Ok(Parsed::Info(text)) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_report_exits_two() {
        let mut rep = VerificationReport::new("t", 0);
        rep.record("a", Default::default(), 0.0, 0.0);
        assert_eq!(report_exit_code(&rep), EXIT_OK);
        rep.record("b", Default::default(), -1.0, 0.5);
        assert_eq!(report_exit_code(&rep), EXIT_FAILED);
    }

    fn cfg(args: &[&str]) -> Result<RunConfig, UsageError> {
        let mut v = vec!["fneorbit"];
        v.extend_from_slice(args);
        match parse(v)? {
            Parsed::Run(c) => Ok(*c),
            Parsed::Info(_) => panic!("unexpected info"),
        }
    }

    #[test]
    fn defaults() {
        let c = cfg(&["verify"]).unwrap();
        assert_eq!(c.suite, Suite::Harmonic);
        assert_eq!((c.delta, c.n, c.threads, c.seed), (0.125, 10_000, 1, 0));
        assert_eq!(c.format, Format::Json);
        let c = cfg(&["verify", "--suite", "block"]).unwrap();
        assert_eq!(c.kind, Kind::Block);
        assert_eq!(cfg(&["mesh"]).unwrap().format, Format::Csv);
    }

    #[test]
    fn usage_errors_name_the_flag() {
        let e = cfg(&["mesh", "--kind", "harmonic", "--delta", "0.2"]).unwrap_err();
        assert!(e.0.contains("--delta") && !e.0.contains('\n'), "{e}");
        assert!(cfg(&["mesh", "--q1", "7"]).unwrap_err().0.contains("--q1"));
        assert!(cfg(&["mesh", "--threads", "0"]).unwrap_err().0.contains("--threads"));
        assert!(cfg(&["verify", "--blocks", "1"]).unwrap_err().0.contains("--blocks"));
        let e = cfg(&["mesh", "--delta", "abc"]).unwrap_err();
        assert!(e.0.contains("--delta") && !e.0.contains('\n'), "{e}");
        let e = cfg(&["mesh", "--kind", "spiral"]).unwrap_err();
        assert!(e.0.contains("--kind"), "{e}");
        assert!(cfg(&["frobnicate"]).is_err());
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"kind": "block", "q1": 9, "seed": 5, "format": "json"}"#).unwrap();
        let p = path.to_str().unwrap();
        let c = cfg(&["mesh", "--config", p, "--seed", "11"]).unwrap();
        assert_eq!((c.kind, c.q1, c.seed, c.format), (Kind::Block, 9, 11, Format::Json));
        std::fs::write(&path, r#"{"colour": 1}"#).unwrap();
        assert!(cfg(&["mesh", "--config", p]).unwrap_err().0.contains("--config"));
    }

    #[test]
    fn help_is_info() {
        assert!(matches!(parse(["fneorbit", "--help"]), Ok(Parsed::Info(_))));
    }
}
