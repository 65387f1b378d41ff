//! CSV and JSON export of meshes, block metadata, Cesaro traces and plot
//! series. Numbers use the shortest decimal that parses back to the same
//! `f64`, so every export re-reads exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{BlockInfo, BlockMeta, Mesh, MeshError, MeshKind};
use crate::orbit::{CesaroTrace, Orbit};
use crate::verify::BlockSummaryRow;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("malformed input: {0}")]
    Malformed(String),
}

impl IoError {
    /// The reader went away, e.g. stdout piped into `head`.
    pub fn is_broken_pipe(&self) -> bool {
        let kind = match self {
            IoError::Io(e) => Some(e.kind()),
            IoError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e.kind()),
                _ => None,
            },
            IoError::Json(e) => e.io_error_kind(),
            _ => None,
        };
        kind == Some(std::io::ErrorKind::BrokenPipe)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshRow {
    pub n: usize,
    /// Missing on the closing row, which only carries the last knot.
    pub d: Option<f64>,
    pub t: f64,
    pub block: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockRow {
    pub k: usize,
    pub w: u64,
    pub i: usize,
    #[serde(rename = "Q")]
    pub q: u64,
    pub block_end: usize,
    pub j_unit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub t: f64,
    pub rho: f64,
    pub y_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub n: usize,
    pub y_norm: f64,
    /// Empty for the series, `unit` or `end` for block markers.
    pub tag: String,
    pub k: Option<usize>,
}

pub fn mesh_rows(mesh: &Mesh<f64>, meta: Option<&BlockMeta>) -> Vec<MeshRow> {
    let block = |n: usize| meta.and_then(|m| m.block_of(n));
    (1..=mesh.len())
        .map(|n| MeshRow {
            n,
            d: Some(*mesh.d(n)),
            t: *mesh.t(n),
            block: block(n),
        })
        .chain(std::iter::once(MeshRow {
            n: mesh.len() + 1,
            d: None,
            t: *mesh.t(mesh.len() + 1),
            block: None,
        }))
        .collect()
}

pub fn mesh_from_rows(rows: &[MeshRow], kind: MeshKind<f64>) -> Result<Mesh<f64>, IoError> {
    let mut d = Vec::with_capacity(rows.len());
    let mut t = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.n != i + 1 {
            return Err(IoError::Malformed(format!("row {} has n = {}", i + 1, r.n)));
        }
        t.push(r.t);
        match (r.d, i + 1 == rows.len()) {
            (Some(v), false) => d.push(v),
            (None, true) => {}
            _ => return Err(IoError::Malformed(format!("step column at row {}", i + 1))),
        }
    }
    Ok(Mesh::from_parts(d, t, kind)?)
}

pub fn block_rows(meta: &BlockMeta) -> Vec<BlockRow> {
    meta.iter()
        .map(|b| BlockRow {
            k: b.k,
            w: b.w,
            i: b.start,
            q: b.q,
            block_end: b.end,
            j_unit: b.j_unit,
        })
        .collect()
}

pub fn meta_from_rows(rows: &[BlockRow]) -> BlockMeta {
    BlockMeta {
        blocks: rows
            .iter()
            .map(|r| BlockInfo {
                k: r.k,
                w: r.w,
                start: r.i,
                end: r.block_end,
                q: r.q,
                j_unit: r.j_unit,
            })
            .collect(),
    }
}

pub fn trace_rows(orbit: &Orbit<f64>, trace: &CesaroTrace<f64>) -> Vec<TraceRow> {
    trace
        .iter()
        .map(|(n, y)| TraceRow {
            n,
            t: orbit.t(n),
            rho: orbit.rho(n),
            y_norm: y,
        })
        .collect()
}

/// Rebuild the norm columns of a trace; block means are not part of the
/// trace export.
pub fn trace_from_rows(rows: &[TraceRow], probe_indices: Vec<usize>) -> CesaroTrace<f64> {
    CesaroTrace::from_parts(rows.iter().map(|r| (r.n, r.y_norm)).collect(), Vec::new(), probe_indices)
}

/// The `(n, ||y_n||)` series followed, on block meshes, by one `unit` and one
/// `end` marker per block.
pub fn plot_rows(orbit: &Orbit<f64>, trace: &CesaroTrace<f64>) -> Result<Vec<PlotRow>, IoError> {
    if trace.is_empty() {
        return Err(IoError::EmptyTrace);
    }
    let mut rows: Vec<PlotRow> = trace
        .iter()
        .map(|(n, y_norm)| PlotRow {
            n,
            y_norm,
            tag: String::new(),
            k: None,
        })
        .collect();
    if let Some(meta) = orbit.blocks() {
        for b in meta.iter() {
            for (n, tag) in [(b.j_unit, "unit"), (b.end, "end")] {
                if let Some(y_norm) = trace.y(n) {
                    rows.push(PlotRow {
                        n,
                        y_norm,
                        tag: tag.to_string(),
                        k: Some(b.k),
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with a header line even when `rows` is empty.
pub fn write_csv_with_header<T: Serialize, W: Write>(header: &[&str], rows: &[T], out: W) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<Vec<T>, IoError> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(IoError::from)).collect()
}

pub fn write_json<T: Serialize, W: Write>(rows: &T, mut out: W) -> Result<(), IoError> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<T, IoError> {
    Ok(serde_json::from_reader(input)?)
}

pub const MESH_HEADER: [&str; 4] = ["n", "d", "t", "block"];
pub const BLOCK_HEADER: [&str; 6] = ["k", "w", "i", "Q", "block_end", "j_unit"];
pub const TRACE_HEADER: [&str; 4] = ["n", "t", "rho", "y_norm"];
pub const SUMMARY_HEADER: [&str; 9] = ["k", "i", "j_unit", "j_end", "Q", "w", "z_norm", "y_at_j_unit", "y_at_j_end"];
pub const PLOT_HEADER: [&str; 4] = ["n", "y_norm", "tag", "k"];

pub fn write_summary_csv<W: Write>(rows: &[BlockSummaryRow], out: W) -> Result<(), IoError> {
    write_csv_with_header(&SUMMARY_HEADER, rows, out)
}
