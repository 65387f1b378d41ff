//! Step-size sequences `d_n` and knots `t_n` underlying every orbit.
//!
//! Indices are 1-based throughout: `d(1)` is the first step, `t(1) = 0`, and
//! a mesh of length `N` stores knots `t_1..=t_{N+1}` so that every step has
//! both endpoints.

mod build;
mod validate;

pub use build::{build_block_mesh, build_block_mesh_with, build_harmonic_mesh, BlockMeshConfig, QChoice};
pub use validate::{check_axioms, form_agreement, validate_blocks, validate_mesh, FormAgreement, ValidateOptions};

use thiserror::Error;

use crate::scalar::{KnotAccumulator, MeshScalar, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("delta must lie in (0, 1/8], got {0}")]
    DeltaOutOfRange(f64),
    #[error("mesh length must be at least 1")]
    Empty,
    #[error("q1 must be an integer >= 8, got {0}")]
    Q1TooSmall(u64),
    #[error("block count must be at least 1")]
    NoBlocks,
    #[error("block parameter Q_{k} does not fit in 64 bits")]
    QOverflow { k: usize },
    #[error("{knots} knots supplied for {steps} steps (expected steps + 1)")]
    Shape { steps: usize, knots: usize },
    #[error("mesh violates {axiom} at n = {n}")]
    Axiom { axiom: &'static str, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshKind<S> {
    /// `d_n = delta / n`.
    Harmonic { delta: S },
    /// Block construction started from `d_1 = 1 / q1`.
    Block { q1: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<S> {
    d: Vec<S>,
    t: Vec<S>,
    kind: MeshKind<S>,
}

impl<S> Mesh<S> {
    /// Number of steps `N`.
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Step `d_n`, `1 <= n <= N`.
    #[inline]
    pub fn d(&self, n: usize) -> &S {
        &self.d[n - 1]
    }

    /// Knot `t_n`, `1 <= n <= N + 1`.
    #[inline]
    pub fn t(&self, n: usize) -> &S {
        &self.t[n - 1]
    }

    pub fn steps(&self) -> &[S] {
        &self.d
    }

    /// All knots `t_1..=t_{N+1}`.
    pub fn knots(&self) -> &[S] {
        &self.t
    }

    pub fn kind(&self) -> &MeshKind<S> {
        &self.kind
    }

}

impl<S: MeshScalar> Mesh<S> {
    /// Assemble a mesh from steps, accumulating knots with the scalar's
    /// accumulator (compensated for floats, exact for rationals).
    pub fn from_steps(d: Vec<S>, kind: MeshKind<S>) -> Result<Self, MeshError> {
        if d.is_empty() {
            return Err(MeshError::Empty);
        }
        let mut acc = S::Acc::start(S::zero());
        let mut t = Vec::with_capacity(d.len() + 1);
        t.push(S::zero());
        for step in &d {
            acc.add(step);
            t.push(acc.value());
        }
        Ok(Self { d, t, kind })
    }

    /// Assemble a mesh from stored steps and knots without recomputing them.
    pub fn from_parts(d: Vec<S>, t: Vec<S>, kind: MeshKind<S>) -> Result<Self, MeshError> {
        if d.is_empty() {
            return Err(MeshError::Empty);
        }
        if t.len() != d.len() + 1 {
            return Err(MeshError::Shape {
                steps: d.len(),
                knots: t.len(),
            });
        }
        Ok(Self { d, t, kind })
    }

    /// The first `len` steps (and `len + 1` knots).
    pub fn truncate(&self, len: usize) -> Result<Self, MeshError> {
        if len == 0 {
            return Err(MeshError::Empty);
        }
        let len = len.min(self.len());
        Ok(Self {
            d: self.d[..len].to_vec(),
            t: self.t[..=len].to_vec(),
            kind: self.kind.clone(),
        })
    }

    /// Round every stored value to a binary float.
    pub fn to_real<F: Real>(&self) -> Mesh<F> {
        let kind = match &self.kind {
            MeshKind::Harmonic { delta } => MeshKind::Harmonic { delta: delta.to_real() },
            MeshKind::Block { q1 } => MeshKind::Block { q1: *q1 },
        };
        Mesh {
            d: self.d.iter().map(|x| x.to_real()).collect(),
            t: self.t.iter().map(|x| x.to_real()).collect(),
            kind,
        }
    }
}

/// Metadata of one completed block `I_k = {start, ..., end}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockInfo {
    /// Block number, starting at 1.
    pub k: usize,
    /// Width `w_k = k + 1` the knots must cover before the block closes.
    pub w: u64,
    /// First index `i(k)`.
    pub start: usize,
    /// Last index `i(k+1) - 1`.
    pub end: usize,
    /// Integer parameter with `d_{i(k)} = 1 / Q_k`.
    pub q: u64,
    /// First index with `t_n >= t_{i(k)} + 1`.
    pub j_unit: usize,
}

impl BlockInfo {
    /// `#I_k`.
    pub fn size(&self) -> usize {
        self.end - self.start + 1
    }

    /// `#J_k` where `J_k = {i(k), ..., j_unit}`.
    pub fn unit_count(&self) -> usize {
        self.j_unit - self.start + 1
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn unit_indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.j_unit
    }

    pub fn contains(&self, n: usize) -> bool {
        self.start <= n && n <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BlockMeta {
    pub blocks: Vec<BlockInfo>,
}

impl BlockMeta {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block `k` (1-based).
    pub fn block(&self, k: usize) -> Option<&BlockInfo> {
        k.checked_sub(1).and_then(|i| self.blocks.get(i))
    }

    /// Number of the block containing index `n`.
    pub fn block_of(&self, n: usize) -> Option<usize> {
        let pos = self.blocks.partition_point(|b| b.end < n);
        self.blocks.get(pos).filter(|b| b.contains(n)).map(|b| b.k)
    }

    /// Last index covered by a completed block.
    pub fn covered_len(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.end)
    }

    pub fn iter(&self) -> impl Iterator<Item = &BlockInfo> {
        self.blocks.iter()
    }
}
