//! Cesaro means `y_n = (1/n) sum_{k<=n} x_k` and block means `z_k`.
//!
//! Every Gram row is summed sequentially with compensation and rows are
//! combined in index order, so the parallel loops give the same bits for any
//! thread count.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{Orbit, OrbitError};
use crate::mesh::BlockInfo;
use crate::scalar::{CompensatedSum, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct CesaroTrace<F> {
    indices: Vec<usize>,
    y_norm: Vec<F>,
    z_norm: Vec<F>,
    probe_indices: Vec<usize>,
    streamed_upto: usize,
}

impl<F: Real> CesaroTrace<F> {
    /// Indices `n` with a stored `||y_n||`, increasing.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Norms aligned with [`indices`](Self::indices).
    pub fn y_norms(&self) -> &[F] {
        &self.y_norm
    }

    pub fn y(&self, n: usize) -> Option<F> {
        self.indices.binary_search(&n).ok().map(|i| self.y_norm[i])
    }

    /// `||z_k||` for every complete block, `k = 1, 2, ...`; empty off block meshes.
    pub fn z_norms(&self) -> &[F] {
        &self.z_norm
    }

    pub fn z(&self, k: usize) -> Option<F> {
        k.checked_sub(1).and_then(|i| self.z_norm.get(i)).copied()
    }

    pub fn probe_indices(&self) -> &[usize] {
        &self.probe_indices
    }

    /// Every `n <= streamed_upto` is present.
    pub fn streamed_upto(&self) -> usize {
        self.streamed_upto
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, F)> + '_ {
        self.indices.iter().copied().zip(self.y_norm.iter().copied())
    }

    /// Rebuild from stored columns, e.g. after parsing an export.
    pub fn from_parts(pairs: Vec<(usize, F)>, z_norm: Vec<F>, probe_indices: Vec<usize>) -> Self {
        let mut pairs = pairs;
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by_key(|p| p.0);
        let streamed_upto = pairs.iter().enumerate().take_while(|(i, p)| p.0 == i + 1).count();
        let (indices, y_norm) = pairs.into_iter().unzip();
        CesaroTrace {
            indices,
            y_norm,
            z_norm,
            probe_indices,
            streamed_upto,
        }
    }
}

fn check_probe<F: Real>(orbit: &Orbit<F>, probe: &[usize]) -> Result<BTreeSet<usize>, OrbitError> {
    let set: BTreeSet<usize> = probe.iter().copied().collect();
    for &p in &set {
        orbit.check(p)?;
    }
    Ok(set)
}

/// `sum_{k<n} <x_k, x_n>`.
fn row_below<F: Real>(orbit: &Orbit<F>, n: usize) -> F {
    let mut s = CompensatedSum::new();
    for k in 1..n {
        s.add(orbit.gram(k, n));
    }
    s.value()
}

/// `||s_n||^2` as diagonal plus twice the strict lower triangle.
fn prefix_norm_sq<F: Real>(orbit: &Orbit<F>, n: usize) -> F {
    let rows: Vec<F> = (1..=n).into_par_iter().map(|j| row_below(orbit, j)).collect();
    let two = F::of(2.0);
    let mut s = CompensatedSum::new();
    for (j, r) in (1..=n).zip(rows) {
        s.add(orbit.gram(j, j));
        s.add(two * r);
    }
    s.value()
}

fn block_means<F: Real>(orbit: &Orbit<F>) -> Vec<F> {
    let Some(meta) = orbit.blocks() else {
        return Vec::new();
    };
    meta.iter()
        .filter(|b| b.end <= orbit.len())
        .map(|b| block_norm(orbit, b))
        .collect()
}

fn block_norm<F: Real>(orbit: &Orbit<F>, b: &BlockInfo) -> F {
    let rows: Vec<F> = (b.start..=b.end)
        .into_par_iter()
        .map(|i| {
            let mut s = CompensatedSum::new();
            for j in i + 1..=b.end {
                s.add(orbit.gram(i, j));
            }
            s.value()
        })
        .collect();
    let two = F::of(2.0);
    let mut s = CompensatedSum::new();
    for (i, r) in (b.start..=b.end).zip(rows) {
        s.add(orbit.gram(i, i));
        s.add(two * r);
    }
    s.value().max(F::zero()).sqrt() / F::of_usize(b.size())
}

/// `||y_n||` for every `n <= upto` through
/// `||s_n||^2 = ||s_{n-1}||^2 + 2 sum_{k<n} <x_k, x_n> + rho_n^2`.
/// Probe indices beyond `upto` are filled in directly. Block means are
/// attached for every block the orbit contains.
pub fn cesaro_norms<F: Real>(orbit: &Orbit<F>, upto: usize, probe: &[usize]) -> Result<CesaroTrace<F>, OrbitError> {
    if upto == 0 {
        return Err(OrbitError::ZeroUpto);
    }
    orbit.check(upto)?;
    let probe = check_probe(orbit, probe)?;

    let rows: Vec<F> = (2..=upto).into_par_iter().map(|n| row_below(orbit, n)).collect();
    let two = F::of(2.0);
    let mut s = CompensatedSum::new();
    let mut indices = Vec::with_capacity(upto + probe.len());
    let mut y_norm = Vec::with_capacity(upto + probe.len());
    s.add(orbit.gram(1, 1));
    indices.push(1);
    y_norm.push(s.value().sqrt());
    for (n, r) in (2..=upto).zip(rows) {
        s.add(two * r);
        s.add(orbit.gram(n, n));
        indices.push(n);
        y_norm.push(s.value().max(F::zero()).sqrt() / F::of_usize(n));
    }
    for &p in probe.range(upto + 1..) {
        indices.push(p);
        y_norm.push(prefix_norm_sq(orbit, p).max(F::zero()).sqrt() / F::of_usize(p));
    }
    Ok(CesaroTrace {
        indices,
        y_norm,
        z_norm: block_means(orbit),
        probe_indices: probe.into_iter().collect(),
        streamed_upto: upto,
    })
}

/// Norms at the probe indices only, for orbits too long to stream.
pub fn cesaro_probe_norms<F: Real>(orbit: &Orbit<F>, probe: &[usize]) -> Result<CesaroTrace<F>, OrbitError> {
    let probe = check_probe(orbit, probe)?;
    if probe.is_empty() {
        return Err(OrbitError::EmptyIndexSet);
    }
    let y_norm = probe
        .iter()
        .map(|&p| prefix_norm_sq(orbit, p).max(F::zero()).sqrt() / F::of_usize(p))
        .collect();
    let indices: Vec<usize> = probe.into_iter().collect();
    Ok(CesaroTrace {
        streamed_upto: usize::from(indices[0] == 1),
        probe_indices: indices.clone(),
        indices,
        y_norm,
        z_norm: block_means(orbit),
    })
}

/// `||y_n||` from the full `n x n` Gram double sum.
pub fn cesaro_norm_direct<F: Real>(orbit: &Orbit<F>, n: usize) -> Result<F, OrbitError> {
    orbit.check(n)?;
    let rows: Vec<F> = (1..=n)
        .into_par_iter()
        .map(|i| (1..=n).map(|j| orbit.gram(i, j)).collect::<CompensatedSum<F>>().value())
        .collect();
    let total = rows.into_iter().collect::<CompensatedSum<F>>().value();
    Ok(total.max(F::zero()).sqrt() / F::of_usize(n))
}

/// `||z_k||` for block `k`.
pub fn block_mean_norm<F: Real>(orbit: &Orbit<F>, k: usize) -> Result<F, OrbitError> {
    let meta = orbit.blocks().ok_or(OrbitError::NotBlockMesh)?;
    let b = meta.block(k).ok_or(OrbitError::NoSuchBlock(k))?;
    orbit.check(b.end)?;
    Ok(block_norm(orbit, b))
}

/// `(#I/n) rho_inf_lo exp(-D^2/2)` with `D` the knot spread over `I`.
pub fn cesaro_lemma_rhs<F: Real>(orbit: &Orbit<F>, n: usize, set: &[usize]) -> Result<F, OrbitError> {
    orbit.check(n)?;
    let set: BTreeSet<usize> = set.iter().copied().collect();
    let (Some(&lo), Some(&hi)) = (set.first(), set.last()) else {
        return Err(OrbitError::EmptyIndexSet);
    };
    if lo == 0 || hi > n {
        return Err(OrbitError::IndexOutOfRange { index: if lo == 0 { 0 } else { hi }, len: n });
    }
    let spread = orbit.t(hi) - orbit.t(lo);
    let frac = F::of_usize(set.len()) / F::of_usize(n);
    Ok(frac * orbit.rho_inf_bracket().0 * (-spread * spread / F::of(2.0)).exp())
}

/// `(||y_n||, lemma bound)` with the norm taken from the full Gram sum.
pub fn cesaro_lower_bound_check<F: Real>(orbit: &Orbit<F>, n: usize, set: &[usize]) -> Result<(F, F), OrbitError> {
    let rhs = cesaro_lemma_rhs(orbit, n, set)?;
    Ok((cesaro_norm_direct(orbit, n)?, rhs))
}
