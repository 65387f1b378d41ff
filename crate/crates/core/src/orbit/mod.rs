//! The orbit `x_n = rho_n u(t_n)` handled entirely through its Gram kernel
//! `<x_m, x_n> = rho_m rho_n exp(-(t_n - t_m)^2)`.
//!
//! `rho` is kept in log space: `ln rho_n = -sum_{k<n} d_k^2` is accumulated
//! with compensated summation and exponentiated once per inner product. The
//! product recursion `rho_{n+1} = rho_n exp(-d_n^2)` is stored alongside as a
//! cross-check.

mod cesaro;

pub use cesaro::{
    block_mean_norm, cesaro_lemma_rhs, cesaro_lower_bound_check, cesaro_norm_direct, cesaro_norms,
    cesaro_probe_norms, CesaroTrace,
};

use std::fmt;

use thiserror::Error;

use crate::mesh::{check_axioms, BlockMeta, Mesh, MeshError, MeshKind};
use crate::scalar::{CompensatedSum, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error(transparent)]
    InvalidMesh(#[from] MeshError),
    #[error("index {index} outside the orbit (1..={len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("expected m < n, got m = {m}, n = {n}")]
    NotOrdered { m: OrbitIndex, n: OrbitIndex },
    #[error("cone coefficient for index {index} is negative")]
    NegativeCoefficient { index: usize },
    #[error("orbit was not built on a block mesh")]
    NotBlockMesh,
    #[error("block metadata covers {covered} steps but the mesh has {len}")]
    IncompleteBlocks { covered: usize, len: usize },
    #[error("block {0} does not exist")]
    NoSuchBlock(usize),
    #[error("index set is empty")]
    EmptyIndexSet,
    #[error("number of Cesaro means must be positive")]
    ZeroUpto,
}

/// A finite orbit index or the weak limit `x_inf = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrbitIndex {
    At(usize),
    Infinity,
}

impl OrbitIndex {
    /// Successor, with `inf + 1 = inf`.
    pub fn next(self) -> Self {
        match self {
            OrbitIndex::At(n) => OrbitIndex::At(n + 1),
            OrbitIndex::Infinity => OrbitIndex::Infinity,
        }
    }
}

impl From<usize> for OrbitIndex {
    fn from(n: usize) -> Self {
        OrbitIndex::At(n)
    }
}

impl fmt::Display for OrbitIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitIndex::At(n) => write!(f, "{n}"),
            OrbitIndex::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit<F> {
    mesh: Mesh<F>,
    blocks: Option<BlockMeta>,
    log_rho: Vec<F>,
    rho_rec: Vec<F>,
    bracket: (F, F),
}

/// Residuals of the orbit identities at one index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals<F> {
    /// `|<x_{n+1}, x_n> - rho_{n+1}^2| / rho_{n+1}^2`, with `rho` from the recursion.
    pub consecutive_inner: F,
    /// `|<x_{n+1}, x_{n+1}> - <x_n, x_{n+1}>| / rho_{n+1}^2`.
    pub orthogonality: F,
    /// Smallest of the Gram entries among `x_1, x_n, x_{n+1}`.
    pub min_gram: F,
}

/// Axiom-screen tolerance applied when building an orbit.
const BUILD_TOL: f64 = 1e-10;

/// Build the orbit on `mesh`. Block meshes must come with metadata covering
/// every step; the limit bracket depends on it.
pub fn build_orbit<F: Real>(mesh: Mesh<F>, blocks: Option<BlockMeta>) -> Result<Orbit<F>, OrbitError> {
    check_axioms(&mesh, BUILD_TOL)?;
    let n_len = mesh.len();

    let mut log_rho = Vec::with_capacity(n_len + 1);
    let mut rho_rec = Vec::with_capacity(n_len + 1);
    let mut acc = CompensatedSum::new();
    let mut rho = F::one();
    log_rho.push(F::zero());
    rho_rec.push(rho);
    for &d in mesh.steps() {
        acc.add(d * d);
        log_rho.push(-acc.value());
        rho = rho * (-(d * d)).exp();
        rho_rec.push(rho);
    }

    // tail bound on sum_{k >= N+1} d_k^2
    let tail = match mesh.kind() {
        MeshKind::Harmonic { delta } => {
            let delta = *delta;
            delta * delta / F::of_usize(n_len)
        }
        MeshKind::Block { .. } => {
            let meta = blocks.as_ref().ok_or(OrbitError::NotBlockMesh)?;
            if meta.covered_len() != n_len {
                return Err(OrbitError::IncompleteBlocks {
                    covered: meta.covered_len(),
                    len: n_len,
                });
            }
            let kk = meta.len() as i32;
            // sum_{j > K} (4^{-(j+1)} + 2^{-(j+1)})
            F::of(0.25f64.powi(kk + 1) / 3.0 + 0.5f64.powi(kk + 1))
        }
    };
    let last = (*log_rho.last().expect("nonempty")).exp();
    let bracket = (last * (-tail).exp(), last);
    Ok(Orbit {
        mesh,
        blocks,
        log_rho,
        rho_rec,
        bracket,
    })
}

impl<F: Real> Orbit<F> {
    /// Number of orbit points, `N + 1` for a mesh with `N` steps.
    pub fn len(&self) -> usize {
        self.log_rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_rho.is_empty()
    }

    pub fn mesh(&self) -> &Mesh<F> {
        &self.mesh
    }

    pub fn blocks(&self) -> Option<&BlockMeta> {
        self.blocks.as_ref()
    }

    /// `[lo, hi]` enclosing `rho_inf`.
    pub fn rho_inf_bracket(&self) -> (F, F) {
        self.bracket
    }

    #[inline]
    pub fn t(&self, n: usize) -> F {
        *self.mesh.t(n)
    }

    #[inline]
    pub fn log_rho(&self, n: usize) -> F {
        self.log_rho[n - 1]
    }

    #[inline]
    pub fn rho(&self, n: usize) -> F {
        self.log_rho[n - 1].exp()
    }

    /// `rho_n` from the product recursion.
    pub fn rho_recursive(&self, n: usize) -> F {
        self.rho_rec[n - 1]
    }

    /// Largest relative gap between the recursion and the closed form.
    pub fn rho_recursion_deviation(&self) -> F {
        (1..=self.len())
            .map(|n| ((self.rho_recursive(n) - self.rho(n)) / self.rho(n)).abs())
            .fold(F::zero(), F::max)
    }

    /// Gram entry for finite indices without range checks.
    #[inline]
    pub fn gram(&self, m: usize, n: usize) -> F {
        let dt = self.t(n) - self.t(m);
        (self.log_rho(m) + self.log_rho(n) - dt * dt).exp()
    }

    pub(crate) fn check(&self, n: usize) -> Result<(), OrbitError> {
        if n == 0 || n > self.len() {
            Err(OrbitError::IndexOutOfRange { index: n, len: self.len() })
        } else {
            Ok(())
        }
    }

    /// `<x_m, x_n>`, with `x_inf = 0`.
    pub fn pair_inner(&self, m: impl Into<OrbitIndex>, n: impl Into<OrbitIndex>) -> Result<F, OrbitError> {
        match (m.into(), n.into()) {
            (OrbitIndex::At(m), OrbitIndex::At(n)) => {
                self.check(m)?;
                self.check(n)?;
                Ok(self.gram(m, n))
            }
            (OrbitIndex::At(m), OrbitIndex::Infinity) | (OrbitIndex::Infinity, OrbitIndex::At(m)) => {
                self.check(m)?;
                Ok(F::zero())
            }
            (OrbitIndex::Infinity, OrbitIndex::Infinity) => Ok(F::zero()),
        }
    }

    pub fn orbit_identities(&self, n: usize) -> Result<IdentityResiduals<F>, OrbitError> {
        self.check(n)?;
        self.check(n + 1)?;
        let r2 = self.pair_inner(n + 1, n + 1)?;
        let cross = self.pair_inner(n + 1, n)?;
        let min_gram = [self.gram(n, n), cross, r2, self.gram(1, n), self.gram(1, n + 1)]
            .into_iter()
            .fold(F::infinity(), F::min);
        let rho2 = self.rho_recursive(n + 1) * self.rho_recursive(n + 1);
        Ok(IdentityResiduals {
            consecutive_inner: ((cross - rho2) / rho2).abs(),
            orthogonality: ((r2 - cross) / r2).abs(),
            min_gram,
        })
    }

    /// `<x_{m+1} - x_{n+1}, (x_m - x_{m+1}) - (x_n - x_{n+1})>` expanded into
    /// Gram entries. Nonnegative exactly when the orbit map is firmly
    /// nonexpansive on the pair; identically zero for `n = inf`.
    pub fn firm_residual(&self, m: usize, n: impl Into<OrbitIndex>) -> Result<F, OrbitError> {
        let n = n.into();
        let mi = OrbitIndex::At(m);
        if m == 0 || mi >= n {
            return Err(OrbitError::NotOrdered { m: mi, n });
        }
        if let OrbitIndex::At(nn) = n {
            self.check(nn + 1)?;
        }
        self.check(m + 1)?;
        let (m1, n1) = (mi.next(), n.next());
        let ip = |a: OrbitIndex, b: OrbitIndex| self.pair_inner(a, b);
        // <a, b - c - e + f> with a = x_{m+1} - x_{n+1}
        let terms = [
            ip(m1, mi)?,
            -ip(m1, m1)?,
            -ip(m1, n)?,
            ip(m1, n1)?,
            -ip(n1, mi)?,
            ip(n1, m1)?,
            ip(n1, n)?,
            -ip(n1, n1)?,
        ];
        Ok(terms.into_iter().collect::<CompensatedSum<F>>().value())
    }

    /// The same quantity through its factored form
    /// `rho_m rho_n exp(-d_m^2 - d_n^2 - D^2) (2 - exp(2 d_n D) - exp(-2 d_m D))`
    /// with `D = t_{n+1} - t_{m+1}`; independent of the Gram expansion.
    pub fn firm_residual_factored(&self, m: usize, n: usize) -> Result<F, OrbitError> {
        if m == 0 || m >= n {
            return Err(OrbitError::NotOrdered { m: m.into(), n: n.into() });
        }
        self.check(n + 1)?;
        let (dm, dn) = (*self.mesh.d(m), *self.mesh.d(n));
        let gap = self.t(n + 1) - self.t(m + 1);
        let two = F::of(2.0);
        let scale = (self.log_rho(m) + self.log_rho(n) - dm * dm - dn * dn - gap * gap).exp();
        Ok(scale * (-(two * dn * gap).exp_m1() - (-two * dm * gap).exp_m1()))
    }

    /// `(<x_{n+1} - y, x_n - x_{n+1}>, <x_{n+1}, y> - <x_n, y>)` for the cone
    /// element `y = sum c_p x_p`; the two agree because of the orthogonality
    /// `<x_{n+1}, x_n - x_{n+1}> = 0`.
    pub fn david_equivalence_residual(&self, coeffs: &[(usize, F)], n: usize) -> Result<(F, F), OrbitError> {
        self.check(n + 1)?;
        for &(p, c) in coeffs {
            self.check(p)?;
            if c < F::zero() {
                return Err(OrbitError::NegativeCoefficient { index: p });
            }
        }
        let mut lhs = CompensatedSum::new();
        lhs.add(self.gram(n + 1, n));
        lhs.add(-self.gram(n + 1, n + 1));
        let mut rhs = CompensatedSum::new();
        for &(p, c) in coeffs {
            lhs.add(-c * self.gram(p, n));
            lhs.add(c * self.gram(p, n + 1));
            rhs.add(c * self.gram(n + 1, p));
            rhs.add(-c * self.gram(n, p));
        }
        Ok((lhs.value(), rhs.value()))
    }

    /// `<u(s), x_n> = rho_n exp(-(s - t_n)^2)`.
    pub fn weak_probe(&self, s: F, n: usize) -> Result<F, OrbitError> {
        self.check(n)?;
        let dt = s - self.t(n);
        Ok((self.log_rho(n) - dt * dt).exp())
    }
}
