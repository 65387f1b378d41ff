//! Explicit counterexample orbits for firmly nonexpansive iteration.
//!
//! The orbit `x_n = rho_n * u(t_n)` lives on a curve of unit vectors whose
//! Gram kernel is the Gaussian `exp(-(s - t)^2)`. Everything here works with
//! that kernel in closed form: meshes of knots `t_n`, the norm sequence
//! `rho_n`, Cesaro means of the orbit and block means, together with checkers
//! for every inequality the construction relies on.
//!
//! Mesh construction is generic over [`MeshScalar`] (binary floats or exact
//! rationals); the analytic parts are generic over [`Real`] (`f32`/`f64`).
//! The aliases below name the concrete instantiations used by the CLI.

// NaN must fail these comparisons, so `!(a >= b)` is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod curve;
pub mod io;
pub mod mesh;
pub mod orbit;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod verify;

pub use curve::{CoordinateCurve, GaussianKernel, GaussianTranslateCurve, QuadratureRule};
pub use mesh::{BlockInfo, BlockMeta, Mesh, MeshError, MeshKind};
pub use orbit::{CesaroTrace, Orbit, OrbitError, OrbitIndex};
pub use report::{CheckRecord, VerificationReport};
pub use verify::{SuiteConfig, SuiteOptions, VerifyError};
pub use scalar::{CompensatedSum, MeshScalar, Real};

/// Exact rational scalar used by the debugging mesh mode.
pub type Rational = num_rational::BigRational;

pub type Mesh64 = Mesh<f64>;
pub type Mesh32 = Mesh<f32>;
pub type ExactMesh = Mesh<Rational>;
pub type Orbit64 = Orbit<f64>;
pub type Orbit32 = Orbit<f32>;
pub type CesaroTrace64 = CesaroTrace<f64>;
