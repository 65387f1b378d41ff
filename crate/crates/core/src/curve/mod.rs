//! The Gaussian kernel `K(s, t) = exp(-(s - t)^2)` and two concrete curves of
//! unit vectors realizing it: coordinates in an orthonormal sequence, and
//! translated Gaussians in `L^2(R)`.

mod derivative;
mod quadrature;

pub use derivative::{derivative_identities, DerivativeResiduals};
pub use quadrature::{GaussLegendre, QuadratureRule};

use thiserror::Error;

use crate::scalar::{compensated_sum, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("tolerance must be positive, got {0}")]
    NonPositiveEps(f64),
    #[error("domain bound must be positive, got {0}")]
    NonPositiveDomain(f64),
    #[error("integration half-width {0} is below the required 9")]
    WindowTooNarrow(f64),
    #[error("quadrature needs order >= 1 and a positive panel width")]
    BadQuadrature,
    #[error("finite-difference step {0} outside [1e-7, 1e-3]")]
    StepOutOfRange(f64),
}

/// Stateless Gaussian kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GaussianKernel;

impl GaussianKernel {
    pub fn eval<F: Real>(&self, s: F, t: F) -> F {
        kernel_eval(s, t)
    }

    pub fn chord<F: Real>(&self, s: F, t: F) -> F {
        chord_distance(s, t)
    }
}

/// `exp(-(s - t)^2)`, in `(0, 1]` and symmetric.
#[inline]
pub fn kernel_eval<F: Real>(s: F, t: F) -> F {
    let d = s - t;
    (-(d * d)).exp()
}

/// `||u(s) - u(t)|| = sqrt(2 (1 - K(s, t)))`.
pub fn chord_distance<F: Real>(s: F, t: F) -> F {
    (F::of(2.0) * (F::one() - kernel_eval(s, t))).sqrt()
}

/// `ln k!` through the log-gamma function.
fn ln_factorial(k: usize) -> f64 {
    statrs::function::gamma::ln_gamma(k as f64 + 1.0)
}

/// Coordinate `u_k(t) = exp(-t^2) sqrt(2^k / k!) t^k`, evaluated in the log
/// domain. Negative `t` is accepted (the formula is entire) so that central
/// differences work at the origin.
pub fn coord_component<F: Real>(k: usize, t: F) -> F {
    if t.is_zero() {
        return if k == 0 { F::one() } else { F::zero() };
    }
    let kf = F::of_usize(k);
    let log_norm = (kf * F::LN_2() - F::of(ln_factorial(k))) / F::of(2.0);
    let mag = (-(t * t) + log_norm + kf * t.abs().ln()).exp();
    if t < F::zero() && k % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// Derivative `v_k(t) = exp(-t^2) sqrt(2^k / k!) (k t^{k-1} - 2 t^{k+1})`.
pub fn coord_derivative_component<F: Real>(k: usize, t: F) -> F {
    if t.is_zero() {
        return if k == 1 { F::SQRT_2() } else { F::zero() };
    }
    (F::of_usize(k) / t - F::of(2.0) * t) * coord_component(k, t)
}

/// Truncation order `K` with `sum_{k > K} u_k(s) u_k(t) <= eps` for all
/// `s, t` in `[0, s_max]`.
///
/// Uses the exponential-series tail `R_K(x) <= x^{K+1} / ((K+1)! (1 - x/(K+2)))`
/// at `x = 2 s_max^2`, valid once `K + 2 > x`. For `eps >= 1` the whole series
/// (at most 1) is already within tolerance and `0` is returned.
pub fn coord_truncation_index(s_max: f64, eps: f64) -> Result<usize, CurveError> {
    if !(eps > 0.0) {
        return Err(CurveError::NonPositiveEps(eps));
    }
    if !(s_max > 0.0) || !s_max.is_finite() {
        return Err(CurveError::NonPositiveDomain(s_max));
    }
    if eps >= 1.0 {
        return Ok(0);
    }
    let x = 2.0 * s_max * s_max;
    let log_eps = eps.ln();
    let mut k = (x - 2.0).max(0.0).floor() as usize;
    loop {
        let kp2 = k as f64 + 2.0;
        if kp2 > x {
            let log_tail = (k as f64 + 1.0) * x.ln() - ln_factorial(k + 1) - (1.0 - x / kp2).ln();
            if log_tail <= log_eps {
                return Ok(k);
            }
        }
        k += 1;
    }
}

/// Partial sum `sum_{k=0}^{K} u_k(s) u_k(t)`; never exceeds `K(s, t)` for
/// `s, t >= 0`.
pub fn coord_inner_truncated<F: Real>(s: F, t: F, k_max: usize) -> F {
    compensated_sum((0..=k_max).map(|k| coord_component(k, s) * coord_component(k, t)))
}

/// Coordinate realization truncated for a domain `[0, s_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateCurve<F> {
    pub k_max: usize,
    pub s_max: F,
}

impl<F: Real> CoordinateCurve<F> {
    pub fn new(s_max: F, eps: f64) -> Result<Self, CurveError> {
        let k_max = coord_truncation_index(s_max.as_f64(), eps)?;
        Ok(Self { k_max, s_max })
    }

    pub fn component(&self, k: usize, t: F) -> F {
        coord_component(k, t)
    }

    /// Coordinates `u_0(t), ..., u_K(t)`.
    pub fn point(&self, t: F) -> Vec<F> {
        (0..=self.k_max).map(|k| coord_component(k, t)).collect()
    }

    pub fn inner(&self, s: F, t: F) -> F {
        coord_inner_truncated(s, t, self.k_max)
    }
}

/// Translated Gaussian realization in `L^2(R)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GaussianTranslateCurve;

impl GaussianTranslateCurve {
    pub fn point<F: Real>(&self, t: F, r: F) -> F {
        l2_point_eval(t, r)
    }

    /// `u'(t)(r) = pi^{-1/4} 2 (r - 2t) exp(-(r - 2t)^2 / 2)`.
    pub fn derivative<F: Real>(&self, t: F, r: F) -> F {
        let c = r - F::of(2.0) * t;
        F::of(2.0) * c * l2_point_eval(t, r)
    }

    pub fn inner<F: Real>(&self, s: F, t: F, quad: &QuadratureRule<F>) -> Result<F, CurveError> {
        l2_inner_quadrature(s, t, quad)
    }
}

/// `pi^{-1/4} exp(-(r - 2t)^2 / 2)`.
pub fn l2_point_eval<F: Real>(t: F, r: F) -> F {
    let c = r - F::of(2.0) * t;
    F::PI().powf(F::of(-0.25)) * (-(c * c) / F::of(2.0)).exp()
}

/// Integrate `u(s)(r) u(t)(r)` over `[2 min(s,t) - W, 2 max(s,t) + W]`.
pub fn l2_inner_quadrature<F: Real>(s: F, t: F, quad: &QuadratureRule<F>) -> Result<F, CurveError> {
    quad.check()?;
    let two = F::of(2.0);
    let lo = two * s.min(t) - quad.half_width;
    let hi = two * s.max(t) + quad.half_width;
    Ok(quad.integrate(lo, hi, |r| l2_point_eval(s, r) * l2_point_eval(t, r)))
}
