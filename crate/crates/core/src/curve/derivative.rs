use super::{chord_distance, coord_component, coord_truncation_index, CurveError};
use crate::scalar::{compensated_sum, Real};

/// Absolute residuals of the curve-derivative identities, all computed from
/// central differences of coordinate components and of the chord metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeResiduals<F> {
    /// `<u'(t), u(t)> = 0`.
    pub tangent_orthogonal: F,
    /// `<u'(s), u'(t)> = (2 - 4 (s-t)^2) exp(-(s-t)^2)`.
    pub cross_inner: F,
    /// `||u'(t)|| = sqrt 2`.
    pub speed: F,
    /// `||u'(s) - u'(t)||^2 = 4 - 2 (2 - 4 (s-t)^2) exp(-(s-t)^2)`.
    pub difference_norm: F,
    /// `||u(t+h) - u(t-h)|| / 2h -> sqrt 2` through the chord metric.
    pub chord_speed: F,
}

impl<F: Real> DerivativeResiduals<F> {
    pub fn max(&self) -> F {
        [self.tangent_orthogonal, self.cross_inner, self.speed, self.difference_norm, self.chord_speed]
            .into_iter()
            .fold(F::zero(), F::max)
    }
}

/// Cross inner product `<u'(s), u'(t)>` of the curve.
pub fn derivative_kernel<F: Real>(s: F, t: F) -> F {
    let d2 = (s - t) * (s - t);
    (F::of(2.0) - F::of(4.0) * d2) * (-d2).exp()
}

pub fn derivative_identities<F: Real>(s: F, t: F, h: F) -> Result<DerivativeResiduals<F>, CurveError> {
    if !(h >= F::of(1e-7) && h <= F::of(1e-3)) {
        return Err(CurveError::StepOutOfRange(h.as_f64()));
    }
    let reach = s.abs().max(t.abs()) + h;
    let k_max = coord_truncation_index(reach.as_f64().max(1e-3), 1e-18)? + 16;
    let two_h = F::of(2.0) * h;
    let fd = |x: F| -> Vec<F> {
        (0..=k_max)
            .map(|k| (coord_component(k, x + h) - coord_component(k, x - h)) / two_h)
            .collect()
    };
    let vs = fd(s);
    let vt = fd(t);
    let ut: Vec<F> = (0..=k_max).map(|k| coord_component(k, t)).collect();

    let dot = |a: &[F], b: &[F]| compensated_sum(a.iter().zip(b).map(|(x, y)| *x * *y));
    let cross = derivative_kernel(s, t);
    let diff2 = compensated_sum(vs.iter().zip(&vt).map(|(a, b)| (*a - *b) * (*a - *b)));

    Ok(DerivativeResiduals {
        tangent_orthogonal: dot(&vt, &ut).abs(),
        cross_inner: (dot(&vs, &vt) - cross).abs(),
        speed: (dot(&vt, &vt).sqrt() - F::SQRT_2()).abs(),
        difference_norm: (diff2 - (F::of(4.0) - F::of(2.0) * cross)).abs(),
        chord_speed: (chord_distance(t - h, t + h) / two_h - F::SQRT_2()).abs(),
    })
}
