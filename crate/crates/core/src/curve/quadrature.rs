use std::f64::consts::PI;

use super::CurveError;
use crate::scalar::{CompensatedSum, Real};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev-like initial guesses.
    pub fn new(order: usize) -> Self {
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule: panels of width at most `panel_width`,
/// `order` nodes each; `half_width` is the margin added beyond the integrand
/// centres by callers that pick their own window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule<F> {
    pub order: usize,
    pub panel_width: F,
    pub half_width: F,
}

impl<F: Real> Default for QuadratureRule<F> {
    fn default() -> Self {
        Self {
            order: 20,
            panel_width: F::of(0.5),
            half_width: F::of(9.0),
        }
    }
}

impl<F: Real> QuadratureRule<F> {
    pub fn check(&self) -> Result<(), CurveError> {
        if self.order == 0 || !(self.panel_width > F::zero()) {
            return Err(CurveError::BadQuadrature);
        }
        if !(self.half_width >= F::of(9.0)) {
            return Err(CurveError::WindowTooNarrow(self.half_width.as_f64()));
        }
        Ok(())
    }

    pub fn integrate(&self, a: F, b: F, f: impl Fn(F) -> F) -> F {
        let rule = GaussLegendre::new(self.order);
        let panels = ((b - a) / self.panel_width).ceil().to_usize().unwrap_or(1).max(1);
        let h = (b - a) / F::of_usize(panels);
        let half = h / F::of(2.0);
        let mut acc = CompensatedSum::new();
        for p in 0..panels {
            let mid = a + h * F::of_usize(p) + half;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                acc.add(F::of(*w) * half * f(mid + half * F::of(*x)));
            }
        }
        acc.value()
    }
}
