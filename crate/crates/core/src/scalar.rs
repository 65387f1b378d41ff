//! Scalar traits: [`Real`] for analytic code, [`MeshScalar`] for mesh
//! construction (which also admits exact rationals).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, Signed, ToPrimitive};

/// Binary floating point type usable by the kernel, curve and orbit code.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumCast + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; exact for `f64`.
    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 is representable")
    }

    fn of_usize(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("usize is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier's variant of compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum<F> {
    sum: F,
    comp: F,
}

impl<F: Float> CompensatedSum<F> {
    pub fn new() -> Self {
        Self { sum: F::zero(), comp: F::zero() }
    }

    #[inline]
    pub fn add(&mut self, x: F) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> F {
        self.sum + self.comp
    }

    /// Combine two partial sums, keeping both error terms.
    pub fn merge(mut self, other: Self) -> Self {
        self.add(other.sum);
        self.comp = self.comp + other.comp;
        self
    }
}

impl<F: Float> FromIterator<F> for CompensatedSum<F> {
    fn from_iter<I: IntoIterator<Item = F>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of floats.
pub fn compensated_sum<F: Float, I: IntoIterator<Item = F>>(iter: I) -> F {
    iter.into_iter().collect::<CompensatedSum<F>>().value()
}

/// Running knot accumulator: compensated for floats, exact for rationals.
pub trait KnotAccumulator<S>: Clone + Debug {
    fn start(value: S) -> Self;
    fn add(&mut self, x: &S);
    fn value(&self) -> S;
}

impl<F: Float + Debug> KnotAccumulator<F> for CompensatedSum<F> {
    fn start(value: F) -> Self {
        let mut acc = CompensatedSum::new();
        acc.add(value);
        acc
    }

    fn add(&mut self, x: &F) {
        CompensatedSum::add(self, *x)
    }

    fn value(&self) -> F {
        CompensatedSum::value(self)
    }
}

#[derive(Debug, Clone)]
pub struct ExactSum(BigRational);

impl KnotAccumulator<BigRational> for ExactSum {
    fn start(value: BigRational) -> Self {
        ExactSum(value)
    }

    fn add(&mut self, x: &BigRational) {
        self.0 += x;
    }

    fn value(&self) -> BigRational {
        self.0.clone()
    }
}

/// Field in which meshes are built.
pub trait MeshScalar: Clone + Debug + PartialOrd + Num + Send + Sync {
    type Acc: KnotAccumulator<Self>;

    fn from_u64(v: u64) -> Self;

    fn ratio(num: u64, den: u64) -> Self {
        Self::from_u64(num) / Self::from_u64(den)
    }

    /// Smallest integer `q >= self`; `None` if negative or out of range.
    fn ceil_u64(&self) -> Option<u64>;

    fn to_f64(&self) -> f64;

    /// Conversion to a binary float (rounded).
    fn to_real<F: Real>(&self) -> F {
        F::of(self.to_f64())
    }
}

macro_rules! float_mesh_scalar {
    ($t:ty) => {
        impl MeshScalar for $t {
            type Acc = CompensatedSum<$t>;

            fn from_u64(v: u64) -> Self {
                v as $t
            }

            fn ceil_u64(&self) -> Option<u64> {
                if !self.is_finite() || *self < 0.0 {
                    return None;
                }
                self.ceil().to_u64()
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }
        }
    };
}

float_mesh_scalar!(f32);
float_mesh_scalar!(f64);

impl MeshScalar for BigRational {
    type Acc = ExactSum;

    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn ceil_u64(&self) -> Option<u64> {
        if self.is_negative() {
            return None;
        }
        self.ceil().to_integer().to_u64()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0e16_f64);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1.0e16);
        assert_eq!(acc.value(), 1000.0);
    }

    #[test]
    fn compensated_harmonic_matches_exact() {
        let n = 2000u64;
        let naive: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
        let comp = compensated_sum((1..=n).map(|k| 1.0 / k as f64));
        let exact: BigRational = (1..=n).map(|k| BigRational::ratio(1, k)).fold(BigRational::zero(), |a, b| a + b);
        let exact = MeshScalar::to_f64(&exact);
        assert!((comp - exact).abs() <= f64::EPSILON * exact);
        assert!((comp - exact).abs() <= (naive - exact).abs());
    }

    #[test]
    fn rational_ceil() {
        assert_eq!(BigRational::ratio(17, 8).ceil_u64(), Some(3));
        assert_eq!(BigRational::ratio(16, 8).ceil_u64(), Some(2));
        assert_eq!(2.0000001_f64.ceil_u64(), Some(3));
        assert_eq!((-1.0_f64).ceil_u64(), None);
    }
}
