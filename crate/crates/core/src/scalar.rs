//! Scalar abstraction shared by the probabilistic model.
//!
//! The Poisson-binomial recursion and the moment formulas only need ring
//! operations, so they run unchanged over `f32`, `f64` and exact big
//! rationals. Transcendental quantities (MGFs, rate functions) additionally
//! require [`num_traits::Float`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

/// A probability-carrying number: closed under `+ - * /`, ordered, and
/// constructible from an exact fraction.
pub trait Scalar: Num + Clone + PartialOrd + Debug + Send + Sync {
    fn from_ratio(num: u64, den: u64) -> Self;

    fn from_u64(v: u64) -> Self {
        Self::from_ratio(v, 1)
    }

    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Neumaier-compensated running sum, used wherever long series of small
/// positive terms are accumulated.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}
