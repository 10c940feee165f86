//! Scalar abstraction and a small fixed-size vector type.
//!
//! All numerical kernels in this crate are generic over [`Scalar`], so the
//! same code runs in `f32` and `f64`. Concrete aliases for the common `f64`
//! instantiation live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + AddAssign
    + SubAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Lifts an `f64` literal into the working scalar type.
#[inline]
pub fn lit<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("f64 literal not representable in scalar type")
}

/// A value carried with its summation compensation (Neumaier), giving
/// roughly twice the working precision for accumulation and comparison.
///
/// Objective values sit at O(1) while line-search decrements near a minimum
/// sit far below one ulp of that; comparing compensated pairs keeps the
/// Armijo test informative all the way down.
#[derive(Clone, Copy, Debug)]
pub struct Compensated<S> {
    value: S,
    compensation: S,
}

impl<S: Scalar> Compensated<S> {
    #[inline]
    pub fn zero() -> Self {
        Self {
            value: S::zero(),
            compensation: S::zero(),
        }
    }

    #[inline]
    pub fn from_value(value: S) -> Self {
        Self {
            value,
            compensation: S::zero(),
        }
    }

    /// Neumaier compensated accumulation.
    #[inline]
    pub fn add(&mut self, term: S) {
        let t = self.value + term;
        if self.value.abs() >= term.abs() {
            self.compensation += (self.value - t) + term;
        } else {
            self.compensation += (term - t) + self.value;
        }
        self.value = t;
    }

    /// Best single-scalar representation.
    #[inline]
    pub fn total(&self) -> S {
        self.value + self.compensation
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.compensation.is_finite()
    }

    /// Exactly normalized `(hi, lo)` pair.
    #[inline]
    fn normalized(&self) -> (S, S) {
        let s = self.value + self.compensation;
        let err = self.compensation - (s - self.value);
        (s, err)
    }

    /// Comparison at the precision of the compensated pair.
    pub fn le(&self, other: &Self) -> bool {
        let (ah, al) = self.normalized();
        let (bh, bl) = other.normalized();
        ah < bh || (ah == bh && al <= bl)
    }

    /// `self + t` as a compensated pair (two-sum with the scalar).
    pub fn offset(&self, t: S) -> Self {
        let mut out = *self;
        out.add(t);
        out
    }
}

/// A point or vector in at most two dimensions.
///
/// One-dimensional data is carried with `y = 0`, which keeps the Hamiltonian
/// and gradient kernels dimension-agnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec2<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Vec2<S> {
    #[inline]
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self {
            x: S::zero(),
            y: S::zero(),
        }
    }

    /// 1D point: `(x, 0)`.
    #[inline]
    pub fn along_x(x: S) -> Self {
        Self { x, y: S::zero() }
    }

    #[inline]
    pub fn dot(self, other: Self) -> S {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> S {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn scale(self, k: S) -> Self {
        Self {
            x: self.x * k,
            y: self.y * k,
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<S: Scalar> Add for Vec2<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<S: Scalar> Sub for Vec2<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<S: Scalar> Neg for Vec2<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<S: Scalar> Mul<S> for Vec2<S> {
    type Output = Self;
    #[inline]
    fn mul(self, k: S) -> Self {
        self.scale(k)
    }
}

impl<S: Scalar> Div<S> for Vec2<S> {
    type Output = Self;
    #[inline]
    fn div(self, k: S) -> Self {
        Self::new(self.x / k, self.y / k)
    }
}
