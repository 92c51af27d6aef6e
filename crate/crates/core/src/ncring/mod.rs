//! Associative unital rings with a partial inverse.
//!
//! Every formula in the toolkit (Lax matrices, quasideterminants, Darboux
//! maps) is written once against [`NcRing`] and runs unchanged over complex
//! scalars, dense `d x d` complex matrices ([`CMat`]) and Moyal polynomials
//! ([`crate::moyal::MoyalPolynomial`]).

mod cmat;
mod scalar;

pub use cmat::CMat;

use num_complex::Complex64;
use thiserror::Error;

/// Reciprocal condition number below which an element is treated as singular.
pub const SINGULAR_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RingError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("near-singular element: reciprocal condition {rcond:.3e} below threshold {threshold:.1e}")]
    NearSingular { rcond: f64, threshold: f64 },
    #[error("deformation parameter mismatch: theta {left} vs {right}")]
    ThetaMismatch { left: f64, right: f64 },
    #[error("degree cap mismatch: {left} vs {right}")]
    CapMismatch { left: u32, right: u32 },
    #[error("product degree {degree} exceeds the degree cap {cap}")]
    DegreeOverflow { degree: u32, cap: u32 },
}

impl RingError {
    pub(crate) fn near_singular(rcond: f64) -> Self {
        RingError::NearSingular {
            rcond,
            threshold: SINGULAR_RCOND,
        }
    }
}

/// An element of an associative unital ring over the complex numbers.
///
/// Elements carry their own shape (the matrix side `d`, or the Moyal
/// deformation data), so `zero_like`/`one_like` build neutral elements of the
/// same shape. Binary operations check compatibility and never panic.
pub trait NcRing: Clone + std::fmt::Debug + Send + Sync + Sized {
    /// Side length of the matrix representation; `1` for scalar-like rings.
    fn dim(&self) -> usize;

    fn check_compatible(&self, other: &Self) -> Result<(), RingError> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(RingError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            })
        }
    }

    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;

    fn try_add(&self, other: &Self) -> Result<Self, RingError>;
    fn try_sub(&self, other: &Self) -> Result<Self, RingError>;
    fn try_mul(&self, other: &Self) -> Result<Self, RingError>;

    /// Multiplication by a central (commuting) scalar.
    fn scale(&self, c: Complex64) -> Self;

    fn inverse(&self) -> Result<Self, RingError>;

    /// `false` when [`NcRing::inverse`] is only approximate for this element.
    fn exact_inverse(&self) -> bool {
        true
    }

    /// Modulus for scalars, Frobenius norm for matrices.
    fn norm(&self) -> f64;

    fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    /// `self + c * one`.
    fn add_scalar(&self, c: Complex64) -> Self {
        self.try_add(&self.one_like().scale(c))
            .expect("one_like is always compatible")
    }

    /// `self * self * ...` (`n` factors); `one` for `n == 0`.
    fn try_pow(&self, n: u32) -> Result<Self, RingError> {
        let mut acc = self.one_like();
        for _ in 0..n {
            acc = acc.try_mul(self)?;
        }
        Ok(acc)
    }
}

/// `[a, b]_- = a b - b a`.
pub fn commutator<R: NcRing>(a: &R, b: &R) -> Result<R, RingError> {
    a.try_mul(b)?.try_sub(&b.try_mul(a)?)
}

/// `[a, b]_+ = a b + b a`.
pub fn anticommutator<R: NcRing>(a: &R, b: &R) -> Result<R, RingError> {
    a.try_mul(b)?.try_add(&b.try_mul(a)?)
}

/// `a b c`, left to right.
pub fn mul3<R: NcRing>(a: &R, b: &R, c: &R) -> Result<R, RingError> {
    a.try_mul(b)?.try_mul(c)
}

/// `norm(a - b)`; incompatible operands give `f64::INFINITY`.
pub fn distance<R: NcRing>(a: &R, b: &R) -> f64 {
    a.try_sub(b).map(|d| d.norm()).unwrap_or(f64::INFINITY)
}
