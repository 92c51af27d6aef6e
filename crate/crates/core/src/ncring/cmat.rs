use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::{NcRing, RingError, SINGULAR_RCOND};

/// Dense `d x d` complex matrix. The side length is a runtime property.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat(DMatrix<Complex64>);

impl CMat {
    pub fn zeros(d: usize) -> Self {
        assert!(d > 0, "matrix side must be positive");
        CMat(DMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        assert!(d > 0, "matrix side must be positive");
        CMat(DMatrix::identity(d, d))
    }

    /// Scalar multiple of the identity.
    pub fn scalar(d: usize, c: Complex64) -> Self {
        CMat::identity(d).scale(c)
    }

    pub fn from_fn(d: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(d > 0, "matrix side must be positive");
        CMat(DMatrix::from_fn(d, d, f))
    }

    /// Panics unless `rows` is square and non-empty.
    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let d = rows.len();
        assert!(rows.iter().all(|r| r.len() == d), "rows must form a square matrix");
        CMat::from_fn(d, |i, j| rows[i][j])
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let d = rows.len();
        assert!(rows.iter().all(|r| r.len() == d), "rows must form a square matrix");
        CMat::from_fn(d, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    /// Entries with real and imaginary parts uniform in `[-1, 1)`.
    pub fn random<G: Rng + ?Sized>(d: usize, rng: &mut G) -> Self {
        CMat::from_fn(d, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    /// Row-major entries.
    pub fn entries(&self) -> Vec<Complex64> {
        let d = self.0.nrows();
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| self.0[(i, j)])
            .collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.0.clone().singular_values().iter().copied().collect()
    }

    /// `sigma_min / sigma_max`, zero for the zero matrix.
    pub fn rcond(&self) -> f64 {
        let sv = self.singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if max > 0.0 && max.is_finite() {
            min / max
        } else {
            0.0
        }
    }
}

impl NcRing for CMat {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn zero_like(&self) -> Self {
        CMat::zeros(self.dim())
    }

    fn one_like(&self) -> Self {
        CMat::identity(self.dim())
    }

    fn try_add(&self, other: &Self) -> Result<Self, RingError> {
        self.check_compatible(other)?;
        Ok(CMat(&self.0 + &other.0))
    }

    fn try_sub(&self, other: &Self) -> Result<Self, RingError> {
        self.check_compatible(other)?;
        Ok(CMat(&self.0 - &other.0))
    }

    fn try_mul(&self, other: &Self) -> Result<Self, RingError> {
        self.check_compatible(other)?;
        Ok(CMat(&self.0 * &other.0))
    }

    fn scale(&self, c: Complex64) -> Self {
        CMat(&self.0 * c)
    }

    // LU with partial pivoting, guarded by the singular-value ratio.
    fn inverse(&self) -> Result<Self, RingError> {
        let rcond = self.rcond();
        if !(rcond >= SINGULAR_RCOND) {
            return Err(RingError::near_singular(rcond));
        }
        self.0
            .clone()
            .lu()
            .try_inverse()
            .map(CMat)
            .ok_or_else(|| RingError::near_singular(rcond))
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl Add for &CMat {
    type Output = CMat;

    fn add(self, rhs: &CMat) -> CMat {
        self.try_add(rhs).expect("CMat + CMat: dimension mismatch")
    }
}

impl Sub for &CMat {
    type Output = CMat;

    fn sub(self, rhs: &CMat) -> CMat {
        self.try_sub(rhs).expect("CMat - CMat: dimension mismatch")
    }
}

impl Mul for &CMat {
    type Output = CMat;

    fn mul(self, rhs: &CMat) -> CMat {
        self.try_mul(rhs).expect("CMat * CMat: dimension mismatch")
    }
}

impl Neg for &CMat {
    type Output = CMat;

    fn neg(self) -> CMat {
        CMat(-&self.0)
    }
}
