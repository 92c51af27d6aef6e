use num_complex::Complex64;

use super::{NcRing, RingError};

/// Complex scalars: the commutative `d = 1` instance.
impl NcRing for Complex64 {
    fn dim(&self) -> usize {
        1
    }

    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one_like(&self) -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn try_add(&self, other: &Self) -> Result<Self, RingError> {
        Ok(self + other)
    }

    fn try_sub(&self, other: &Self) -> Result<Self, RingError> {
        Ok(self - other)
    }

    fn try_mul(&self, other: &Self) -> Result<Self, RingError> {
        Ok(self * other)
    }

    fn scale(&self, c: Complex64) -> Self {
        self * c
    }

    fn inverse(&self) -> Result<Self, RingError> {
        let r = Complex64::norm(*self);
        if r == 0.0 || !r.is_finite() {
            return Err(RingError::near_singular(0.0));
        }
        Ok(self.inv())
    }

    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}
