//! Moyal star product on polynomials in two noncommuting coordinates.
//!
//! With `theta^{12} = -theta^{21} = theta` the bidifferential exponential
//!
//! ```text
//! f * g = sum_k (i theta / 2)^k / k!  sum_j C(k, j) (-1)^(k-j)
//!           (d1^j d2^(k-j) f) (d1^(k-j) d2^j g)
//! ```
//!
//! terminates once `k` exceeds the degree of either factor, so the product
//! is computed exactly. A polynomial is stored as a map from exponent pairs
//! `(m, n)` (for `x1^m x2^n`) to complex coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::ncring::{NcRing, RingError};

pub const DEFAULT_DEGREE_CAP: u32 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct MoyalPolynomial {
    theta: f64,
    cap: u32,
    coeffs: BTreeMap<(u32, u32), Complex64>,
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).map(|i| f64::from(n - i)).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    falling(n, k) / falling(k, k)
}

impl MoyalPolynomial {
    pub fn zero(theta: f64) -> Self {
        Self::zero_with_cap(theta, DEFAULT_DEGREE_CAP)
    }

    pub fn zero_with_cap(theta: f64, cap: u32) -> Self {
        MoyalPolynomial {
            theta,
            cap,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(theta: f64, c: Complex64) -> Self {
        Self::monomial(theta, 0, 0, c)
    }

    /// `c x1^m x2^n` with the default degree cap. Panics if `m + n` exceeds it.
    pub fn monomial(theta: f64, m: u32, n: u32, c: Complex64) -> Self {
        Self::zero(theta).with_term(m, n, c)
    }

    pub fn x1(theta: f64) -> Self {
        Self::monomial(theta, 1, 0, Complex64::new(1.0, 0.0))
    }

    pub fn x2(theta: f64) -> Self {
        Self::monomial(theta, 0, 1, Complex64::new(1.0, 0.0))
    }

    /// Adds `c x1^m x2^n`. Panics if the monomial exceeds the degree cap.
    pub fn with_term(mut self, m: u32, n: u32, c: Complex64) -> Self {
        assert!(m + n <= self.cap, "monomial degree {} exceeds cap {}", m + n, self.cap);
        self.accumulate((m, n), c);
        self
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn coeff(&self, m: u32, n: u32) -> Complex64 {
        self.coeffs.get(&(m, n)).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.coeffs.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|(m, n)| m + n).max()
    }

    /// Largest coefficient modulus.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Same polynomial, reinterpreted with a different deformation parameter.
    pub fn with_theta(&self, theta: f64) -> Self {
        MoyalPolynomial {
            theta,
            ..self.clone()
        }
    }

    fn accumulate(&mut self, key: (u32, u32), c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let slot = self.coeffs.entry(key).or_default();
        *slot += c;
        if *slot == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&key);
        }
    }

    fn check_shared(&self, other: &Self) -> Result<(), RingError> {
        if self.theta.to_bits() != other.theta.to_bits() {
            return Err(RingError::ThetaMismatch {
                left: self.theta,
                right: other.theta,
            });
        }
        if self.cap != other.cap {
            return Err(RingError::CapMismatch {
                left: self.cap,
                right: other.cap,
            });
        }
        Ok(())
    }

    /// Ordinary commutative product `f g`.
    pub fn pointwise_product(&self, other: &Self) -> Result<Self, RingError> {
        self.check_shared(other)?;
        self.check_degree(other)?;
        let mut out = Self::zero_with_cap(self.theta, self.cap);
        for (&(a, b), &f) in &self.coeffs {
            for (&(c, d), &g) in &other.coeffs {
                out.accumulate((a + c, b + d), f * g);
            }
        }
        Ok(out)
    }

    fn check_degree(&self, other: &Self) -> Result<(), RingError> {
        if let (Some(df), Some(dg)) = (self.degree(), other.degree()) {
            if df + dg > self.cap {
                return Err(RingError::DegreeOverflow {
                    degree: df + dg,
                    cap: self.cap,
                });
            }
        }
        Ok(())
    }

    /// Exact star product. The top-degree part of `f * g` is the ordinary
    /// product of the top parts, so `deg f + deg g` must fit under the cap.
    pub fn star_product(&self, other: &Self) -> Result<Self, RingError> {
        self.check_shared(other)?;
        self.check_degree(other)?;
        Ok(self.star_unchecked(other, None))
    }

    /// Star product with every monomial above the cap discarded.
    fn star_truncated(&self, other: &Self) -> Self {
        self.star_unchecked(other, Some(self.cap))
    }

    fn star_unchecked(&self, other: &Self, truncate: Option<u32>) -> Self {
        let half = Complex64::new(0.0, self.theta / 2.0);
        let mut out = Self::zero_with_cap(self.theta, self.cap);
        for (&(a, b), &f) in &self.coeffs {
            for (&(c, d), &g) in &other.coeffs {
                let kmax = (a + b).min(c + d);
                let mut weight = Complex64::new(1.0, 0.0);
                for k in 0..=kmax {
                    if k > 0 {
                        weight = weight * half / f64::from(k);
                    }
                    if a + c < k || b + d < k {
                        break;
                    }
                    let key = (a + c - k, b + d - k);
                    if truncate.is_some_and(|cap| key.0 + key.1 > cap) {
                        continue;
                    }
                    // j derivatives in x1 on f (and in x2 on g), k - j in x2 on f (x1 on g).
                    let mut sum = 0.0;
                    for j in 0..=k {
                        if j > a || k - j > b || k - j > c || j > d {
                            continue;
                        }
                        let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
                        sum += sign
                            * binomial(k, j)
                            * falling(a, j)
                            * falling(b, k - j)
                            * falling(c, k - j)
                            * falling(d, j);
                    }
                    if sum != 0.0 {
                        out.accumulate(key, f * g * weight * sum);
                    }
                }
            }
        }
        out
    }

    /// `f * g - g * f`.
    pub fn star_commutator(&self, other: &Self) -> Result<Self, RingError> {
        self.star_product(other)?
            .try_sub(&other.star_product(self)?)
    }

    /// Neumann series for `f^{-1}` with star products truncated at the degree
    /// cap. Exact when `f` is constant, approximate otherwise.
    pub fn inverse_truncated(&self) -> Result<Self, RingError> {
        let c0 = self.coeff(0, 0);
        if c0.norm() == 0.0 || !c0.norm().is_finite() {
            return Err(RingError::near_singular(0.0));
        }
        let inv_c0 = c0.inv();
        // f = c0 (1 + u); f^{-1} = sum_k (-u)^k c0^{-1}
        let mut minus_u = self.scale(-inv_c0);
        minus_u.coeffs.remove(&(0, 0));
        let mut term = self.one_like();
        let mut sum = term.clone();
        for _ in 0..self.cap {
            term = term.star_truncated(&minus_u);
            if term.is_zero() {
                break;
            }
            sum = sum.try_add(&term)?;
        }
        Ok(sum.scale(inv_c0))
    }
}

impl NcRing for MoyalPolynomial {
    fn dim(&self) -> usize {
        1
    }

    fn check_compatible(&self, other: &Self) -> Result<(), RingError> {
        self.check_shared(other)
    }

    fn zero_like(&self) -> Self {
        Self::zero_with_cap(self.theta, self.cap)
    }

    fn one_like(&self) -> Self {
        self.zero_like().with_term(0, 0, Complex64::new(1.0, 0.0))
    }

    fn try_add(&self, other: &Self) -> Result<Self, RingError> {
        self.check_shared(other)?;
        let mut out = self.clone();
        for (&k, &c) in &other.coeffs {
            out.accumulate(k, c);
        }
        Ok(out)
    }

    fn try_sub(&self, other: &Self) -> Result<Self, RingError> {
        self.check_shared(other)?;
        let mut out = self.clone();
        for (&k, &c) in &other.coeffs {
            out.accumulate(k, -c);
        }
        Ok(out)
    }

    fn try_mul(&self, other: &Self) -> Result<Self, RingError> {
        self.star_product(other)
    }

    fn scale(&self, c: Complex64) -> Self {
        let mut out = self.zero_like();
        for (&k, &v) in &self.coeffs {
            out.accumulate(k, v * c);
        }
        out
    }

    fn inverse(&self) -> Result<Self, RingError> {
        self.inverse_truncated()
    }

    fn exact_inverse(&self) -> bool {
        self.degree().unwrap_or(0) == 0
    }

    /// Euclidean norm of the coefficient vector.
    fn norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const I: Complex64 = Complex64::new(0.0, 1.0);

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn max_diff(a: &MoyalPolynomial, b: &MoyalPolynomial) -> f64 {
        a.try_sub(b).unwrap().max_abs_coeff()
    }

    /// Left multiplication by a coordinate as a differential operator:
    /// `x1 * g = x1 g + (i theta/2) d2 g`, `x2 * g = x2 g - (i theta/2) d1 g`.
    /// Independent of the bidifferential sum used by `star_product`.
    fn left_coordinate(axis: u8, g: &MoyalPolynomial) -> MoyalPolynomial {
        let half = I * (g.theta() / 2.0);
        let mut out = MoyalPolynomial::zero(g.theta());
        for ((m, n), c) in g.terms() {
            if axis == 1 {
                out = out.with_term(m + 1, n, c);
                if n > 0 {
                    out = out.with_term(m, n - 1, c * half * f64::from(n));
                }
            } else {
                out = out.with_term(m, n + 1, c);
                if m > 0 {
                    out = out.with_term(m - 1, n, -c * half * f64::from(m));
                }
            }
        }
        out
    }

    #[test]
    fn coordinate_commutator_is_i_theta() {
        let theta = 0.37;
        let comm = MoyalPolynomial::x1(theta)
            .star_commutator(&MoyalPolynomial::x2(theta))
            .unwrap();
        assert_eq!(comm, MoyalPolynomial::constant(theta, I * theta));
    }

    #[test]
    fn zero_theta_is_pointwise() {
        let f = MoyalPolynomial::zero(0.0)
            .with_term(2, 1, re(1.5))
            .with_term(0, 3, Complex64::new(-0.5, 2.0))
            .with_term(1, 0, re(4.0));
        let g = MoyalPolynomial::zero(0.0)
            .with_term(1, 2, re(-2.0))
            .with_term(0, 0, re(3.0))
            .with_term(3, 0, Complex64::new(0.0, 1.0));
        assert_eq!(f.star_product(&g).unwrap(), f.pointwise_product(&g).unwrap());
    }

    #[test]
    fn x1_squared_star_x2() {
        let theta = 0.8;
        let x1sq = MoyalPolynomial::monomial(theta, 2, 0, re(1.0));
        let expected = MoyalPolynomial::monomial(theta, 2, 1, re(1.0)).with_term(1, 0, I * theta);
        assert_eq!(x1sq.star_product(&MoyalPolynomial::x2(theta)).unwrap(), expected);
    }

    #[test]
    fn commutator_of_squares_matches_operator_oracle() {
        let theta = 0.6;
        let x1 = MoyalPolynomial::x1(theta);
        let x2 = MoyalPolynomial::x2(theta);
        let x1sq = MoyalPolynomial::monomial(theta, 2, 0, re(1.0));
        let x2sq = MoyalPolynomial::monomial(theta, 0, 2, re(1.0));
        // x1^2 = x1*x1 and x2^2 = x2*x2, so both orders can be built from
        // repeated left multiplication.
        assert_eq!(x1.star_product(&x1).unwrap(), x1sq);
        let lhs = left_coordinate(1, &left_coordinate(1, &x2sq));
        let rhs = left_coordinate(2, &left_coordinate(2, &x1sq));
        let oracle = lhs.try_sub(&rhs).unwrap();
        // x1^2 x2^2 + 2i theta x1 x2 - theta^2/2, minus the mirrored product.
        assert!((oracle.coeff(1, 1) - I * (4.0 * theta)).norm() < 1e-15);
        assert_eq!(oracle.terms().count(), 1);

        let comm = x1sq.star_commutator(&x2sq).unwrap();
        assert!(max_diff(&comm, &oracle) < 1e-15);
        assert!(x1sq.star_commutator(&x2).is_ok());
    }

    #[test]
    fn self_commutator_vanishes() {
        let f = MoyalPolynomial::zero(1.3)
            .with_term(3, 1, re(2.0))
            .with_term(0, 2, Complex64::new(1.0, -1.0));
        assert!(f.star_commutator(&f).unwrap().max_abs_coeff() < 1e-14);
    }

    #[test]
    fn overflow_and_mismatch_are_errors() {
        let big = MoyalPolynomial::monomial(0.5, 9, 0, re(1.0));
        assert_eq!(
            big.star_product(&big),
            Err(RingError::DegreeOverflow { degree: 18, cap: 16 })
        );
        let other = MoyalPolynomial::x1(0.25);
        assert!(matches!(
            MoyalPolynomial::x1(0.5).star_product(&other),
            Err(RingError::ThetaMismatch { .. })
        ));
        let small = MoyalPolynomial::zero_with_cap(0.5, 4).with_term(1, 0, re(1.0));
        assert!(matches!(
            small.try_add(&MoyalPolynomial::x1(0.5)),
            Err(RingError::CapMismatch { .. })
        ));
    }

    #[test]
    fn inverse_of_constant_is_exact() {
        let f = MoyalPolynomial::constant(0.4, Complex64::new(2.0, -1.0));
        let inv = f.inverse().unwrap();
        assert!(f.exact_inverse());
        assert!(max_diff(&f.star_product(&inv).unwrap(), &f.one_like()) < 1e-15);
    }

    #[test]
    fn inverse_series_is_approximate_and_flagged() {
        let theta = 0.4;
        let f = MoyalPolynomial::constant(theta, re(1.0)).with_term(1, 0, re(0.1));
        assert!(!f.exact_inverse());
        let inv = f.inverse().unwrap();
        let prod = f.star_product(&inv.with_theta(theta));
        // deg(inv) is the cap, so the untruncated product overflows; the
        // truncated residual only loses the degree-17 tail.
        assert!(prod.is_err());
        let residual = f.star_truncated(&inv).try_sub(&f.one_like()).unwrap();
        assert!(residual.max_abs_coeff() < 1e-15);
        assert!(MoyalPolynomial::x1(theta).inverse().is_err());
    }

    fn poly(theta: f64, max_deg: u32) -> impl Strategy<Value = MoyalPolynomial> {
        prop::collection::vec(
            ((0..=max_deg, 0..=max_deg), -1.0f64..1.0, -1.0f64..1.0),
            1..8,
        )
        .prop_map(move |terms| {
            terms.into_iter().fold(MoyalPolynomial::zero(theta), |p, ((m, n), a, b)| {
                let n = n.min(max_deg - m.min(max_deg));
                p.with_term(m.min(max_deg), n, Complex64::new(a, b))
            })
        })
    }

    proptest! {
        #[test]
        fn star_product_is_bilinear(f in poly(0.7, 4), g in poly(0.7, 4), h in poly(0.7, 4), s in -2.0f64..2.0) {
            let c = Complex64::new(s, 0.5);
            let lhs = f.scale(c).try_add(&g).unwrap().star_product(&h).unwrap();
            let rhs = f.star_product(&h).unwrap().scale(c).try_add(&g.star_product(&h).unwrap()).unwrap();
            prop_assert!(max_diff(&lhs, &rhs) <= 1e-12 * (1.0 + rhs.max_abs_coeff()));
            let lhs = h.star_product(&f.scale(c).try_add(&g).unwrap()).unwrap();
            let rhs = h.star_product(&f).unwrap().scale(c).try_add(&h.star_product(&g).unwrap()).unwrap();
            prop_assert!(max_diff(&lhs, &rhs) <= 1e-12 * (1.0 + rhs.max_abs_coeff()));
        }

        #[test]
        fn theta_to_zero_is_linear(f in poly(1.0, 4), g in poly(1.0, 4)) {
            let flat = f.with_theta(0.0).pointwise_product(&g.with_theta(0.0)).unwrap();
            let at = |t: f64| {
                f.with_theta(t).star_product(&g.with_theta(t)).unwrap().with_theta(0.0).try_sub(&flat).unwrap().max_abs_coeff()
            };
            let (e1, e2) = (at(1e-3), at(5e-4));
            // at least first order: halving theta at least halves the gap
            prop_assert!(e2 <= 0.51 * e1 + 1e-15);
            prop_assert!(at(0.0) == 0.0);
        }
    }
}
