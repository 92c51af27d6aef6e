//! Lax representations of noncommutative Painleve II.
//!
//! Two routes are covered:
//!
//! * the `2 x 2` isomonodromic pair `Psi_lambda = A Psi`, `Psi_z = B Psi`,
//!   whose compatibility `A_z - B_lambda = [B, A]` holds exactly when
//!   `v_zz = 2 v^3 - 2 [z, v]_+ + C`;
//! * the block-diagonal `6 x 6` pair `L_t = [P, L]` for the three-field system
//!   in `(v0, v1, v2)`, which reduces to the same equation for `v2` once its
//!   first integral is fixed.
//!
//! The independent variable `z` is a central scalar, stored as `z * one` so
//! the anticommutator `[z, v]_+` is evaluated literally.

use num_complex::Complex64;
use thiserror::Error;

use crate::block::{BlockError, BlockMatrix};
use crate::grid::{GridError, GridFunction, GridSpec, MaskedGrid};
use crate::ncring::{anticommutator, NcRing, RingError};
use crate::ode::rk4_step;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaxError {
    #[error("spectral parameter lambda must be non-zero")]
    ZeroSpectralParameter,
    #[error("{which} is not invertible: {source}")]
    NearSingular { which: &'static str, source: RingError },
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("reduction requires alpha0 + alpha1 = 2, got {0}")]
    Normalization(Complex64),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Field values at one point of the `z`-line plus the spectral data.
#[derive(Debug, Clone, PartialEq)]
pub struct PiiState<R> {
    pub v: R,
    pub v_z: R,
    pub v_zz: R,
    pub z: Complex64,
    pub lambda: Complex64,
    pub c: Complex64,
}

impl<R: NcRing> PiiState<R> {
    fn check(&self) -> Result<(), LaxError> {
        self.v.check_compatible(&self.v_z)?;
        self.v.check_compatible(&self.v_zz)?;
        if self.lambda == Complex64::new(0.0, 0.0) {
            return Err(LaxError::ZeroSpectralParameter);
        }
        Ok(())
    }

    fn z_one(&self) -> R {
        self.v.one_like().scale(self.z)
    }
}

/// The `lambda`-direction matrix `A(z; lambda)`.
pub fn build_a<R: NcRing>(s: &PiiState<R>) -> Result<BlockMatrix<R>, LaxError> {
    s.check()?;
    let one = s.v.one_like();
    let lam = s.lambda;
    let a11 = one
        .scale(8.0 * I * lam * lam)
        .try_add(&s.v.try_mul(&s.v)?.scale(I))?
        .try_sub(&s.z_one().scale(2.0 * I))?;
    let shift = one.scale(s.c / (4.0 * lam));
    let four_lambda_v = s.v.scale(4.0 * lam);
    let a12 = s.v_z.scale(-I).try_add(&shift)?.try_sub(&four_lambda_v)?;
    let a21 = s.v_z.scale(I).try_add(&shift)?.try_sub(&four_lambda_v)?;
    let a22 = a11.neg();
    Ok(BlockMatrix::new(2, 2, vec![a11, a12, a21, a22])?)
}

/// The `z`-direction matrix `B = [[-2 i lambda, v], [v, 2 i lambda]]`.
pub fn build_b<R: NcRing>(v: &R, lambda: Complex64) -> BlockMatrix<R> {
    let one = v.one_like();
    BlockMatrix::new(
        2,
        2,
        vec![one.scale(-2.0 * I * lambda), v.clone(), v.clone(), one.scale(2.0 * I * lambda)],
    )
    .expect("entries share the shape of v")
}

/// `dA/dz` by the chain rule through `v`, `v_z` and `z`.
pub fn a_z<R: NcRing>(s: &PiiState<R>) -> Result<BlockMatrix<R>, LaxError> {
    s.check()?;
    let one = s.v.one_like();
    let d_vsq = anticommutator(&s.v_z, &s.v)?;
    let d11 = d_vsq.scale(I).try_sub(&one.scale(2.0 * I))?;
    let four_lambda_vz = s.v_z.scale(4.0 * s.lambda);
    let d12 = s.v_zz.scale(-I).try_sub(&four_lambda_vz)?;
    let d21 = s.v_zz.scale(I).try_sub(&four_lambda_vz)?;
    let d22 = d11.neg();
    Ok(BlockMatrix::new(2, 2, vec![d11, d12, d21, d22])?)
}

/// `dB/dlambda = diag(-2i, 2i)`.
pub fn b_lambda<R: NcRing>(like: &R) -> BlockMatrix<R> {
    let one = like.one_like();
    let zero = like.zero_like();
    BlockMatrix::new(2, 2, vec![one.scale(-2.0 * I), zero.clone(), zero, one.scale(2.0 * I)])
        .expect("entries share a shape")
}

/// `A_z - B_lambda - (B A - A B)`.
///
/// Entries `(0,0)` and `(1,1)` vanish identically; `(0,1)` equals
/// `-i r` and `(1,0)` equals `+i r` with `r` the Painleve II residual.
pub fn zero_curvature_residual<R: NcRing>(s: &PiiState<R>) -> Result<BlockMatrix<R>, LaxError> {
    let a = build_a(s)?;
    let b = build_b(&s.v, s.lambda);
    let lhs = a_z(s)?.try_sub(&b_lambda(&s.v))?;
    Ok(lhs.try_sub(&b.commutator(&a)?)?)
}

/// Scale for relative comparisons of [`zero_curvature_residual`]:
/// `|A_z| + |B_lambda| + 2 |B| |A|`.
pub fn zero_curvature_scale<R: NcRing>(s: &PiiState<R>) -> Result<f64, LaxError> {
    let a = build_a(s)?;
    let b = build_b(&s.v, s.lambda);
    Ok(a_z(s)?.norm() + b_lambda(&s.v).norm() + 2.0 * a.norm() * b.norm())
}

/// `v_zz - 2 v^3 + 2 [z, v]_+ - C`.
pub fn pii_residual_exact<R: NcRing>(v: &R, v_zz: &R, z: Complex64, c: Complex64) -> Result<R, LaxError> {
    v.check_compatible(v_zz)?;
    let z_one = v.one_like().scale(z);
    let cube = v.try_pow(3)?;
    Ok(v_zz
        .try_sub(&cube.scale(re(2.0)))?
        .try_add(&anticommutator(&z_one, v)?.scale(re(2.0)))?
        .add_scalar(-c))
}

fn second_difference<R: NcRing>(prev: &R, mid: &R, next: &R, h: f64) -> Result<R, RingError> {
    Ok(prev
        .try_sub(&mid.scale(re(2.0)))?
        .try_add(next)?
        .scale(re(1.0 / (h * h))))
}

/// Painleve II residual with `v_zz` from the central three-point stencil,
/// on the interior points `z_1 .. z_{n-2}`.
pub fn pii_residual_grid<R: NcRing>(f: &GridFunction<R>, c: Complex64) -> Result<GridFunction<R>, LaxError> {
    let n = f.len();
    let h = f.h();
    let vals = f.values();
    let out = (1..n - 1)
        .map(|k| {
            let v_zz = second_difference(&vals[k - 1], &vals[k], &vals[k + 1], h)?;
            pii_residual_exact(&vals[k], &v_zz, re(f.z(k)), c)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GridFunction::new(f.z(1), h, out)?)
}

/// As [`pii_residual_grid`], skipping stencils that touch a masked sample.
pub fn pii_residual_masked<R: NcRing>(f: &MaskedGrid<R>, c: Complex64) -> Result<MaskedGrid<R>, LaxError> {
    let spec = f.spec();
    let vals = f.values();
    let mut out = Vec::with_capacity(spec.len - 2);
    for k in 1..spec.len - 1 {
        out.push(match (&vals[k - 1], &vals[k], &vals[k + 1]) {
            (Some(a), Some(b), Some(c2)) => {
                let v_zz = second_difference(a, b, c2, spec.h)?;
                Some(pii_residual_exact(b, &v_zz, re(spec.z(k)), c)?)
            }
            _ => None,
        });
    }
    let interior = GridSpec::new(spec.z(1), spec.h, spec.len - 2)?;
    Ok(MaskedGrid::new(interior, out)?)
}

/// State of the three-field system at flow time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymState<R> {
    pub v0: R,
    pub v1: R,
    pub v2: R,
    pub alpha0: Complex64,
    pub alpha1: Complex64,
    pub t: f64,
}

impl<R: NcRing> SymState<R> {
    fn check(&self) -> Result<(), LaxError> {
        self.v0.check_compatible(&self.v1)?;
        self.v0.check_compatible(&self.v2)?;
        Ok(())
    }

    /// Replaces `v1` so that the first integral equals `constant * one`.
    pub fn normalized(&self, constant: Complex64) -> Result<Self, LaxError> {
        self.check()?;
        let v1 = self
            .v0
            .neg()
            .try_sub(&self.v2.try_mul(&self.v2)?)?
            .add_scalar(constant + (self.alpha0 + self.alpha1) * self.t);
        Ok(SymState { v1, ..self.clone() })
    }
}

fn diag_block<R: NcRing>(blocks: [[R; 4]; 3]) -> BlockMatrix<R> {
    let zero = blocks[0][0].zero_like();
    let mut m = BlockMatrix::zeros(6, 6, &zero);
    for (b, block) in blocks.into_iter().enumerate() {
        for (idx, entry) in block.into_iter().enumerate() {
            m.set(2 * b + idx / 2, 2 * b + idx % 2, entry);
        }
    }
    m
}

/// `L = diag(L1, L2, L3)` with `L1 = [[1, 0], [-v0, -1]]`,
/// `L2 = [[1, 0], [-v1, -1]]`, `L3 = [[-1, 0], [-v2, 1]]`.
pub fn build_l<R: NcRing>(s: &SymState<R>) -> Result<BlockMatrix<R>, LaxError> {
    s.check()?;
    let one = s.v0.one_like();
    let zero = s.v0.zero_like();
    Ok(diag_block([
        [one.clone(), zero.clone(), s.v0.neg(), one.neg()],
        [one.clone(), zero.clone(), s.v1.neg(), one.neg()],
        [one.neg(), zero, s.v2.neg(), one],
    ]))
}

/// `(rho1, rho2, sigma)` with `rho1 = -v2 - alpha0 v0^{-1} / 2`,
/// `rho2 = -v2 + alpha1 v1^{-1} / 2`, `sigma = v0 - v1 + 2 v2`.
pub fn p_coefficients<R: NcRing>(s: &SymState<R>) -> Result<(R, R, R), LaxError> {
    s.check()?;
    let v0_inv = s
        .v0
        .inverse()
        .map_err(|source| LaxError::NearSingular { which: "v0", source })?;
    let v1_inv = s
        .v1
        .inverse()
        .map_err(|source| LaxError::NearSingular { which: "v1", source })?;
    let rho1 = s.v2.neg().try_sub(&v0_inv.scale(0.5 * s.alpha0))?;
    let rho2 = s.v2.neg().try_add(&v1_inv.scale(0.5 * s.alpha1))?;
    let sigma = s.v0.try_sub(&s.v1)?.try_add(&s.v2.scale(re(2.0)))?;
    Ok((rho1, rho2, sigma))
}

/// `P = diag(P1, P2, P3)` with `P1 = diag(rho1, -rho1)`,
/// `P2 = diag(-rho2, rho2)` and `P3 = [[-1, 0], [-sigma/2, 1]]`.
///
/// The lower-left entry of `P3` must be `-sigma/2` for the third block of
/// `L_t = [P, L]` to give `v2' = v1 - v0`; `+sigma/2` yields
/// `v2' = v0 - v1 + 4 v2` instead.
pub fn build_p<R: NcRing>(s: &SymState<R>) -> Result<BlockMatrix<R>, LaxError> {
    let (rho1, rho2, sigma) = p_coefficients(s)?;
    let one = s.v0.one_like();
    let zero = s.v0.zero_like();
    Ok(diag_block([
        [rho1.clone(), zero.clone(), zero.clone(), rho1.neg()],
        [rho2.neg(), zero.clone(), zero.clone(), rho2],
        [one.neg(), zero, sigma.scale(re(-0.5)), one],
    ]))
}

/// `(v0', v1', v2') = (v2 v0 + v0 v2 + alpha0, -v2 v1 - v1 v2 + alpha1, v1 - v0)`.
pub fn symmetric_rhs<R: NcRing>(s: &SymState<R>) -> Result<[R; 3], LaxError> {
    s.check()?;
    let d0 = anticommutator(&s.v2, &s.v0)?.add_scalar(s.alpha0);
    let d1 = anticommutator(&s.v2, &s.v1)?.neg().add_scalar(s.alpha1);
    let d2 = s.v1.try_sub(&s.v0)?;
    Ok([d0, d1, d2])
}

/// `L_t - [P, L]` where `L_t` carries `-rates[k]` in the lower-left slot of
/// block `k`.
pub fn lax_residual_with_rates<R: NcRing>(s: &SymState<R>, rates: &[R; 3]) -> Result<BlockMatrix<R>, LaxError> {
    let l = build_l(s)?;
    let p = build_p(s)?;
    let mut l_t = BlockMatrix::zeros(6, 6, &s.v0);
    for (b, rate) in rates.iter().enumerate() {
        s.v0.check_compatible(rate)?;
        l_t.set(2 * b + 1, 2 * b, rate.neg());
    }
    Ok(l_t.try_sub(&p.commutator(&l)?)?)
}

/// [`lax_residual_with_rates`] with the rates from [`symmetric_rhs`];
/// vanishes identically.
pub fn lax_residual_symmetric<R: NcRing>(s: &SymState<R>) -> Result<BlockMatrix<R>, LaxError> {
    let rates = symmetric_rhs(s)?;
    lax_residual_with_rates(s, &rates)
}

/// `v0 + v1 + v2^2 - (alpha0 + alpha1) t`, conserved by the flow.
pub fn first_integral<R: NcRing>(s: &SymState<R>) -> Result<R, LaxError> {
    s.check()?;
    Ok(s.v0
        .try_add(&s.v1)?
        .try_add(&s.v2.try_mul(&s.v2)?)?
        .add_scalar(-(s.alpha0 + s.alpha1) * s.t))
}

/// Why a flow stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum TruncationReason {
    /// The inverse itself failed.
    Singular(RingError),
    /// `v` is within one step of a singular element:
    /// `h |v'| |v^{-1}| > 1`, with `|v^{-1}|` bounding `1 / sigma_min`.
    WithinStep { inverse_norm: f64, step_change: f64 },
}

/// Where and why a flow stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub t: f64,
    pub step: usize,
    pub which: &'static str,
    pub reason: TruncationReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<R> {
    pub h: f64,
    pub states: Vec<SymState<R>>,
    pub truncation: Option<Truncation>,
}

impl<R: NcRing> Trajectory<R> {
    pub fn last(&self) -> &SymState<R> {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Largest distance of the first integral from its initial value.
    pub fn first_integral_drift(&self) -> Result<f64, LaxError> {
        let start = first_integral(&self.states[0])?;
        self.states.iter().try_fold(0.0f64, |acc, s| {
            Ok(acc.max(crate::ncring::distance(&first_integral(s)?, &start)))
        })
    }

    /// `v2` sampled along the flow, with `z = t`.
    pub fn v2_grid(&self) -> Result<GridFunction<R>, LaxError> {
        let values = self.states.iter().map(|s| s.v2.clone()).collect();
        Ok(GridFunction::new(self.states[0].t, self.h, values)?)
    }
}

fn monitor<R: NcRing>(s: &SymState<R>, step: usize, h: f64) -> Result<Option<Truncation>, LaxError> {
    let rates = symmetric_rhs(s)?;
    for (which, v, rate) in [("v0", &s.v0, &rates[0]), ("v1", &s.v1, &rates[1])] {
        let reason = match v.inverse() {
            Err(source) => Some(TruncationReason::Singular(source)),
            Ok(inv) => {
                let (inverse_norm, step_change) = (inv.norm(), h * rate.norm());
                (inverse_norm * step_change > 1.0)
                    .then_some(TruncationReason::WithinStep { inverse_norm, step_change })
            }
        };
        if let Some(reason) = reason {
            return Ok(Some(Truncation { t: s.t, step, which, reason }));
        }
    }
    Ok(None)
}

/// Fixed-step RK4 integration of [`symmetric_rhs`] from `s0.t` to `t_end`.
///
/// The step count is `round((t_end - t0) / h)`. The flow stops early (and
/// records a [`Truncation`]) as soon as `v0` or `v1` is singular or within
/// one step of singular, since `P` needs both inverses.
pub fn integrate_symmetric<R: NcRing>(s0: &SymState<R>, t_end: f64, h: f64) -> Result<Trajectory<R>, LaxError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(LaxError::BadStep(h));
    }
    s0.check()?;
    let steps = ((t_end - s0.t) / h).round().max(0.0) as usize;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(s0.clone());
    if let Some(truncation) = monitor(s0, 0, h)? {
        return Ok(Trajectory { h, states, truncation: Some(truncation) });
    }
    let (alpha0, alpha1) = (s0.alpha0, s0.alpha1);
    let rhs = |t: f64, y: &[R; 3]| -> Result<[R; 3], LaxError> {
        symmetric_rhs(&SymState {
            v0: y[0].clone(),
            v1: y[1].clone(),
            v2: y[2].clone(),
            alpha0,
            alpha1,
            t,
        })
    };
    let mut y = [s0.v0.clone(), s0.v1.clone(), s0.v2.clone()];
    for k in 0..steps {
        let t = s0.t + k as f64 * h;
        y = rk4_step(t, &y, h, &rhs)?;
        let [v0, v1, v2] = y.clone();
        let state = SymState { v0, v1, v2, alpha0, alpha1, t: s0.t + (k + 1) as f64 * h };
        let truncation = monitor(&state, k + 1, h)?;
        states.push(state);
        if truncation.is_some() {
            return Ok(Trajectory { h, states, truncation });
        }
    }
    Ok(Trajectory { h, states, truncation: None })
}

/// Painleve II residual of the `v2` component with `z = t` and
/// `C = alpha1 - alpha0`. Requires `alpha0 + alpha1 = 2`; the first integral
/// is not enforced, so un-normalized data yields a visibly non-zero residual.
pub fn reduction_check<R: NcRing>(traj: &Trajectory<R>) -> Result<GridFunction<R>, LaxError> {
    let s = &traj.states[0];
    let sum = s.alpha0 + s.alpha1;
    if (sum - re(2.0)).norm() > 1e-12 {
        return Err(LaxError::Normalization(sum));
    }
    pii_residual_grid(&traj.v2_grid()?, s.alpha1 - s.alpha0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncring::{distance, CMat};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(a: f64, b: f64) -> Complex64 {
        Complex64::new(a, b)
    }

    fn scalar_state(v: f64, v_z: f64, v_zz: f64, z: f64, lambda: Complex64, cc: f64) -> PiiState<Complex64> {
        PiiState { v: re(v), v_z: re(v_z), v_zz: re(v_zz), z: re(z), lambda, c: re(cc) }
    }

    #[test]
    fn a_for_zero_field_is_diagonal() {
        let lam = c(0.5, 0.25);
        let z = 0.7;
        let s = PiiState {
            v: CMat::zeros(2),
            v_z: CMat::zeros(2),
            v_zz: CMat::zeros(2),
            z: re(z),
            lambda: lam,
            c: re(0.0),
        };
        let a = build_a(&s).unwrap();
        let d = 8.0 * I * lam * lam - 2.0 * I * z;
        assert!(distance(a.get(0, 0), &CMat::scalar(2, d)) < 1e-15);
        assert!(distance(a.get(1, 1), &CMat::scalar(2, -d)) < 1e-15);
        assert_eq!(a.get(0, 1).norm(), 0.0);
        assert_eq!(a.get(1, 0).norm(), 0.0);
        assert_eq!(a.get(0, 0).try_add(a.get(1, 1)).unwrap().norm(), 0.0);
    }

    #[test]
    fn a_with_scalar_substitution() {
        let a = build_a(&scalar_state(1.0, 0.0, 0.0, 0.0, re(1.0), 4.0)).unwrap();
        let want = [c(0.0, 9.0), c(-3.0, 0.0), c(-3.0, 0.0), c(0.0, -9.0)];
        for (got, want) in a.entries().iter().zip(want) {
            assert!((got - want).norm() < 1e-15);
        }
        // nonzero v_z separates the off-diagonal entries by 2 i v_z
        let a = build_a(&scalar_state(1.0, 1.0, 0.0, 0.0, re(1.0), 4.0)).unwrap();
        assert!((a.get(0, 1) - c(-3.0, -1.0)).norm() < 1e-15);
        assert!((a.get(1, 0) - c(-3.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_lambda_rejected() {
        let s = scalar_state(1.0, 0.0, 0.0, 0.0, re(0.0), 4.0);
        assert_eq!(build_a(&s), Err(LaxError::ZeroSpectralParameter));
        assert_eq!(zero_curvature_residual(&s), Err(LaxError::ZeroSpectralParameter));
    }

    #[test]
    fn b_examples() {
        let b = build_b(&CMat::zeros(2), c(0.3, 0.0));
        assert!(distance(b.get(0, 0), &CMat::scalar(2, c(0.0, -0.6))) < 1e-15);
        assert!(distance(b.get(1, 1), &CMat::scalar(2, c(0.0, 0.6))) < 1e-15);
        let v = CMat::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = build_b(&v, c(1.0, 0.0));
        assert_eq!(b.transpose_blocks(), b);
        let b = build_b(&re(1.0), I);
        let want = [re(2.0), re(1.0), re(1.0), re(-2.0)];
        assert_eq!(b.entries(), &want);
    }

    #[test]
    fn zero_curvature_structure_on_random_placeholders() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for d in 1..=4 {
            let s = PiiState {
                v: CMat::random(d, &mut rng),
                v_z: CMat::random(d, &mut rng),
                v_zz: CMat::random(d, &mut rng),
                z: c(0.3, -0.2),
                lambda: c(2.0, -3.0),
                c: c(1.1, 0.4),
            };
            let res = zero_curvature_residual(&s).unwrap();
            let scale = zero_curvature_scale(&s).unwrap();
            let r = pii_residual_exact(&s.v, &s.v_zz, s.z, s.c).unwrap();
            assert!(res.get(0, 0).norm() <= 1e-12 * scale);
            assert!(res.get(1, 1).norm() <= 1e-12 * scale);
            assert!(distance(res.get(0, 1), &r.scale(-I)) <= 1e-12 * scale);
            assert!(distance(res.get(1, 0), &r.scale(I)) <= 1e-12 * scale);
        }
    }

    #[test]
    fn rational_seed_is_exact() {
        for (a, cc) in [(1.0, 4.0), (-1.0, -4.0)] {
            for z in [0.5, 1.0, 1.7, -2.3] {
                let v = CMat::scalar(2, re(a / z));
                let v_z = CMat::scalar(2, re(-a / (z * z)));
                let v_zz = CMat::scalar(2, re(2.0 * a / (z * z * z)));
                let r = pii_residual_exact(&v, &v_zz, re(z), re(cc)).unwrap();
                assert!(r.norm() < 1e-14, "a={a} z={z}: {}", r.norm());
                for lambda in [re(1.0), I, c(2.0, -3.0)] {
                    let s = PiiState { v: v.clone(), v_z: v_z.clone(), v_zz: v_zz.clone(), z: re(z), lambda, c: re(cc) };
                    assert!(zero_curvature_residual(&s).unwrap().norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_field_solves_homogeneous_equation() {
        let r = pii_residual_exact(&CMat::zeros(3), &CMat::zeros(3), re(1.4), re(0.0)).unwrap();
        assert_eq!(r.norm(), 0.0);
    }

    #[test]
    fn grid_residual_of_rational_seed() {
        let spec = GridSpec::spanning(1.0, 2.0, 1e-3).unwrap();
        let f = GridFunction::sample(spec, |z| CMat::scalar(2, re(1.0 / z)));
        let res = pii_residual_grid(&f, re(4.0)).unwrap();
        assert_eq!(res.len(), spec.len - 2);
        assert!((res.z0() - 1.001).abs() < 1e-12);
        let sup = res.sup_norm();
        assert!(sup <= 1e-5, "sup {sup}");
        // stencil error h^2 v''''/12 = 2e-6 at z = 1 (times sqrt(2) for d = 2)
        assert!(sup > 1e-6);
    }

    #[test]
    fn grid_residual_needs_five_points() {
        let short = GridFunction::new(1.0, 0.1, vec![re(1.0); 5]).unwrap();
        assert!(pii_residual_grid(&short, re(0.0)).is_err());
        let ok = GridFunction::new(1.0, 0.1, vec![re(1.0); 7]).unwrap();
        assert_eq!(pii_residual_grid(&ok, re(0.0)).unwrap().len(), 5);
    }

    fn ones_state(a0: f64, a1: f64) -> SymState<CMat> {
        let one = CMat::identity(2);
        SymState { v0: one.clone(), v1: one.clone(), v2: one, alpha0: re(a0), alpha1: re(a1), t: 0.0 }
    }

    #[test]
    fn p_coefficients_for_unit_fields() {
        let (rho1, rho2, sigma) = p_coefficients(&ones_state(0.0, 0.0)).unwrap();
        let one = CMat::identity(2);
        assert_eq!(rho1, one.neg());
        assert_eq!(rho2, one.neg());
        assert_eq!(sigma, one.scale(re(2.0)));
    }

    #[test]
    fn lax_matrices_are_block_diagonal() {
        let s = ones_state(0.3, -0.7);
        let (l, p) = (build_l(&s).unwrap(), build_p(&s).unwrap());
        for i in 0..6 {
            for j in 0..6 {
                if i / 2 != j / 2 {
                    assert_eq!(l.get(i, j).norm(), 0.0);
                    assert_eq!(p.get(i, j).norm(), 0.0);
                }
            }
        }
        let l1 = l.slice(0, 2, 0, 2);
        let id = BlockMatrix::identity(2, &CMat::identity(2));
        assert_eq!(l1.try_mul(&l1).unwrap(), id);
    }

    #[test]
    fn singular_v0_is_reported() {
        let mut s = ones_state(1.0, 1.0);
        s.v0 = CMat::zeros(2);
        assert!(matches!(build_p(&s), Err(LaxError::NearSingular { which: "v0", .. })));
    }

    #[test]
    fn rhs_examples() {
        let s = SymState { v0: re(1.0), v1: re(2.0), v2: re(3.0), alpha0: re(0.0), alpha1: re(0.0), t: 0.0 };
        assert_eq!(symmetric_rhs(&s).unwrap(), [re(6.0), re(-12.0), re(1.0)]);
        let fixed = SymState { v0: re(1.5), v1: re(1.5), v2: re(0.0), alpha0: re(0.0), alpha1: re(0.0), t: 0.0 };
        assert_eq!(symmetric_rhs(&fixed).unwrap(), [re(0.0); 3]);
    }

    #[test]
    fn scalar_lax_residual_vanishes() {
        let s = SymState { v0: re(1.0), v1: re(2.0), v2: re(3.0), alpha0: re(1.0), alpha1: re(1.0), t: 0.0 };
        assert_eq!(lax_residual_symmetric(&s).unwrap().norm(), 0.0);
    }

    #[test]
    fn fixed_point_has_zero_lax_sides() {
        let v = CMat::from_real_rows(&[&[2.0, 1.0], &[0.5, 3.0]]);
        let s = SymState { v0: v.clone(), v1: v, v2: CMat::zeros(2), alpha0: re(0.0), alpha1: re(0.0), t: 0.0 };
        let p = build_p(&s).unwrap();
        let l = build_l(&s).unwrap();
        assert!(p.commutator(&l).unwrap().norm() < 1e-14);
        assert!(symmetric_rhs(&s).unwrap().iter().all(|r| r.norm() == 0.0));
    }

    #[test]
    fn lax_residual_is_linear_in_rate_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let one = CMat::identity(2);
        let s = SymState {
            v0: &one + &CMat::random(2, &mut rng).scale(re(0.3)),
            v1: &one + &CMat::random(2, &mut rng).scale(re(0.3)),
            v2: CMat::random(2, &mut rng),
            alpha0: c(0.4, 0.1),
            alpha1: c(-1.2, 0.3),
            t: 0.0,
        };
        let mut rates = symmetric_rhs(&s).unwrap();
        let eps = 1e-3;
        rates[0] = rates[0].add_scalar(re(eps));
        let res = lax_residual_with_rates(&s, &rates).unwrap();
        assert!((res.norm() - eps * one.norm()).abs() < 1e-12);
    }

    #[test]
    fn first_integral_is_stationary_along_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = SymState {
            v0: CMat::random(3, &mut rng),
            v1: CMat::random(3, &mut rng),
            v2: CMat::random(3, &mut rng),
            alpha0: c(0.3, 0.2),
            alpha1: c(1.1, -0.5),
            t: 0.25,
        };
        let [d0, d1, d2] = symmetric_rhs(&s).unwrap();
        let deriv = &(&d0 + &d1) + &anticommutator(&s.v2, &d2).unwrap();
        assert!(distance(&deriv, &CMat::scalar(3, s.alpha0 + s.alpha1)) < 1e-14);
    }

    #[test]
    fn fixed_point_trajectory_is_constant() {
        let s = SymState { v0: re(1.5), v1: re(1.5), v2: re(0.0), alpha0: re(0.0), alpha1: re(0.0), t: 0.0 };
        let traj = integrate_symmetric(&s, 1.0, 0.01).unwrap();
        assert_eq!(traj.states.len(), 101);
        assert!(traj.truncation.is_none());
        assert!(traj.states.iter().all(|x| x.v0 == s.v0 && x.v1 == s.v1 && x.v2 == s.v2));
        assert_eq!(traj.first_integral_drift().unwrap(), 0.0);
    }

    #[test]
    fn first_integral_conserved_for_unit_data() {
        let s = SymState { v0: re(1.0), v1: re(1.0), v2: re(1.0), alpha0: re(1.0), alpha1: re(1.0), t: 0.0 };
        let traj = integrate_symmetric(&s, 1.0, 1e-3).unwrap();
        assert!(traj.truncation.is_none());
        assert!(traj.first_integral_drift().unwrap() <= 1e-8);
    }

    #[test]
    fn integrator_is_fourth_order() {
        let s = SymState { v0: re(1.0), v1: re(1.0), v2: re(1.0), alpha0: re(1.0), alpha1: re(1.0), t: 0.0 };
        let end = |h: f64| integrate_symmetric(&s, 1.0, h).unwrap().last().v2;
        let reference = end(1e-4);
        let e1 = (end(0.02) - reference).norm();
        let e2 = (end(0.01) - reference).norm();
        let ratio = e1 / e2;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn flow_truncates_when_v1_crosses_zero() {
        let s = SymState { v0: re(0.5), v1: re(0.0), v2: re(0.2), alpha0: re(1.0), alpha1: re(1.0), t: 0.0 }
            .normalized(re(0.0))
            .unwrap();
        let traj = integrate_symmetric(&s, 1.0, 1e-3).unwrap();
        let trunc = traj.truncation.as_ref().expect("flow should stop");
        assert_eq!(trunc.which, "v1");
        assert!(matches!(trunc.reason, TruncationReason::WithinStep { .. }));
        assert!((0.4..0.7).contains(&trunc.t), "t = {}", trunc.t);
        assert_eq!(traj.states.len(), trunc.step + 1);

        let dead = SymState { v0: re(0.0), ..s };
        let traj = integrate_symmetric(&dead, 1.0, 1e-3).unwrap();
        let trunc = traj.truncation.unwrap();
        assert_eq!((trunc.step, trunc.which), (0, "v0"));
        assert!(matches!(trunc.reason, TruncationReason::Singular(_)));
    }

    #[test]
    fn reduction_residual_for_normalized_scalar_data() {
        // C = alpha1 - alpha0 = -1: the residual is stencil error, so it
        // shrinks fourfold when h halves.
        let s = SymState { v0: re(1.0), v1: re(0.0), v2: re(0.5), alpha0: re(1.5), alpha1: re(0.5), t: 0.0 }
            .normalized(re(0.0))
            .unwrap();
        let sup = |h: f64| reduction_check(&integrate_symmetric(&s, 1.0, h).unwrap()).unwrap().sup_norm();
        let ratio = sup(2e-3) / sup(1e-3);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");

        let s = SymState { v0: re(1.0), v1: re(0.0), v2: re(0.5), alpha0: re(1.0), alpha1: re(1.0), t: 0.0 }
            .normalized(re(0.0))
            .unwrap();

        let off = SymState { v1: s.v1 + 0.5, ..s.clone() };
        let traj = integrate_symmetric(&off, 1.0, 1e-3).unwrap();
        assert!(reduction_check(&traj).unwrap().sup_norm() > 1e-2);

        let bad = SymState { alpha0: re(0.0), alpha1: re(0.0), ..s };
        let traj = integrate_symmetric(&bad, 0.1, 1e-2).unwrap();
        assert!(matches!(reduction_check(&traj), Err(LaxError::Normalization(_))));
    }
}
