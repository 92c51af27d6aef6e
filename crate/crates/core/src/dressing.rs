//! Darboux dressing of noncommutative Painleve II solutions.
//!
//! The `z`-part of the linear problem is
//!
//! ```text
//! chi_z = -k i lambda chi + v Phi,    Phi_z = v chi + k i lambda Phi
//! ```
//!
//! with `k = 2` (the `B` matrix of the Lax pair, the default) or `k = 1`
//! ([`LinearConvention::D7`]). A spectral point `(gamma, chi, Phi)` is a
//! solution of this system taken at `lambda = gamma`.
//!
//! One Darboux step by the point `(gamma_1, chi_1, Phi_1)` maps
//!
//! ```text
//! v      -> Phi_1 chi_1^{-1} v Phi_1 chi_1^{-1}
//! chi    -> gamma Phi - gamma_1 Phi_1 chi_1^{-1} chi
//! Phi    -> gamma chi - gamma_1 chi_1 Phi_1^{-1} Phi
//! ```
//!
//! and `N` steps collapse into quasideterminants of alternating
//! `chi`/`Phi` rows weighted by powers of `gamma` (see
//! [`quasidet_matrix_at`]).

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::block::BlockMatrix;
use crate::grid::{GridError, GridFunction, GridSpec, MaskedGrid};
use crate::ncring::{mul3, NcRing, RingError};
use crate::ode::rk4_step;
use crate::quasidet::{quasideterminant, QuasidetError};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest grid step accepted by [`integrate_linear`].
pub const MAX_LINEAR_STEP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DressingError {
    #[error("grid step {0} exceeds the maximum {MAX_LINEAR_STEP}")]
    StepTooLarge(f64),
    #[error("initial data (chi, Phi) must not both vanish")]
    ZeroInitialData,
    #[error("spectral parameters must be pairwise distinct; {0} repeats")]
    DuplicateGamma(Complex64),
    #[error("need {needed} spectral points, the chain has {available}")]
    NotEnoughPoints { needed: usize, available: usize },
    #[error("{stage} is near-singular at grid point {index} (z = {z}): {source}")]
    SingularAt {
        stage: &'static str,
        index: usize,
        z: f64,
        source: RingError,
    },
    #[error("quasideterminant failed at grid point {index} (z = {z}): {source}")]
    QuasidetAt {
        index: usize,
        z: f64,
        source: QuasidetError,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Something that yields the potential `v(z)` at arbitrary `z`.
pub trait Potential<R>: Sync {
    fn eval(&self, z: f64) -> R;
}

/// Grid-sampled potentials are interpolated between nodes.
impl<R: NcRing> Potential<R> for GridFunction<R> {
    fn eval(&self, z: f64) -> R {
        self.interpolate(z)
    }
}

/// A potential given by a closure.
pub struct ClosedForm<F>(pub F);

impl<R, F: Fn(f64) -> R + Sync> Potential<R> for ClosedForm<F> {
    fn eval(&self, z: f64) -> R {
        (self.0)(z)
    }
}

/// `v(z) = a / z` times the identity, which solves the equation with
/// `C = 4 a` for `a = +1` or `a = -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSeed<R> {
    one: R,
    amplitude: f64,
}

impl<R: NcRing> RationalSeed<R> {
    pub fn new(like: &R, amplitude: f64) -> Self {
        RationalSeed {
            one: like.one_like(),
            amplitude,
        }
    }

    pub fn constant(&self) -> Complex64 {
        Complex64::new(4.0 * self.amplitude, 0.0)
    }

    pub fn value(&self, z: f64) -> R {
        self.one.scale((self.amplitude / z).into())
    }

    pub fn derivative(&self, z: f64) -> R {
        self.one.scale((-self.amplitude / (z * z)).into())
    }

    pub fn second_derivative(&self, z: f64) -> R {
        self.one.scale((2.0 * self.amplitude / (z * z * z)).into())
    }

    pub fn sample(&self, spec: GridSpec) -> GridFunction<R> {
        GridFunction::sample(spec, |z| self.value(z))
    }
}

impl<R: NcRing> Potential<R> for RationalSeed<R> {
    fn eval(&self, z: f64) -> R {
        self.value(z)
    }
}

/// Coefficient of `i lambda` in the linear problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearConvention {
    /// `chi_z = -2 i lambda chi + v Phi`, matching the `B` matrix.
    #[default]
    BMatrix,
    /// `chi_z = -i lambda chi + v Phi`.
    D7,
}

impl LinearConvention {
    pub fn factor(self) -> f64 {
        match self {
            LinearConvention::BMatrix => 2.0,
            LinearConvention::D7 => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LinearConvention::BMatrix => "b-matrix",
            LinearConvention::D7 => "d7",
        }
    }
}

/// RK4 integration of the linear problem over `spec`, from `init` at `spec.z0`.
pub fn integrate_linear<R: NcRing>(
    v: &impl Potential<R>,
    lambda: Complex64,
    init: (R, R),
    spec: GridSpec,
    convention: LinearConvention,
) -> Result<(GridFunction<R>, GridFunction<R>), DressingError> {
    if spec.h > MAX_LINEAR_STEP {
        return Err(DressingError::StepTooLarge(spec.h));
    }
    init.0.check_compatible(&init.1)?;
    if init.0.norm() == 0.0 && init.1.norm() == 0.0 {
        return Err(DressingError::ZeroInitialData);
    }
    let rate = I * lambda * convention.factor();
    let rhs = |z: f64, y: &[R; 2]| -> Result<[R; 2], RingError> {
        let vz = v.eval(z);
        Ok([
            y[0].scale(-rate).try_add(&vz.try_mul(&y[1])?)?,
            vz.try_mul(&y[0])?.try_add(&y[1].scale(rate))?,
        ])
    };
    let mut chi = Vec::with_capacity(spec.len);
    let mut phi = Vec::with_capacity(spec.len);
    let mut y = [init.0, init.1];
    for k in 0..spec.len {
        chi.push(y[0].clone());
        phi.push(y[1].clone());
        if k + 1 < spec.len {
            y = rk4_step(spec.z(k), &y, spec.h, &rhs)?;
        }
    }
    Ok((GridFunction::from_spec(spec, chi)?, GridFunction::from_spec(spec, phi)?))
}

/// Dressing parameter with its eigenfunction pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint<R> {
    pub gamma: Complex64,
    pub chi: GridFunction<R>,
    pub phi: GridFunction<R>,
}

impl<R: NcRing> SpectralPoint<R> {
    pub fn new(gamma: Complex64, chi: GridFunction<R>, phi: GridFunction<R>) -> Result<Self, DressingError> {
        chi.spec().same_as(&phi.spec())?;
        Ok(SpectralPoint { gamma, chi, phi })
    }

    /// Integrates the linear problem with `lambda = gamma`.
    pub fn integrate(
        seed: &impl Potential<R>,
        gamma: Complex64,
        init: (R, R),
        spec: GridSpec,
        convention: LinearConvention,
    ) -> Result<Self, DressingError> {
        let (chi, phi) = integrate_linear(seed, gamma, init, spec, convention)?;
        Ok(SpectralPoint { gamma, chi, phi })
    }

    pub fn spec(&self) -> GridSpec {
        self.chi.spec()
    }

    /// `(gamma, chi_k, Phi_k)` at grid index `k`.
    pub fn at(&self, k: usize) -> (Complex64, &R, &R) {
        (self.gamma, &self.chi.values()[k], &self.phi.values()[k])
    }
}

/// Seed solution plus the ordered spectral points `gamma_1 .. gamma_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DressingChain<R> {
    pub seed: GridFunction<R>,
    pub points: Vec<SpectralPoint<R>>,
    pub c: Complex64,
}

impl<R: NcRing> DressingChain<R> {
    pub fn new(seed: GridFunction<R>, points: Vec<SpectralPoint<R>>, c: Complex64) -> Result<Self, DressingError> {
        for (k, p) in points.iter().enumerate() {
            seed.spec().same_as(&p.spec())?;
            if points[..k].iter().any(|q| q.gamma == p.gamma) {
                return Err(DressingError::DuplicateGamma(p.gamma));
            }
        }
        Ok(DressingChain { seed, points, c })
    }

    pub fn spec(&self) -> GridSpec {
        self.seed.spec()
    }

    fn require(&self, n: usize) -> Result<(), DressingError> {
        if n > self.points.len() {
            return Err(DressingError::NotEnoughPoints {
                needed: n,
                available: self.points.len(),
            });
        }
        Ok(())
    }
}

/// Evaluates `f` at every grid index in parallel; results stay in grid order.
fn pointwise<T: Send, E: Send>(len: usize, f: impl Fn(usize) -> Result<T, E> + Sync + Send) -> Vec<Result<T, E>> {
    (0..len).into_par_iter().map(f).collect()
}

fn first_error<T, E>(results: Vec<Result<T, E>>) -> Result<Vec<T>, E> {
    results.into_iter().collect()
}

fn singular(stage: &'static str, spec: GridSpec, index: usize) -> impl Fn(RingError) -> DressingError {
    move |source| DressingError::SingularAt {
        stage,
        index,
        z: spec.z(index),
        source,
    }
}

/// `Phi chi^{-1}`.
fn theta_at<R: NcRing>(chi: &R, phi: &R) -> Result<R, RingError> {
    phi.try_mul(&chi.inverse()?)
}

/// `Theta v Theta` with `Theta = Phi_1 chi_1^{-1}`, pointwise.
pub fn darboux_once<R: NcRing>(v: &GridFunction<R>, p: &SpectralPoint<R>) -> Result<GridFunction<R>, DressingError> {
    let spec = v.spec();
    spec.same_as(&p.spec())?;
    let values = first_error(pointwise(spec.len, |k| {
            let (_, chi, phi) = p.at(k);
            let theta = theta_at(chi, phi).map_err(singular("chi_1", spec, k))?;
            mul3(&theta, &v.values()[k], &theta).map_err(DressingError::from)
        }),
    )?;
    Ok(GridFunction::from_spec(spec, values)?)
}

/// [`darboux_once`] that masks grid points where `chi_1` is near-singular.
pub fn darboux_once_masked<R: NcRing>(v: &MaskedGrid<R>, p: &SpectralPoint<R>) -> Result<MaskedGrid<R>, DressingError> {
    let spec = v.spec();
    spec.same_as(&p.spec())?;
    let values = pointwise(spec.len, |k| -> Result<Option<R>, RingError> {
        let Some(vk) = &v.values()[k] else {
            return Ok(None);
        };
        let (_, chi, phi) = p.at(k);
        match theta_at(chi, phi) {
            Ok(theta) => Ok(Some(mul3(&theta, vk, &theta)?)),
            Err(RingError::NearSingular { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    Ok(MaskedGrid::new(spec, values.into_iter().collect::<Result<_, _>>()?)?)
}

/// One step of the eigenfunction map at a single point:
/// `chi[1] = g0 Phi0 - g1 Phi1 chi1^{-1} chi0`,
/// `Phi[1] = g0 chi0 - g1 chi1 Phi1^{-1} Phi0`.
pub fn dt_eigenfunctions_at<R: NcRing>(
    target: (Complex64, &R, &R),
    by: (Complex64, &R, &R),
) -> Result<(R, R), RingError> {
    let (g0, chi0, phi0) = target;
    let (g1, chi1, phi1) = by;
    let chi = phi0.scale(g0).try_sub(&mul3(phi1, &chi1.inverse()?, chi0)?.scale(g1))?;
    let phi = chi0.scale(g0).try_sub(&mul3(chi1, &phi1.inverse()?, phi0)?.scale(g1))?;
    Ok((chi, phi))
}

/// [`dt_eigenfunctions_at`] over a whole grid. The result keeps the target's
/// `gamma`.
pub fn dt_eigenfunctions<R: NcRing>(
    target: &SpectralPoint<R>,
    by: &SpectralPoint<R>,
) -> Result<SpectralPoint<R>, DressingError> {
    let spec = target.spec();
    spec.same_as(&by.spec())?;
    let pairs = first_error(pointwise(spec.len, |k| {
            dt_eigenfunctions_at(target.at(k), by.at(k)).map_err(singular("chi_1 or Phi_1", spec, k))
        }),
    )?;
    let (chi, phi): (Vec<R>, Vec<R>) = pairs.into_iter().unzip();
    SpectralPoint::new(
        target.gamma,
        GridFunction::from_spec(spec, chi)?,
        GridFunction::from_spec(spec, phi)?,
    )
}

/// Which eigenfunction heads the first row of a quasideterminant array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eigen {
    Chi,
    Phi,
}

/// Parity of the quasideterminant order `N + 1`: `delta^e` for even order,
/// `delta^o` for odd. Both use the same alternating row rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_steps(n: usize) -> Self {
        if (n + 1).is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// The `(N+1) x (N+1)` array for `N` dressing steps.
///
/// `entries[0]` is the boxed spectral point, `entries[1..]` are
/// `gamma_1 .. gamma_N`. Columns run `N, N-1, .., 1, 0`; row `r` holds
/// `gamma^r` times `chi` (`Eigen::Chi`, even `r`) or `Phi` (odd `r`), with
/// the roles swapped for `Eigen::Phi`. The boxed entry is the bottom-right
/// corner.
pub fn quasidet_matrix_at<R: NcRing>(
    entries: &[(Complex64, &R, &R)],
    head: Eigen,
) -> Result<BlockMatrix<R>, QuasidetError> {
    let n = entries.len();
    let column = |c: usize| entries[(n - c) % n];
    Ok(BlockMatrix::from_fn(n, n, |r, c| {
        let (gamma, chi, phi) = column(c + 1);
        let use_chi = (r % 2 == 0) == (head == Eigen::Chi);
        let base = if use_chi { chi } else { phi };
        base.scale(gamma.powu(r as u32))
    })?)
}

/// `(chi[N], Phi[N])` at one point as boxed-corner quasideterminants.
pub fn quasidet_eigenfunctions_at<R: NcRing>(entries: &[(Complex64, &R, &R)]) -> Result<(R, R), QuasidetError> {
    let n = entries.len() - 1;
    let chi = quasideterminant(&quasidet_matrix_at(entries, Eigen::Chi)?, n, n)?;
    let phi = quasideterminant(&quasidet_matrix_at(entries, Eigen::Phi)?, n, n)?;
    Ok((chi, phi))
}

/// Eigenfunctions of `target` after dressing by the first `n` chain points,
/// from the quasideterminant formula.
pub fn quasidet_eigenfunctions<R: NcRing>(
    target: &SpectralPoint<R>,
    chain: &DressingChain<R>,
    n: usize,
) -> Result<(GridFunction<R>, GridFunction<R>), DressingError> {
    chain.require(n)?;
    let spec = chain.spec();
    spec.same_as(&target.spec())?;
    let pairs = first_error(pointwise(spec.len, |k| {
            let entries: Vec<_> = std::iter::once(target.at(k))
                .chain(chain.points[..n].iter().map(|p| p.at(k)))
                .collect();
            quasidet_eigenfunctions_at(&entries).map_err(|source| DressingError::QuasidetAt {
                index: k,
                z: spec.z(k),
                source,
            })
        }),
    )?;
    let (chi, phi): (Vec<R>, Vec<R>) = pairs.into_iter().unzip();
    Ok((GridFunction::from_spec(spec, chi)?, GridFunction::from_spec(spec, phi)?))
}

/// The same eigenfunctions by `n` successive applications of
/// [`dt_eigenfunctions`], updating the remaining chain points at each step.
pub fn iterated_eigenfunctions<R: NcRing>(
    target: &SpectralPoint<R>,
    chain: &DressingChain<R>,
    n: usize,
) -> Result<SpectralPoint<R>, DressingError> {
    chain.require(n)?;
    let mut target = target.clone();
    let mut points: Vec<SpectralPoint<R>> = chain.points[..n].to_vec();
    for step in 0..n {
        let by = points[step].clone();
        target = dt_eigenfunctions(&target, &by)?;
        for p in points.iter_mut().skip(step + 1) {
            *p = dt_eigenfunctions(p, &by)?;
        }
    }
    Ok(target)
}

/// Pointwise form of [`iterated_eigenfunctions`]: `target` dressed by the
/// points `by[0] .. by[n-1]` one at a time.
pub fn iterated_eigenfunctions_at<R: NcRing>(
    target: (Complex64, &R, &R),
    by: &[(Complex64, &R, &R)],
) -> Result<(R, R), RingError> {
    let mut target = (target.0, target.1.clone(), target.2.clone());
    let mut points: Vec<(Complex64, R, R)> = by.iter().map(|&(g, c, p)| (g, c.clone(), p.clone())).collect();
    for step in 0..points.len() {
        let (g1, c1, p1) = points[step].clone();
        let (c, p) = dt_eigenfunctions_at((target.0, &target.1, &target.2), (g1, &c1, &p1))?;
        target = (target.0, c, p);
        for q in points.iter_mut().skip(step + 1) {
            let (c, p) = dt_eigenfunctions_at((q.0, &q.1, &q.2), (g1, &c1, &p1))?;
            *q = (q.0, c, p);
        }
    }
    Ok((target.1, target.2))
}

/// Pointwise form of the last entry of [`iterated_darboux`].
pub fn iterated_darboux_at<R: NcRing>(v: &R, by: &[(Complex64, &R, &R)]) -> Result<R, RingError> {
    let mut v = v.clone();
    let mut points: Vec<(Complex64, R, R)> = by.iter().map(|&(g, c, p)| (g, c.clone(), p.clone())).collect();
    for step in 0..points.len() {
        let (g1, c1, p1) = points[step].clone();
        let theta = theta_at(&c1, &p1)?;
        v = mul3(&theta, &v, &theta)?;
        for q in points.iter_mut().skip(step + 1) {
            let (c, p) = dt_eigenfunctions_at((q.0, &q.1, &q.2), (g1, &c1, &p1))?;
            *q = (q.0, c, p);
        }
    }
    Ok(v)
}

/// [`n_fold_darboux`] at a single grid index.
pub fn n_fold_darboux_at<R: NcRing>(chain: &DressingChain<R>, n: usize, idx: usize) -> Result<R, DressingError> {
    chain.require(n)?;
    sandwich_at(chain, n, idx)
}

/// `Theta_k = Lambda^Phi_k (Lambda^chi_k)^{-1}` at grid index `idx`, where
/// `Lambda_k` dresses point `k` by points `1 .. k-1`.
fn theta_factor_at<R: NcRing>(chain: &DressingChain<R>, k: usize, idx: usize) -> Result<R, DressingError> {
    let spec = chain.spec();
    let entries: Vec<_> = std::iter::once(chain.points[k - 1].at(idx))
        .chain(chain.points[..k - 1].iter().map(|p| p.at(idx)))
        .collect();
    let (lam_chi, lam_phi) = quasidet_eigenfunctions_at(&entries).map_err(|source| DressingError::QuasidetAt {
        index: idx,
        z: spec.z(idx),
        source,
    })?;
    theta_at(&lam_chi, &lam_phi).map_err(singular("Lambda^chi", spec, idx))
}

/// `Theta_1 .. Theta_n` sampled on the chain grid.
pub fn theta_factors<R: NcRing>(chain: &DressingChain<R>, n: usize) -> Result<Vec<GridFunction<R>>, DressingError> {
    chain.require(n)?;
    let spec = chain.spec();
    (1..=n)
        .map(|k| {
            let values = first_error(pointwise(spec.len, |idx| theta_factor_at(chain, k, idx)))?;
            Ok(GridFunction::from_spec(spec, values)?)
        })
        .collect()
}

fn sandwich_at<R: NcRing>(chain: &DressingChain<R>, n: usize, idx: usize) -> Result<R, DressingError> {
    let mut out = chain.seed.values()[idx].clone();
    for k in 1..=n {
        let theta = theta_factor_at(chain, k, idx)?;
        out = mul3(&theta, &out, &theta)?;
    }
    Ok(out)
}

/// `v[n] = Theta_n .. Theta_1 v Theta_1 .. Theta_n`, pointwise.
pub fn n_fold_darboux<R: NcRing>(chain: &DressingChain<R>, n: usize) -> Result<GridFunction<R>, DressingError> {
    chain.require(n)?;
    let spec = chain.spec();
    let values = first_error(pointwise(spec.len, |idx| sandwich_at(chain, n, idx)))?;
    Ok(GridFunction::from_spec(spec, values)?)
}

/// [`n_fold_darboux`] with near-singular grid points masked.
pub fn n_fold_darboux_masked<R: NcRing>(chain: &DressingChain<R>, n: usize) -> Result<MaskedGrid<R>, DressingError> {
    chain.require(n)?;
    let spec = chain.spec();
    let values = pointwise(spec.len, |idx| match sandwich_at(chain, n, idx) {
        Ok(v) => Ok(Some(v)),
        Err(DressingError::SingularAt { .. }) | Err(DressingError::QuasidetAt { .. }) => Ok(None),
        Err(e) => Err(e),
    });
    Ok(MaskedGrid::new(spec, values.into_iter().collect::<Result<_, _>>()?)?)
}

/// `v[0] .. v[n]` by composing [`darboux_once`], dressing the remaining
/// spectral points with [`dt_eigenfunctions`] after every step.
pub fn iterated_darboux<R: NcRing>(chain: &DressingChain<R>, n: usize) -> Result<Vec<GridFunction<R>>, DressingError> {
    chain.require(n)?;
    let mut out = vec![chain.seed.clone()];
    let mut points = chain.points[..n].to_vec();
    for step in 0..n {
        let by = points[step].clone();
        out.push(darboux_once(&out[step], &by)?);
        for p in points.iter_mut().skip(step + 1) {
            *p = dt_eigenfunctions(p, &by)?;
        }
    }
    Ok(out)
}
