//! Numerical toolkit for the noncommutative Painleve II equation
//! `v'' = 2 v^3 - 2 [z, v]_+ + C` over associative rings.
//!
//! * [`ncring`]: the ring interface plus complex scalars and dense matrices.
//! * [`moyal`]: exact Moyal star product on bivariate polynomials.
//! * [`block`] and [`quasidet`]: block matrices, Schur-complement inversion
//!   and quasideterminants.
//! * [`laxpair`]: both Lax representations and their residual checks.
//! * [`dressing`]: the linear problem in `z`, Darboux maps and their
//!   quasideterminant form.

pub mod block;
pub mod dressing;
pub mod grid;
pub mod laxpair;
pub mod moyal;
pub mod ncring;
pub mod ode;
pub mod quasidet;

pub use block::BlockMatrix;
pub use grid::{GridFunction, GridSpec, MaskedGrid};
pub use ncring::{anticommutator, commutator, CMat, NcRing, RingError};
pub use num_complex::Complex64;
