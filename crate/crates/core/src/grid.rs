//! Ring-valued functions sampled on a uniform real grid.

use thiserror::Error;

use crate::ncring::NcRing;

/// Central second-difference stencils need at least this many samples.
pub const MIN_GRID_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid has {len} points, at least {min} are required")]
    TooShort { len: usize, min: usize },
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("grids differ: {0}")]
    Mismatch(String),
}

/// Uniform grid geometry: `z_k = z0 + k h` for `k < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub z0: f64,
    pub h: f64,
    pub len: usize,
}

impl GridSpec {
    pub fn new(z0: f64, h: f64, len: usize) -> Result<Self, GridError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(GridError::BadStep(h));
        }
        if len < MIN_GRID_LEN {
            return Err(GridError::TooShort {
                len,
                min: MIN_GRID_LEN,
            });
        }
        Ok(GridSpec { z0, h, len })
    }

    /// Covers `[start, end]` with step `h`; the last point lands on `end`
    /// when `(end - start) / h` is an integer up to rounding.
    pub fn spanning(start: f64, end: f64, h: f64) -> Result<Self, GridError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(GridError::BadStep(h));
        }
        let steps = ((end - start) / h + 1e-9).floor();
        if !(steps >= 0.0) {
            return Err(GridError::TooShort { len: 0, min: MIN_GRID_LEN });
        }
        Self::new(start, h, steps as usize + 1)
    }

    pub fn z(&self, k: usize) -> f64 {
        self.z0 + k as f64 * self.h
    }

    pub fn end(&self) -> f64 {
        self.z(self.len - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|k| self.z(k))
    }

    pub fn same_as(&self, other: &GridSpec) -> Result<(), GridError> {
        if self == other {
            Ok(())
        } else {
            Err(GridError::Mismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<R> {
    spec: GridSpec,
    values: Vec<R>,
}

impl<R: NcRing> GridFunction<R> {
    pub fn new(z0: f64, h: f64, values: Vec<R>) -> Result<Self, GridError> {
        let spec = GridSpec::new(z0, h, values.len())?;
        Ok(GridFunction { spec, values })
    }

    pub fn from_spec(spec: GridSpec, values: Vec<R>) -> Result<Self, GridError> {
        if values.len() != spec.len {
            return Err(GridError::Mismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                spec.len
            )));
        }
        Ok(GridFunction { spec, values })
    }

    pub fn sample(spec: GridSpec, f: impl Fn(f64) -> R) -> Self {
        let values = spec.points().map(f).collect();
        GridFunction { spec, values }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn z0(&self) -> f64 {
        self.spec.z0
    }

    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn z(&self, k: usize) -> f64 {
        self.spec.z(k)
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn into_values(self) -> Vec<R> {
        self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &R)> {
        self.values.iter().enumerate().map(|(k, v)| (self.spec.z(k), v))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(NcRing::norm).fold(0.0, f64::max)
    }

    pub fn mean_norm(&self) -> f64 {
        self.values.iter().map(NcRing::norm).sum::<f64>() / self.values.len() as f64
    }

    /// Largest pointwise distance; infinite if the grids differ.
    pub fn max_distance(&self, other: &Self) -> f64 {
        if self.spec != other.spec {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| crate::ncring::distance(a, b))
            .fold(0.0, f64::max)
    }

    /// Four-point Lagrange interpolation (exact on cubics), or the stored
    /// value when `z` sits on a grid node.
    pub fn interpolate(&self, z: f64) -> R {
        let s = (z - self.spec.z0) / self.spec.h;
        let nearest = s.round();
        if (s - nearest).abs() < 1e-9 && nearest >= 0.0 && (nearest as usize) < self.len() {
            return self.values[nearest as usize].clone();
        }
        let n = self.len() as isize;
        let base = (s.floor() as isize - 1).clamp(0, n - 4) as usize;
        let nodes: Vec<f64> = (0..4).map(|m| (base + m) as f64).collect();
        let mut acc = self.values[base].zero_like();
        for m in 0..4 {
            let weight: f64 = (0..4)
                .filter(|&l| l != m)
                .map(|l| (s - nodes[l]) / (nodes[m] - nodes[l]))
                .product();
            acc = acc
                .try_add(&self.values[base + m].scale(weight.into()))
                .expect("grid values share a shape");
        }
        acc
    }
}

/// A grid function with some samples withheld (typically where a required
/// inverse was near-singular).
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedGrid<R> {
    spec: GridSpec,
    values: Vec<Option<R>>,
}

impl<R: NcRing> MaskedGrid<R> {
    pub fn new(spec: GridSpec, values: Vec<Option<R>>) -> Result<Self, GridError> {
        if values.len() != spec.len {
            return Err(GridError::Mismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                spec.len
            )));
        }
        Ok(MaskedGrid { spec, values })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[Option<R>] {
        &self.values
    }

    pub fn masked_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn masked_fraction(&self) -> f64 {
        self.masked_count() as f64 / self.values.len() as f64
    }

    /// `Some` only when nothing is masked.
    pub fn complete(&self) -> Option<GridFunction<R>> {
        let values: Option<Vec<R>> = self.values.iter().cloned().collect();
        values.map(|values| GridFunction {
            spec: self.spec,
            values,
        })
    }
}

impl<R: NcRing> From<GridFunction<R>> for MaskedGrid<R> {
    fn from(f: GridFunction<R>) -> Self {
        MaskedGrid {
            spec: f.spec,
            values: f.values.into_iter().map(Some).collect(),
        }
    }
}
