//! Rectangular arrays whose entries live in an [`NcRing`].

use thiserror::Error;

use crate::ncring::{NcRing, RingError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlockError {
    #[error("block matrix must have at least one row and column")]
    Empty,
    #[error("expected {expected} entries for a {rows}x{cols} block matrix, got {got}")]
    WrongLength {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error(transparent)]
    Ring(#[from] RingError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix<R> {
    rows: usize,
    cols: usize,
    entries: Vec<R>,
}

impl<R: NcRing> BlockMatrix<R> {
    /// Row-major entries; all entries must be mutually compatible.
    pub fn new(rows: usize, cols: usize, entries: Vec<R>) -> Result<Self, BlockError> {
        if rows == 0 || cols == 0 {
            return Err(BlockError::Empty);
        }
        if entries.len() != rows * cols {
            return Err(BlockError::WrongLength {
                rows,
                cols,
                expected: rows * cols,
                got: entries.len(),
            });
        }
        for e in &entries[1..] {
            entries[0].check_compatible(e)?;
        }
        Ok(BlockMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<R>>) -> Result<Self, BlockError> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(BlockError::WrongLength {
                rows: n,
                cols: m,
                expected: n * m,
                got: rows.iter().map(Vec::len).sum(),
            });
        }
        Self::new(n, m, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Result<Self, BlockError> {
        let entries = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self::new(rows, cols, entries)
    }

    /// `n x n` identity whose entries have the shape of `like`.
    pub fn identity(n: usize, like: &R) -> Self {
        let (zero, one) = (like.zero_like(), like.one_like());
        Self::from_fn(n, n, |i, j| if i == j { one.clone() } else { zero.clone() })
            .expect("identity entries share a shape")
    }

    pub fn zeros(rows: usize, cols: usize, like: &R) -> Self {
        let zero = like.zero_like();
        Self::from_fn(rows, cols, |_, _| zero.clone()).expect("zero entries share a shape")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Shape of the entries (the ring dimension `d`).
    pub fn entry_dim(&self) -> usize {
        self.entries[0].dim()
    }

    pub fn get(&self, i: usize, j: usize) -> &R {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of range");
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: R) {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of range");
        self.entries[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> &[R] {
        &self.entries
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn slice(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        assert!(r0 < r1 && r1 <= self.rows && c0 < c1 && c1 <= self.cols);
        BlockMatrix {
            rows: r1 - r0,
            cols: c1 - c0,
            entries: (r0..r1)
                .flat_map(|i| (c0..c1).map(move |j| (i, j)))
                .map(|(i, j)| self.get(i, j).clone())
                .collect(),
        }
    }

    /// The submatrix with row `i` and column `j` removed.
    pub fn minor(&self, i: usize, j: usize) -> Self {
        assert!(self.rows > 1 && self.cols > 1, "minor of a single row or column");
        let entries = (0..self.rows)
            .filter(|&r| r != i)
            .flat_map(|r| (0..self.cols).filter(|&c| c != j).map(move |c| (r, c)))
            .map(|(r, c)| self.get(r, c).clone())
            .collect();
        BlockMatrix {
            rows: self.rows - 1,
            cols: self.cols - 1,
            entries,
        }
    }

    /// Assembles `[[tl, tr], [bl, br]]`.
    pub fn join(tl: &Self, tr: &Self, bl: &Self, br: &Self) -> Result<Self, BlockError> {
        if tl.rows != tr.rows || bl.rows != br.rows || tl.cols != bl.cols || tr.cols != br.cols {
            return Err(BlockError::ShapeMismatch {
                left: (tl.rows, tl.cols),
                right: (br.rows, br.cols),
            });
        }
        let rows = tl.rows + bl.rows;
        let cols = tl.cols + tr.cols;
        Self::from_fn(rows, cols, |i, j| match (i < tl.rows, j < tl.cols) {
            (true, true) => tl.get(i, j).clone(),
            (true, false) => tr.get(i, j - tl.cols).clone(),
            (false, true) => bl.get(i - tl.rows, j).clone(),
            (false, false) => br.get(i - tl.rows, j - tl.cols).clone(),
        })
    }

    fn zip_with(
        &self,
        other: &Self,
        op: impl Fn(&R, &R) -> Result<R, RingError>,
    ) -> Result<Self, BlockError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(BlockError::ShapeMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| op(a, b))
            .collect::<Result<_, _>>()?;
        Ok(BlockMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, BlockError> {
        self.zip_with(other, R::try_add)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, BlockError> {
        self.zip_with(other, R::try_sub)
    }

    /// Block product; entry order inside each sum follows the column index.
    pub fn try_mul(&self, other: &Self) -> Result<Self, BlockError> {
        if self.cols != other.rows {
            return Err(BlockError::ShapeMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = self.get(i, 0).try_mul(other.get(0, j))?;
                for k in 1..self.cols {
                    acc = acc.try_add(&self.get(i, k).try_mul(other.get(k, j))?)?;
                }
                entries.push(acc);
            }
        }
        Ok(BlockMatrix {
            rows: self.rows,
            cols: other.cols,
            entries,
        })
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Result<Self, BlockError> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    pub fn scale(&self, c: num_complex::Complex64) -> Self {
        BlockMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&R) -> R) -> Self {
        BlockMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    /// `sqrt(sum |a_ij|^2)` with entry norms from the ring.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.norm().powi(2)).sum::<f64>().sqrt()
    }

    /// Entry norms, row-major.
    pub fn entry_norms(&self) -> Vec<f64> {
        self.entries.iter().map(NcRing::norm).collect()
    }

    /// Block-level transpose (entries themselves are not transposed).
    pub fn transpose_blocks(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
            .expect("entries already share a shape")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncring::CMat;
    use num_complex::Complex64;

    fn s(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn constructor_validates_shape() {
        assert_eq!(BlockMatrix::<Complex64>::new(0, 1, vec![]), Err(BlockError::Empty));
        assert!(matches!(
            BlockMatrix::new(2, 2, vec![s(1.0); 3]),
            Err(BlockError::WrongLength { .. })
        ));
        let mixed = vec![CMat::identity(2), CMat::identity(3)];
        assert!(matches!(BlockMatrix::new(1, 2, mixed), Err(BlockError::Ring(_))));
    }

    #[test]
    fn minor_and_join() {
        let a = BlockMatrix::from_fn(3, 3, |i, j| s((3 * i + j) as f64)).unwrap();
        let m = a.minor(1, 0);
        let got: Vec<f64> = m.entries().iter().map(|z| z.re).collect();
        assert_eq!(got, vec![1.0, 2.0, 7.0, 8.0]);
        let rebuilt = BlockMatrix::join(
            &a.slice(0, 2, 0, 2),
            &a.slice(0, 2, 2, 3),
            &a.slice(2, 3, 0, 2),
            &a.slice(2, 3, 2, 3),
        )
        .unwrap();
        assert_eq!(rebuilt, a);
    }

    #[test]
    fn product_respects_entry_order() {
        let e = CMat::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let f = CMat::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let a = BlockMatrix::new(1, 1, vec![e.clone()]).unwrap();
        let b = BlockMatrix::new(1, 1, vec![f.clone()]).unwrap();
        assert_eq!(a.try_mul(&b).unwrap().get(0, 0), &(&e * &f));
        assert_ne!(a.try_mul(&b).unwrap(), b.try_mul(&a).unwrap());
    }
}
