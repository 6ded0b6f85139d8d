//! Dense row-major matrices.
//!
//! Dimensions may be zero. A `p x 0` by `0 x q` product is the `p x q` zero
//! matrix, which keeps the block formulas total when a kernel or extension
//! space is trivial.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Range, Sub};

use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::CouplingError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self, CouplingError> {
        if entries.len() != rows * cols {
            return Err(CouplingError::DimensionMismatch(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Matrix { rows, cols, entries })
    }

    /// Builds a matrix from explicit rows; every row must have the same length.
    pub fn from_rows(rows: &[&[T]]) -> Result<Self, CouplingError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(CouplingError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {ncols}",
                    r.len()
                )));
            }
        }
        let entries = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Ok(Matrix { rows: nrows, cols: ncols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, entries: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = T::one();
        }
        m
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.entries[i * n + i] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// True when either dimension is zero.
    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        self.entries[i * self.cols + j] = value;
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        out
    }

    pub fn scale(&self, factor: T) -> Self {
        self.map(|x| x * factor)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        let sum = self
            .entries
            .iter()
            .fold(T::zero(), |acc, &x| acc + x * x);
        Float::sqrt(sum)
    }

    pub fn max_abs(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, &x| Float::max(acc, Float::abs(x)))
    }

    /// Copies the `rows x cols` window starting at the given ranges.
    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        assert!(rows.end <= self.rows && cols.end <= self.cols, "submatrix out of bounds");
        let mut out = Self::zeros(rows.len(), cols.len());
        for (oi, i) in rows.clone().enumerate() {
            for (oj, j) in cols.clone().enumerate() {
                out.entries[oi * out.cols + oj] = self.entries[i * self.cols + j];
            }
        }
        out
    }

    /// Concatenates blocks left to right; all must share the row count.
    pub fn hstack(parts: &[&Matrix<T>]) -> Result<Self, CouplingError> {
        let rows = parts.first().map_or(0, |p| p.rows);
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        for (i, p) in parts.iter().enumerate() {
            if p.rows != rows {
                return Err(CouplingError::DimensionMismatch(format!(
                    "hstack part {i} has {} rows, expected {rows}",
                    p.rows
                )));
            }
        }
        let mut out = Self::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            for i in 0..rows {
                for j in 0..p.cols {
                    out.entries[i * cols + offset + j] = p.entries[i * p.cols + j];
                }
            }
            offset += p.cols;
        }
        Ok(out)
    }

    /// Concatenates blocks top to bottom; all must share the column count.
    pub fn vstack(parts: &[&Matrix<T>]) -> Result<Self, CouplingError> {
        let cols = parts.first().map_or(0, |p| p.cols);
        let rows: usize = parts.iter().map(|p| p.rows).sum();
        for (i, p) in parts.iter().enumerate() {
            if p.cols != cols {
                return Err(CouplingError::DimensionMismatch(format!(
                    "vstack part {i} has {} cols, expected {cols}",
                    p.cols
                )));
            }
        }
        let mut out = Self::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            out.entries[offset * cols..(offset + p.rows) * cols].copy_from_slice(&p.entries);
            offset += p.rows;
        }
        Ok(out)
    }

    /// Assembles a rectangular grid of blocks. Row heights must agree along
    /// each block row and column widths along each block column.
    pub fn from_block_grid(grid: &[&[&Matrix<T>]]) -> Result<Self, CouplingError> {
        let mut band_rows = Vec::with_capacity(grid.len());
        for row in grid {
            band_rows.push(Matrix::hstack(row)?);
        }
        let refs: Vec<&Matrix<T>> = band_rows.iter().collect();
        Matrix::vstack(&refs)
    }

    pub fn block_diag(blocks: &[&Matrix<T>]) -> Self {
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.entries[(r0 + i) * cols + c0 + j] = b.entries[i * b.cols + j];
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "product dimension mismatch: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.entries[i * self.cols + k];
                let lhs_row = &mut out.entries[i * rhs.cols..(i + 1) * rhs.cols];
                let rhs_row = &rhs.entries[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &r) in lhs_row.iter_mut().zip(rhs_row) {
                    *o = *o + aik * r;
                }
            }
        }
        out
    }

    fn zip_with(&self, rhs: &Self, op: impl Fn(T, T) -> T, what: &str) -> Self {
        assert_eq!(
            self.shape(),
            rhs.shape(),
            "{what} dimension mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            rhs.rows,
            rhs.cols
        );
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    pub(crate) fn to_na(&self) -> DMatrix<T> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.entries)
    }

    pub(crate) fn from_na(m: &DMatrix<T>) -> Self {
        let (rows, cols) = m.shape();
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(m[(i, j)]);
            }
        }
        Matrix { rows, cols, entries }
    }
}

impl<T: Scalar> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.entries[i * self.cols + j]
    }
}

macro_rules! binop_impls {
    ($op:ident, $method:ident, $delegate:expr) => {
        impl<T: Scalar> $op<&Matrix<T>> for &Matrix<T> {
            type Output = Matrix<T>;
            fn $method(self, rhs: &Matrix<T>) -> Matrix<T> {
                let f: fn(&Matrix<T>, &Matrix<T>) -> Matrix<T> = $delegate;
                f(self, rhs)
            }
        }
        impl<T: Scalar> $op<Matrix<T>> for &Matrix<T> {
            type Output = Matrix<T>;
            fn $method(self, rhs: Matrix<T>) -> Matrix<T> {
                self.$method(&rhs)
            }
        }
        impl<T: Scalar> $op<&Matrix<T>> for Matrix<T> {
            type Output = Matrix<T>;
            fn $method(self, rhs: &Matrix<T>) -> Matrix<T> {
                (&self).$method(rhs)
            }
        }
        impl<T: Scalar> $op<Matrix<T>> for Matrix<T> {
            type Output = Matrix<T>;
            fn $method(self, rhs: Matrix<T>) -> Matrix<T> {
                (&self).$method(&rhs)
            }
        }
    };
}

binop_impls!(Add, add, |a, b| a.zip_with(b, |x, y| x + y, "sum"));
binop_impls!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y, "difference"));
binop_impls!(Mul, mul, |a, b| a.matmul(b));

impl<T: Scalar> Neg for &Matrix<T> {
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        self.map(|x| -x)
    }
}

impl<T: Scalar> Neg for Matrix<T> {
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        -&self
    }
}

impl<T: Scalar> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}x{}]", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{}", self[(i, j)])).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}
