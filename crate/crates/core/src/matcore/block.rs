//! 2x2 operator block matrices with explicit row and column splits.

use crate::error::CouplingError;
use crate::matcore::Matrix;
use crate::scalar::Scalar;

/// A matrix partitioned as `[[a11, a12], [a21, a22]]`.
///
/// The splits are carried by the blocks themselves: `a11` fixes the first
/// row and column band, and the constructor checks that the remaining blocks
/// fit. Any band may have zero width.
#[derive(Debug, Clone, PartialEq)]
pub struct Block2x2<T> {
    a11: Matrix<T>,
    a12: Matrix<T>,
    a21: Matrix<T>,
    a22: Matrix<T>,
}

impl<T: Scalar> Block2x2<T> {
    /// Assembles four blocks, checking that the grid is consistent.
    pub fn assemble(
        a11: Matrix<T>,
        a12: Matrix<T>,
        a21: Matrix<T>,
        a22: Matrix<T>,
    ) -> Result<Self, CouplingError> {
        let mismatch = |block: &str, detail: String| {
            Err(CouplingError::DimensionMismatch(format!("block {block}: {detail}")))
        };
        if a12.rows() != a11.rows() {
            return mismatch("a12", format!("{} rows, expected {}", a12.rows(), a11.rows()));
        }
        if a21.cols() != a11.cols() {
            return mismatch("a21", format!("{} cols, expected {}", a21.cols(), a11.cols()));
        }
        if a22.rows() != a21.rows() {
            return mismatch("a22", format!("{} rows, expected {}", a22.rows(), a21.rows()));
        }
        if a22.cols() != a12.cols() {
            return mismatch("a22", format!("{} cols, expected {}", a22.cols(), a12.cols()));
        }
        Ok(Block2x2 { a11, a12, a21, a22 })
    }

    /// Partitions a flat matrix along the given splits.
    pub fn extract(
        m: &Matrix<T>,
        row_split: (usize, usize),
        col_split: (usize, usize),
    ) -> Result<Self, CouplingError> {
        let (r1, r2) = row_split;
        let (c1, c2) = col_split;
        if r1 + r2 != m.rows() || c1 + c2 != m.cols() {
            return Err(CouplingError::DimensionMismatch(format!(
                "splits ({r1}+{r2}, {c1}+{c2}) do not cover a {}x{} matrix",
                m.rows(),
                m.cols()
            )));
        }
        Ok(Block2x2 {
            a11: m.submatrix(0..r1, 0..c1),
            a12: m.submatrix(0..r1, c1..c1 + c2),
            a21: m.submatrix(r1..r1 + r2, 0..c1),
            a22: m.submatrix(r1..r1 + r2, c1..c1 + c2),
        })
    }

    /// Flattens the blocks back into one matrix.
    pub fn flatten(&self) -> Matrix<T> {
        Matrix::from_block_grid(&[&[&self.a11, &self.a12], &[&self.a21, &self.a22]])
            .expect("blocks validated on construction")
    }

    pub fn row_split(&self) -> (usize, usize) {
        (self.a11.rows(), self.a21.rows())
    }

    pub fn col_split(&self) -> (usize, usize) {
        (self.a11.cols(), self.a12.cols())
    }

    pub fn a11(&self) -> &Matrix<T> {
        &self.a11
    }

    pub fn a12(&self) -> &Matrix<T> {
        &self.a12
    }

    pub fn a21(&self) -> &Matrix<T> {
        &self.a21
    }

    pub fn a22(&self) -> &Matrix<T> {
        &self.a22
    }
}
