//! Schur complements of a 2x2 block operator with respect to any corner.

use crate::error::CouplingError;
use crate::matcore::{inverse, Block2x2, ToleranceConfig};
use crate::matcore::matrix::Matrix;
use crate::scalar::Scalar;

/// Which block of `[[a11, a12], [a21, a22]]` is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pivot {
    P11,
    P12,
    P21,
    P22,
}

/// Complement of the pivot block: the composite map that remains on the
/// off-pivot corner after eliminating through the pivot.
///
/// With pivot `P22` this is `a11 - a12 a22^-1 a21`, and the other three
/// corners follow the same pattern. The pivot must pass the invertibility
/// gate of the supplied tolerances.
pub fn schur_complement<T: Scalar>(
    blocks: &Block2x2<T>,
    pivot: Pivot,
    cfg: &ToleranceConfig<T>,
) -> Result<Matrix<T>, CouplingError> {
    let (a11, a12, a21, a22) = (blocks.a11(), blocks.a12(), blocks.a21(), blocks.a22());
    match pivot {
        Pivot::P22 => Ok(a11 - a12 * inverse(a22, "a22", cfg)? * a21),
        Pivot::P11 => Ok(a22 - a21 * inverse(a11, "a11", cfg)? * a12),
        Pivot::P12 => Ok(a21 - a22 * inverse(a12, "a12", cfg)? * a11),
        Pivot::P21 => Ok(a12 - a11 * inverse(a21, "a21", cfg)? * a22),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split_2x2(entries: [[f64; 2]; 2]) -> Block2x2<f64> {
        let m = Matrix::from_rows(&[&entries[0], &entries[1]]).unwrap();
        Block2x2::extract(&m, (1, 1), (1, 1)).unwrap()
    }

    #[test]
    fn scalar_complements() {
        let cfg = ToleranceConfig::default();
        let b = split_2x2([[2.0, 1.0], [1.0, 1.0]]);
        let w22 = schur_complement(&b, Pivot::P22, &cfg).unwrap();
        let w11 = schur_complement(&b, Pivot::P11, &cfg).unwrap();
        assert!((w22[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((w11[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn off_diagonal_pivots() {
        let cfg = ToleranceConfig::default();
        let b = split_2x2([[2.0, 1.0], [1.0, 1.0]]);
        // P12: a21 - a22 a12^-1 a11 = 1 - 1*1*2 = -1
        let w = schur_complement(&b, Pivot::P12, &cfg).unwrap();
        assert!((w[(0, 0)] + 1.0).abs() < 1e-15);
        // P21: a12 - a11 a21^-1 a22 = 1 - 2*1*1 = -1
        let w = schur_complement(&b, Pivot::P21, &cfg).unwrap();
        assert!((w[(0, 0)] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_pivot_is_refused_by_name() {
        let cfg = ToleranceConfig::default();
        let b = split_2x2([[2.0, 1.0], [1.0, 0.0]]);
        let err = schur_complement(&b, Pivot::P22, &cfg).unwrap_err();
        assert!(matches!(err, CouplingError::NotInvertible { ref block, .. } if block == "a22"));
    }

    #[test]
    fn block_sized_complement() {
        let cfg = ToleranceConfig::default();
        // S = [[A, B], [C, D]] with A = 2I, B = C = I, D = I on 2x2 blocks.
        let s = Matrix::from_rows(&[
            &[2.0, 0.0, 1.0, 0.0],
            &[0.0, 2.0, 0.0, 1.0],
            &[1.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 1.0],
        ])
        .unwrap();
        let b = Block2x2::extract(&s, (2, 2), (2, 2)).unwrap();
        let w = schur_complement(&b, Pivot::P22, &cfg).unwrap();
        assert!((&w - Matrix::identity(2)).max_abs() < 1e-14);
    }
}
