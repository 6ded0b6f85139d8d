//! Dense matrix carrier, block bookkeeping, and rank-revealing numerics.

pub mod block;
pub mod decomp;
pub mod matrix;
pub mod schur;

pub use block::Block2x2;
pub use decomp::{
    inverse, is_invertible, op_norm, pinv, rank, singular_values, svd_factors, svd_rank,
    SvdFactors,
};
pub use matrix::Matrix;
pub use schur::{schur_complement, Pivot};

use crate::scalar::Scalar;

/// Thresholds shared by every rank decision, invertibility gate, residual
/// check, and perturbation step in the toolkit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig<T> {
    /// A singular value below `rank_tol * sigma_max` counts as zero.
    pub rank_tol: T,
    /// Condition numbers above this fail the invertibility gate.
    pub cond_max: T,
    /// Residual level (relative to the data scale) accepted as exact.
    pub residual_tol: T,
    /// Initial relative perturbation size for the invertibility upgrade.
    pub delta_init: T,
    /// How many times the upgrade may halve its perturbation before giving up.
    pub max_halvings: u32,
}

impl<T: Scalar> Default for ToleranceConfig<T> {
    fn default() -> Self {
        ToleranceConfig {
            rank_tol: T::of(1e-9),
            cond_max: T::of(1e12),
            residual_tol: T::of(1e-8),
            delta_init: T::of(1e-3),
            max_halvings: 40,
        }
    }
}
