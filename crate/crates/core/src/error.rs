use thiserror::Error;

use crate::kernelroute::CouplingVerdict;

/// Errors shared across the toolkit.
///
/// Verification *failures* are not errors: the verifiers in [`crate::harness`]
/// return reports with `pass = false` instead. These variants cover requests
/// that cannot be carried out at all.
#[derive(Debug, Clone, Error)]
pub enum CouplingError {
    #[error("{block} is not invertible (cond {cond:.3e}, limit {limit:.3e})")]
    NotInvertible { block: String, cond: f64, limit: f64 },

    #[error("witness is not strong: {0}")]
    NotStrong(String),

    #[error("operators are not coupled: {0}")]
    NotCoupled(CouplingVerdict),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("witness rejected: {0}")]
    WitnessRejected(String),

    #[error("upgrade failed after {halvings} halvings (last delta {delta:.3e}, cond(N) {cond_n:.3e})")]
    UpgradeFailed { halvings: u32, delta: f64, cond_n: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("perturbation too large: {0}")]
    PerturbationTooLarge(String),
}
