//! Numerical toolkit for three equivalence relations between square
//! operators `U` on `X` and `V` on `Y`: Schur coupling, equivalence after
//! extension, and matricial coupling.
//!
//! In finite dimensions the three relations coincide, and they hold exactly
//! when `ker U`, `ker V` and the two cokernels have matching dimensions.
//! This crate makes that theory executable at matrix scale:
//!
//! * [`couplings`] holds the witness types for each relation and the closed
//!   block-matrix conversions between them, including the normal-form and
//!   upgrade machinery for equivalence-after-extension witnesses.
//! * [`kernelroute`] decides coupling from kernel dimensions and builds
//!   verified Schur-coupling witnesses along two independent constructions.
//! * [`diagnostics`] covers the spectral side: invertible approximation,
//!   polar factorization with closed range, threshold kernel profiles, and
//!   the transfer of invertible approximants across a witness.
//! * [`harness`] verifies witnesses by residuals and generates random
//!   instances for the round-trip suite.
//! * [`matcore`] is the small dense-matrix layer everything else shares.
//!
//! Everything is generic over the scalar type through [`Scalar`]
//! (`f64` and `f32` are provided); the aliases below pin the common
//! double-precision instantiation.

pub mod couplings;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod kernelroute;
pub mod matcore;
pub mod scalar;

pub use error::CouplingError;
pub use matcore::{Matrix, ToleranceConfig};
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Tolerances64 = ToleranceConfig<f64>;
pub type Tolerances32 = ToleranceConfig<f32>;
