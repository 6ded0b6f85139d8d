//! Witness types for the three coupling relations between a pair of square
//! operators `U` on `X` and `V` on `Y`, plus the structural flags that mark
//! the strong variants.
//!
//! A witness is a bundle of matrices certifying one relation:
//!
//! * Schur coupling: one block matrix `S = [[A, B], [C, D]]` with `A`, `D`
//!   invertible whose diagonal Schur complements reproduce `U` and `V`.
//! * Equivalence after extension: invertible `E`, `F` with
//!   `diag(U, I) = E * diag(V, I) * F` between extended spaces.
//! * Matricial coupling: one invertible `u_hat` on `X (+) Y` with
//!   `U` as its upper-left corner and `V` as the lower-right corner of its
//!   inverse.
//!
//! Witnesses are plain data; the verifiers in [`crate::harness`] decide
//! whether a witness actually certifies a given pair. Constructors here check
//! shapes and cheap consistency (cached inverses really invert), while the
//! `assemble_unverified` constructors skip the numeric checks so that
//! deserialized bundles can be rebuilt and then judged by a verifier.

pub mod convert;
pub mod normal_form;

pub use convert::{eae_to_mc, mc_to_eae, sc_to_eae, sc_to_mc, seae_to_sc, smc_to_sc};
pub use normal_form::{eae_to_sc, gauge_eae, normalize_eae, upgrade_to_strong, UpgradeOutcome};

use std::ops::Deref;

use num_traits::Float;

use crate::error::CouplingError;
use crate::matcore::{is_invertible, op_norm, pinv, Block2x2, Matrix, ToleranceConfig};
use crate::scalar::Scalar;

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CouplingError> {
    if ok {
        Ok(())
    } else {
        Err(CouplingError::DimensionMismatch(msg()))
    }
}

/// Invertibility verdict for a single named block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvFlag<T> {
    pub invertible: bool,
    pub cond: T,
}

impl<T: Scalar> InvFlag<T> {
    pub fn of(m: &Matrix<T>, cfg: &ToleranceConfig<T>) -> Self {
        let (invertible, cond) = is_invertible(m, cfg);
        InvFlag { invertible, cond }
    }
}

/// A Schur-coupling witness: `S = [[A, B], [C, D]]` on `X (+) Y` with `A` and
/// `D` passing the invertibility gate. Caches the two inverses, their
/// condition numbers, and the coupled pair
/// `U = A - B D^-1 C`, `V = D - C A^-1 B`.
#[derive(Debug, Clone)]
pub struct SchurCouplingWitness<T> {
    blocks: Block2x2<T>,
    a_inv: Matrix<T>,
    d_inv: Matrix<T>,
    u: Matrix<T>,
    v: Matrix<T>,
    cond_a: T,
    cond_d: T,
}

impl<T: Scalar> SchurCouplingWitness<T> {
    /// Validating constructor from the four blocks.
    pub fn from_blocks(
        a: Matrix<T>,
        b: Matrix<T>,
        c: Matrix<T>,
        d: Matrix<T>,
        cfg: &ToleranceConfig<T>,
    ) -> Result<Self, CouplingError> {
        let blocks = Block2x2::assemble(a, b, c, d)?;
        Self::build(blocks, cfg, true)
    }

    /// Validating constructor from the assembled matrix and the split point.
    pub fn new(s: &Matrix<T>, dim_x: usize, cfg: &ToleranceConfig<T>) -> Result<Self, CouplingError> {
        Self::build(Self::split(s, dim_x)?, cfg, true)
    }

    /// Shape-checked but numerically ungated rebuild, for deserialized data.
    /// The caller is expected to run a verifier on the result.
    pub fn assemble_unverified(
        s: &Matrix<T>,
        dim_x: usize,
        cfg: &ToleranceConfig<T>,
    ) -> Result<Self, CouplingError> {
        Self::build(Self::split(s, dim_x)?, cfg, false)
    }

    fn split(s: &Matrix<T>, dim_x: usize) -> Result<Block2x2<T>, CouplingError> {
        require(s.is_square(), || {
            format!("coupling block matrix must be square, got {}x{}", s.rows(), s.cols())
        })?;
        require(dim_x <= s.rows(), || {
            format!("split {} exceeds matrix size {}", dim_x, s.rows())
        })?;
        let dim_y = s.rows() - dim_x;
        Block2x2::extract(s, (dim_x, dim_y), (dim_x, dim_y))
    }

    fn build(blocks: Block2x2<T>, cfg: &ToleranceConfig<T>, gate: bool) -> Result<Self, CouplingError> {
        let (ok_a, cond_a) = is_invertible(blocks.a11(), cfg);
        let (ok_d, cond_d) = is_invertible(blocks.a22(), cfg);
        if gate {
            if !ok_a {
                return Err(CouplingError::NotInvertible {
                    block: "A".into(),
                    cond: cond_a.lossy_f64(),
                    limit: cfg.cond_max.lossy_f64(),
                });
            }
            if !ok_d {
                return Err(CouplingError::NotInvertible {
                    block: "D".into(),
                    cond: cond_d.lossy_f64(),
                    limit: cfg.cond_max.lossy_f64(),
                });
            }
        }
        let a_inv = pinv(blocks.a11(), cfg);
        let d_inv = pinv(blocks.a22(), cfg);
        let u = blocks.a11() - blocks.a12() * &d_inv * blocks.a21();
        let v = blocks.a22() - blocks.a21() * &a_inv * blocks.a12();
        Ok(SchurCouplingWitness { blocks, a_inv, d_inv, u, v, cond_a, cond_d })
    }

    pub fn blocks(&self) -> &Block2x2<T> {
        &self.blocks
    }

    pub fn s(&self) -> Matrix<T> {
        self.blocks.flatten()
    }

    pub fn a(&self) -> &Matrix<T> {
        self.blocks.a11()
    }

    pub fn b(&self) -> &Matrix<T> {
        self.blocks.a12()
    }

    pub fn c(&self) -> &Matrix<T> {
        self.blocks.a21()
    }

    pub fn d(&self) -> &Matrix<T> {
        self.blocks.a22()
    }

    pub fn a_inv(&self) -> &Matrix<T> {
        &self.a_inv
    }

    pub fn d_inv(&self) -> &Matrix<T> {
        &self.d_inv
    }

    /// The operator this witness couples on the `X` side: `A - B D^-1 C`.
    pub fn coupled_u(&self) -> &Matrix<T> {
        &self.u
    }

    /// The operator this witness couples on the `Y` side: `D - C A^-1 B`.
    pub fn coupled_v(&self) -> &Matrix<T> {
        &self.v
    }

    pub fn cond_a(&self) -> T {
        self.cond_a
    }

    pub fn cond_d(&self) -> T {
        self.cond_d
    }

    pub fn dim_x(&self) -> usize {
        self.blocks.a11().rows()
    }

    pub fn dim_y(&self) -> usize {
        self.blocks.a22().rows()
    }

    /// The witness `[[D, C], [B, A]]` coupling the pair in the other order.
    pub fn flip(&self) -> Self {
        let blocks = Block2x2::assemble(
            self.blocks.a22().clone(),
            self.blocks.a21().clone(),
            self.blocks.a12().clone(),
            self.blocks.a11().clone(),
        )
        .expect("transposed block layout is always consistent");
        SchurCouplingWitness {
            blocks,
            a_inv: self.d_inv.clone(),
            d_inv: self.a_inv.clone(),
            u: self.v.clone(),
            v: self.u.clone(),
            cond_a: self.cond_d,
            cond_d: self.cond_a,
        }
    }
}

/// An equivalence-after-extension witness:
/// `diag(U, I) = E * diag(V, I) * F` with invertible
/// `E: Y (+) Y0 -> X (+) X0` and `F: X (+) X0 -> Y (+) Y0`.
///
/// The certified pair `(U, V)` is cached so that witnesses are
/// self-contained; serialized bundles round-trip it alongside the factors.
#[derive(Debug, Clone)]
pub struct EaeWitness<T> {
    e: Matrix<T>,
    f: Matrix<T>,
    einv: Matrix<T>,
    finv: Matrix<T>,
    u: Matrix<T>,
    v: Matrix<T>,
    dim_x0: usize,
    dim_y0: usize,
}

impl<T: Scalar> EaeWitness<T> {
    /// Validating constructor: checks shapes and that the cached inverses
    /// invert `E` and `F` within `residual_tol` (relative to the factor
    /// norms). The defining identity itself is the verifier's business.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        e: Matrix<T>,
        f: Matrix<T>,
        einv: Matrix<T>,
        finv: Matrix<T>,
        u: Matrix<T>,
        v: Matrix<T>,
        dim_x0: usize,
        dim_y0: usize,
        cfg: &ToleranceConfig<T>,
    ) -> Result<Self, CouplingError> {
        let w = Self::assemble_unverified(e, f, einv, finv, u, v, dim_x0, dim_y0)?;
        for (label, m, minv) in [("E", &w.e, &w.einv), ("F", &w.f, &w.finv)] {
            let k = m.rows();
            let resid = op_norm(&(m * minv - Matrix::identity(k)));
            let scale = Float::max(op_norm(m) * op_norm(minv), T::one());
            if resid > cfg.residual_tol * scale {
                return Err(CouplingError::WitnessRejected(format!(
                    "cached inverse of {label} misses identity by relative {:e}",
                    (resid / scale).lossy_f64()
                )));
            }
        }
        Ok(w)
    }

    /// Shape-checked rebuild without numeric checks, for deserialized data.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble_unverified(
        e: Matrix<T>,
        f: Matrix<T>,
        einv: Matrix<T>,
        finv: Matrix<T>,
        u: Matrix<T>,
        v: Matrix<T>,
        dim_x0: usize,
        dim_y0: usize,
    ) -> Result<Self, CouplingError> {
        require(u.is_square(), || format!("U must be square, got {}x{}", u.rows(), u.cols()))?;
        require(v.is_square(), || format!("V must be square, got {}x{}", v.rows(), v.cols()))?;
        let (n, m) = (u.rows(), v.rows());
        require(n + dim_x0 == m + dim_y0, || {
            format!("extended spaces disagree: {n}+{dim_x0} vs {m}+{dim_y0}")
        })?;
        let k = n + dim_x0;
        require(e.shape() == (k, k), || {
            format!("E must be {k}x{k}, got {}x{}", e.rows(), e.cols())
        })?;
        require(f.shape() == (k, k), || {
            format!("F must be {k}x{k}, got {}x{}", f.rows(), f.cols())
        })?;
        require(einv.shape() == (k, k), || {
            format!("Einv must be {k}x{k}, got {}x{}", einv.rows(), einv.cols())
        })?;
        require(finv.shape() == (k, k), || {
            format!("Finv must be {k}x{k}, got {}x{}", finv.rows(), finv.cols())
        })?;
        Ok(EaeWitness { e, f, einv, finv, u, v, dim_x0, dim_y0 })
    }

    pub fn e(&self) -> &Matrix<T> {
        &self.e
    }

    pub fn f(&self) -> &Matrix<T> {
        &self.f
    }

    pub fn einv(&self) -> &Matrix<T> {
        &self.einv
    }

    pub fn finv(&self) -> &Matrix<T> {
        &self.finv
    }

    pub fn u(&self) -> &Matrix<T> {
        &self.u
    }

    pub fn v(&self) -> &Matrix<T> {
        &self.v
    }

    pub fn dim_x(&self) -> usize {
        self.u.rows()
    }

    pub fn dim_y(&self) -> usize {
        self.v.rows()
    }

    pub fn dim_x0(&self) -> usize {
        self.dim_x0
    }

    pub fn dim_y0(&self) -> usize {
        self.dim_y0
    }

    /// `E` split along `X (+) X0` rows and `Y (+) Y0` columns.
    pub fn e_blocks(&self) -> Block2x2<T> {
        Block2x2::extract(&self.e, (self.dim_x(), self.dim_x0), (self.dim_y(), self.dim_y0))
            .expect("shapes validated at construction")
    }

    /// `F` split along `Y (+) Y0` rows and `X (+) X0` columns.
    pub fn f_blocks(&self) -> Block2x2<T> {
        Block2x2::extract(&self.f, (self.dim_y(), self.dim_y0), (self.dim_x(), self.dim_x0))
            .expect("shapes validated at construction")
    }

    /// `E^-1` split along `Y (+) Y0` rows and `X (+) X0` columns.
    pub fn einv_blocks(&self) -> Block2x2<T> {
        Block2x2::extract(&self.einv, (self.dim_y(), self.dim_y0), (self.dim_x(), self.dim_x0))
            .expect("shapes validated at construction")
    }

    /// `F^-1` split along `X (+) X0` rows and `Y (+) Y0` columns.
    pub fn finv_blocks(&self) -> Block2x2<T> {
        Block2x2::extract(&self.finv, (self.dim_x(), self.dim_x0), (self.dim_y(), self.dim_y0))
            .expect("shapes validated at construction")
    }

    /// `diag(U, I)` on the extended `X` side.
    pub fn extended_u(&self) -> Matrix<T> {
        Matrix::block_diag(&[&self.u, &Matrix::identity(self.dim_x0)])
    }

    /// `diag(V, I)` on the extended `Y` side.
    pub fn extended_v(&self) -> Matrix<T> {
        Matrix::block_diag(&[&self.v, &Matrix::identity(self.dim_y0)])
    }
}

/// An EAE witness in special form: `X0 = Y`, `Y0 = X`, the `F12` and
/// `Finv12` corners are bit-exact identities, and the `E12` / `Einv12`
/// corners carry `U` and `V`. This is the shape produced by the direct
/// constructions and required by the invertibility upgrade.
#[derive(Debug, Clone)]
pub struct SpecialFormEae<T>(EaeWitness<T>);

impl<T: Scalar> SpecialFormEae<T> {
    pub fn try_new(w: EaeWitness<T>, cfg: &ToleranceConfig<T>) -> Result<Self, CouplingError> {
        let (n, m) = (w.dim_x(), w.dim_y());
        require(w.dim_x0() == m && w.dim_y0() == n, || {
            format!(
                "special form needs extensions (X0, Y0) = (Y, X); got ({}, {}) for dims ({n}, {m})",
                w.dim_x0(),
                w.dim_y0()
            )
        })?;
        let exact_identity = |block: &Matrix<T>| -> bool {
            let k = block.rows();
            block.is_square()
                && (0..k).all(|i| (0..k).all(|j| block[(i, j)] == if i == j { T::one() } else { T::zero() }))
        };
        if !exact_identity(&w.f_blocks().a12().clone()) {
            return Err(CouplingError::WitnessRejected(
                "special form requires the F12 corner to be a bit-exact identity".into(),
            ));
        }
        if !exact_identity(&w.finv_blocks().a12().clone()) {
            return Err(CouplingError::WitnessRejected(
                "special form requires the Finv12 corner to be a bit-exact identity".into(),
            ));
        }
        let scale = Float::max(Float::max(op_norm(w.u()), op_norm(w.v())), T::one());
        let e12_gap = op_norm(&(w.e_blocks().a12() - w.u()));
        let einv12_gap = op_norm(&(w.einv_blocks().a12() - w.v()));
        if e12_gap > cfg.residual_tol * scale || einv12_gap > cfg.residual_tol * scale {
            return Err(CouplingError::WitnessRejected(format!(
                "special form corners miss (U, V): gaps {:e} and {:e}",
                e12_gap.lossy_f64(),
                einv12_gap.lossy_f64()
            )));
        }
        Ok(SpecialFormEae(w))
    }

    pub fn as_eae(&self) -> &EaeWitness<T> {
        &self.0
    }

    pub fn into_inner(self) -> EaeWitness<T> {
        self.0
    }
}

impl<T> Deref for SpecialFormEae<T> {
    type Target = EaeWitness<T>;

    fn deref(&self) -> &EaeWitness<T> {
        &self.0
    }
}

/// A matricial-coupling witness: invertible `u_hat` on `X (+) Y` with its
/// inverse partition `v_hat`, so that `U = u_hat[1,1]` and `V = v_hat[2,2]`.
#[derive(Debug, Clone)]
pub struct McWitness<T> {
    u_hat: Block2x2<T>,
    v_hat: Block2x2<T>,
}

impl<T: Scalar> McWitness<T> {
    /// Gate `u_hat` through the invertibility check and invert numerically.
    pub fn new(u_hat: Matrix<T>, dim_x: usize, cfg: &ToleranceConfig<T>) -> Result<Self, CouplingError> {
        let (ok, cond) = is_invertible(&u_hat, cfg);
        if !ok {
            return Err(CouplingError::NotInvertible {
                block: "u_hat".into(),
                cond: cond.lossy_f64(),
                limit: cfg.cond_max.lossy_f64(),
            });
        }
        let v_hat = pinv(&u_hat, cfg);
        Self::assemble_unverified(u_hat, v_hat, dim_x)
    }

    /// Accept a precomputed inverse after checking the product residual.
    pub fn from_pair(
        u_hat: Matrix<T>,
        v_hat: Matrix<T>,
        dim_x: usize,
        cfg: &ToleranceConfig<T>,
    ) -> Result<Self, CouplingError> {
        let k = u_hat.rows();
        let resid = op_norm(&(&u_hat * &v_hat - Matrix::identity(k)));
        let scale = Float::max(op_norm(&u_hat) * op_norm(&v_hat), T::one());
        if resid > cfg.residual_tol * scale {
            return Err(CouplingError::WitnessRejected(format!(
                "u_hat and v_hat are not an inverse pair: relative residual {:e}",
                (resid / scale).lossy_f64()
            )));
        }
        Self::assemble_unverified(u_hat, v_hat, dim_x)
    }

    /// Shape-checked rebuild without numeric checks, for deserialized data.
    pub fn assemble_unverified(
        u_hat: Matrix<T>,
        v_hat: Matrix<T>,
        dim_x: usize,
    ) -> Result<Self, CouplingError> {
        require(u_hat.is_square(), || {
            format!("u_hat must be square, got {}x{}", u_hat.rows(), u_hat.cols())
        })?;
        require(u_hat.shape() == v_hat.shape(), || {
            format!(
                "u_hat is {}x{} but v_hat is {}x{}",
                u_hat.rows(),
                u_hat.cols(),
                v_hat.rows(),
                v_hat.cols()
            )
        })?;
        require(dim_x <= u_hat.rows(), || {
            format!("split {} exceeds matrix size {}", dim_x, u_hat.rows())
        })?;
        let dim_y = u_hat.rows() - dim_x;
        let split = ((dim_x, dim_y), (dim_x, dim_y));
        Ok(McWitness {
            u_hat: Block2x2::extract(&u_hat, split.0, split.1)?,
            v_hat: Block2x2::extract(&v_hat, split.0, split.1)?,
        })
    }

    pub fn u_hat(&self) -> &Block2x2<T> {
        &self.u_hat
    }

    pub fn v_hat(&self) -> &Block2x2<T> {
        &self.v_hat
    }

    pub fn u_hat_matrix(&self) -> Matrix<T> {
        self.u_hat.flatten()
    }

    pub fn v_hat_matrix(&self) -> Matrix<T> {
        self.v_hat.flatten()
    }

    /// The coupled operator on `X`: the upper-left corner of `u_hat`.
    pub fn u(&self) -> &Matrix<T> {
        self.u_hat.a11()
    }

    /// The coupled operator on `Y`: the lower-right corner of `v_hat`.
    pub fn v(&self) -> &Matrix<T> {
        self.v_hat.a22()
    }

    pub fn dim_x(&self) -> usize {
        self.u_hat.a11().rows()
    }

    pub fn dim_y(&self) -> usize {
        self.u_hat.a22().rows()
    }
}

/// Strong-coupling flags for an MC witness: the `u_hat` lower-right and
/// `v_hat` upper-left corners must be invertible.
#[derive(Debug, Clone, Copy)]
pub struct McStrongFlags<T> {
    pub u_hat_22: InvFlag<T>,
    pub v_hat_11: InvFlag<T>,
}

impl<T> McStrongFlags<T> {
    pub fn all(&self) -> bool {
        self.u_hat_22.invertible && self.v_hat_11.invertible
    }
}

pub fn mc_strong_flags<T: Scalar>(w: &McWitness<T>, cfg: &ToleranceConfig<T>) -> McStrongFlags<T> {
    McStrongFlags {
        u_hat_22: InvFlag::of(w.u_hat().a22(), cfg),
        v_hat_11: InvFlag::of(w.v_hat().a11(), cfg),
    }
}

/// Strong-coupling flags for an EAE witness: the `E21` and `F12` corners
/// must be invertible.
#[derive(Debug, Clone, Copy)]
pub struct EaeStrongFlags<T> {
    pub e21: InvFlag<T>,
    pub f12: InvFlag<T>,
}

impl<T> EaeStrongFlags<T> {
    pub fn all(&self) -> bool {
        self.e21.invertible && self.f12.invertible
    }
}

pub fn eae_strong_flags<T: Scalar>(w: &EaeWitness<T>, cfg: &ToleranceConfig<T>) -> EaeStrongFlags<T> {
    EaeStrongFlags {
        e21: InvFlag::of(w.e_blocks().a21(), cfg),
        f12: InvFlag::of(w.f_blocks().a12(), cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ToleranceConfig<f64> {
        ToleranceConfig::default()
    }

    fn m2(entries: [[f64; 2]; 2]) -> Matrix<f64> {
        Matrix::from_rows(&[&entries[0], &entries[1]]).unwrap()
    }

    #[test]
    fn schur_witness_caches_complements() {
        let w = SchurCouplingWitness::new(&m2([[2.0, 1.0], [1.0, 1.0]]), 1, &cfg()).unwrap();
        assert!((w.coupled_u()[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((w.coupled_v()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((w.a_inv()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((w.cond_a() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schur_witness_rejects_singular_diagonal() {
        let err = SchurCouplingWitness::new(&m2([[2.0, 1.0], [1.0, 0.0]]), 1, &cfg()).unwrap_err();
        assert!(matches!(err, CouplingError::NotInvertible { ref block, .. } if block == "D"));
    }

    #[test]
    fn flip_swaps_the_coupled_pair() {
        let w = SchurCouplingWitness::new(&m2([[2.0, 1.0], [1.0, 1.0]]), 1, &cfg()).unwrap();
        let g = w.flip();
        assert_eq!(g.a(), w.d());
        assert_eq!(g.coupled_u(), w.coupled_v());
        assert_eq!(g.coupled_v(), w.coupled_u());
    }

    #[test]
    fn eae_witness_rejects_fake_inverse() {
        let id = Matrix::<f64>::identity(2);
        let err = EaeWitness::new(
            id.clone(),
            id.clone(),
            id.scale(2.0),
            id.clone(),
            Matrix::identity(1),
            Matrix::identity(1),
            1,
            1,
            &cfg(),
        )
        .unwrap_err();
        assert!(matches!(err, CouplingError::WitnessRejected(_)));
    }

    #[test]
    fn eae_witness_rejects_mismatched_extensions() {
        let id = Matrix::<f64>::identity(3);
        let err = EaeWitness::new(
            id.clone(),
            id.clone(),
            id.clone(),
            id.clone(),
            Matrix::identity(1),
            Matrix::identity(1),
            2,
            1,
            &cfg(),
        )
        .unwrap_err();
        assert!(matches!(err, CouplingError::DimensionMismatch(_)));
    }

    #[test]
    fn mc_witness_inverts_and_extracts_corners() {
        let w = McWitness::new(m2([[0.0, 1.0], [-1.0, 1.0]]), 1, &cfg()).unwrap();
        assert_eq!(w.u()[(0, 0)], 0.0);
        assert!((w.v()[(0, 0)]).abs() < 1e-15);
        assert!((w.v_hat().a11()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((w.v_hat().a12()[(0, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn mc_from_pair_checks_the_product() {
        let u_hat = m2([[0.0, 1.0], [-1.0, 1.0]]);
        let good = m2([[1.0, -1.0], [1.0, 0.0]]);
        assert!(McWitness::from_pair(u_hat.clone(), good, 1, &cfg()).is_ok());
        let bad = m2([[1.0, -1.0], [1.0, 0.5]]);
        let err = McWitness::from_pair(u_hat, bad, 1, &cfg()).unwrap_err();
        assert!(matches!(err, CouplingError::WitnessRejected(_)));
    }

    #[test]
    fn strong_flags_read_the_corners() {
        let w = McWitness::new(m2([[0.0, 1.0], [-1.0, 1.0]]), 1, &cfg()).unwrap();
        let flags = mc_strong_flags(&w, &cfg());
        assert!(flags.all());

        // Degenerate split: the 0x0 corner counts as invertible.
        let w = McWitness::new(Matrix::identity(2), 2, &cfg()).unwrap();
        assert!(mc_strong_flags(&w, &cfg()).u_hat_22.invertible);

        // The swap matrix has zero diagonal corners: coupled but not strong.
        let w = McWitness::new(m2([[0.0, 1.0], [1.0, 0.0]]), 1, &cfg()).unwrap();
        let flags = mc_strong_flags(&w, &cfg());
        assert!(!flags.u_hat_22.invertible);
        assert!(!flags.all());
    }

    #[test]
    fn special_form_accepts_the_canonical_shape_and_rejects_others() {
        // Scalar special form for U = 0, V = 0.
        let e = m2([[1.0, 0.0], [1.0, -1.0]]);
        let f = m2([[1.0, 1.0], [0.0, -1.0]]);
        let w = EaeWitness::new(
            e.clone(),
            f.clone(),
            e.clone(),
            f.clone(),
            Matrix::from_rows(&[&[0.0]]).unwrap(),
            Matrix::from_rows(&[&[0.0]]).unwrap(),
            1,
            1,
            &cfg(),
        )
        .unwrap();
        assert!(SpecialFormEae::try_new(w.clone(), &cfg()).is_ok());

        // Perturbing the F12 identity corner by one ulp-scale step breaks it.
        let mut f_bad = f.clone();
        f_bad.set(0, 1, 1.0 + 1e-13);
        let w_bad = EaeWitness::new(
            e.clone(),
            f_bad,
            e,
            f,
            Matrix::from_rows(&[&[0.0]]).unwrap(),
            Matrix::from_rows(&[&[0.0]]).unwrap(),
            1,
            1,
            &cfg(),
        )
        .unwrap();
        assert!(matches!(
            SpecialFormEae::try_new(w_bad, &cfg()),
            Err(CouplingError::WitnessRejected(_))
        ));
    }
}
