//! Normal forms on equivalence-after-extension witnesses: renormalizing an
//! arbitrary witness to the special form, the block-triangular gauge action
//! that preserves it, and the upgrade that makes the lower-left corner of
//! `E` invertible so that the strong extraction applies.

use num_traits::Float;

use crate::couplings::convert::{rejecting, seae_to_sc};
use crate::couplings::{
    eae_strong_flags, EaeStrongFlags, EaeWitness, SchurCouplingWitness, SpecialFormEae,
};
use crate::diagnostics::floored_svd;
use crate::error::CouplingError;
use crate::matcore::{is_invertible, op_norm, Matrix, ToleranceConfig};
use crate::scalar::Scalar;

use super::convert::reconcile_inverse;
use super::require;

/// Rewrite any witness into the special form with extension spaces `Y` and
/// `X` and the coupled operators sitting in the upper-right corners.
///
/// The new factors are assembled from blocks of the old ones:
/// `E~ = [[-E11, U], [F12 E21, F11]]` and `F~ = [[-F11, I], [Finv12 Einv21 U, Finv11]]`,
/// with closed-form inverses read off the same way and cross-checked against
/// direct inversion.
pub fn normalize_eae<T: Scalar>(
    w: &EaeWitness<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<SpecialFormEae<T>, CouplingError> {
    let (n, m) = (w.dim_x(), w.dim_y());
    let (u, v) = (w.u(), w.v());
    let eb = w.e_blocks();
    let fb = w.f_blocks();
    let einvb = w.einv_blocks();
    let finvb = w.finv_blocks();

    let coupling_e21 = finvb.a12() * einvb.a21();

    let e_new = Matrix::from_block_grid(&[
        &[&-eb.a11(), u],
        &[&(fb.a12() * eb.a21()), fb.a11()],
    ])
    .expect("blocks conform by construction");
    let f_new = Matrix::from_block_grid(&[
        &[&-fb.a11(), &Matrix::identity(m)],
        &[&(&coupling_e21 * u), finvb.a11()],
    ])
    .expect("blocks conform by construction");
    let einv_closed = Matrix::from_block_grid(&[
        &[&-einvb.a11(), v],
        &[&coupling_e21, finvb.a11()],
    ])
    .expect("blocks conform by construction");
    let finv_closed = Matrix::from_block_grid(&[
        &[&-finvb.a11(), &Matrix::identity(n)],
        &[&(fb.a12() * eb.a21() * v), fb.a11()],
    ])
    .expect("blocks conform by construction");

    let einv = reconcile_inverse("normalized E", &e_new, einv_closed, cfg).map_err(rejecting)?;
    let finv = reconcile_inverse("normalized F", &f_new, finv_closed, cfg).map_err(rejecting)?;

    let w = EaeWitness::new(e_new, f_new, einv, finv, u.clone(), v.clone(), m, n, cfg)?;
    SpecialFormEae::try_new(w, cfg)
}

/// Act on a witness by the block-triangular gauge pair
/// `L = [[I, 0], [Xg, I]]` on `X + X0` and `R = [[I, 0], [Yg, I]]` on
/// `Y + Y0`, sending `E` to `L E R` and `F` to a matching compensator that
/// keeps the defining identity intact. The four upper-right corner blocks
/// are untouched, so a special-form input stays in special form.
pub fn gauge_eae<T: Scalar>(
    w: &EaeWitness<T>,
    xg: &Matrix<T>,
    yg: &Matrix<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<EaeWitness<T>, CouplingError> {
    let (n, m) = (w.dim_x(), w.dim_y());
    let (x0, y0) = (w.dim_x0(), w.dim_y0());
    require(xg.shape() == (x0, n), || {
        format!("Xg must be {x0}x{n}, got {}x{}", xg.rows(), xg.cols())
    })?;
    require(yg.shape() == (y0, m), || {
        format!("Yg must be {y0}x{m}, got {}x{}", yg.rows(), yg.cols())
    })?;

    let (u, v) = (w.u(), w.v());
    let eb = w.e_blocks();
    let fb = w.f_blocks();
    let einvb = w.einv_blocks();
    let finvb = w.finv_blocks();
    let xg_u = xg * u;
    let yg_v = yg * v;

    let e11 = eb.a11() + eb.a12() * yg;
    let e21 = xg * &e11 + eb.a21() + eb.a22() * yg;
    let e22 = xg * eb.a12() + eb.a22();
    let e_new = Matrix::from_block_grid(&[&[&e11, eb.a12()], &[&e21, &e22]])
        .expect("blocks conform by construction");

    let einv11 = einvb.a11() - einvb.a12() * xg;
    let einv21 = -(yg * &einv11) + einvb.a21() - einvb.a22() * xg;
    let einv22 = -(yg * einvb.a12()) + einvb.a22();
    let einv_new = Matrix::from_block_grid(&[&[&einv11, einvb.a12()], &[&einv21, &einv22]])
        .expect("blocks conform by construction");

    let f11 = fb.a11() - fb.a12() * &xg_u;
    let f21 = -(&yg_v * &f11) + fb.a21() - fb.a22() * &xg_u;
    let f22 = -(&yg_v * fb.a12()) + fb.a22();
    let f_new = Matrix::from_block_grid(&[&[&f11, fb.a12()], &[&f21, &f22]])
        .expect("blocks conform by construction");

    let finv11 = finvb.a11() + finvb.a12() * &yg_v;
    let finv21 = &xg_u * &finv11 + finvb.a21() + finvb.a22() * &yg_v;
    let finv22 = &xg_u * finvb.a12() + finvb.a22();
    let finv_new = Matrix::from_block_grid(&[&[&finv11, finvb.a12()], &[&finv21, &finv22]])
        .expect("blocks conform by construction");

    EaeWitness::new(e_new, f_new, einv_new, finv_new, u.clone(), v.clone(), x0, y0, cfg)
}

/// Result of [`upgrade_to_strong`].
#[derive(Debug, Clone)]
pub struct UpgradeOutcome<T: Scalar> {
    /// The gauged witness, still in special form, with `E21` invertible.
    pub witness: SpecialFormEae<T>,
    pub flags: EaeStrongFlags<T>,
    /// The invertible approximation of `V` used by the accepted gauge.
    pub v_invertible: Matrix<T>,
    /// The floor distance at which the approximation was accepted.
    pub delta: T,
    /// How many times the initial floor was halved before acceptance.
    pub halvings: u32,
}

/// Gauge a special-form witness until the lower-left corner of `E` is
/// invertible.
///
/// With `Vi` an invertible approximation of `V` at distance `delta`, the
/// gauge `Yg = Einv22 Vi^-1` turns `E21` into `(E21 V + E22 Einv22) Vi^-1`
/// plus a perturbation of order `delta`; the parenthesis is the (2,2) block
/// of `E Einv` restricted through the special form, hence close to the
/// identity. The loop shrinks `delta` until the corner passes the
/// invertibility gate, halving at most `cfg.max_halvings` times.
pub fn upgrade_to_strong<T: Scalar>(
    w: &SpecialFormEae<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<UpgradeOutcome<T>, CouplingError> {
    let (n, m) = (w.dim_x(), w.dim_y());
    let v = w.v();
    let eb = w.e_blocks();
    let einv22 = w.einv_blocks().a22().clone();
    let (e21, e22) = (eb.a21(), eb.a22());

    let anchor = e21 * v + e22 * &einv22;
    let drift = op_norm(&(&anchor - Matrix::identity(m)));
    let scale = [
        op_norm(e21) * op_norm(v),
        op_norm(e22) * op_norm(&einv22),
        T::one(),
    ]
    .into_iter()
    .fold(T::zero(), Float::max);
    if drift > cfg.residual_tol * scale {
        return Err(CouplingError::PreconditionViolated(format!(
            "E21 V + E22 Einv22 misses the identity by {:e} (scale {:e}); \
             the witness does not satisfy the special-form inverse relations",
            drift.lossy_f64(),
            scale.lossy_f64()
        )));
    }

    let delta0 = cfg.delta_init * Float::max(op_norm(v), T::one());
    let mut last_delta = delta0;
    let mut last_cond = T::infinity();
    for halvings in 0..=cfg.max_halvings {
        let delta = delta0 * Float::powi(T::of(0.5), halvings as i32);
        last_delta = delta;
        let (vi, vi_inv) = floored_svd(v, delta);
        let corner = e21 * &vi + e22 * &einv22;
        let (corner_ok, corner_cond) = is_invertible(&corner, cfg);
        last_cond = corner_cond;
        if !corner_ok {
            continue;
        }

        let yg = &einv22 * &vi_inv;
        let xg = Matrix::zeros(m, n);
        let gauged = gauge_eae(w.as_eae(), &xg, &yg, cfg)?;
        let special = SpecialFormEae::try_new(gauged, cfg)?;
        let flags = eae_strong_flags(&special, cfg);
        if flags.all() {
            return Ok(UpgradeOutcome {
                witness: special,
                flags,
                v_invertible: vi,
                delta,
                halvings,
            });
        }
    }
    Err(CouplingError::UpgradeFailed {
        halvings: cfg.max_halvings,
        delta: last_delta.lossy_f64(),
        cond_n: last_cond.lossy_f64(),
    })
}

/// Full pipeline from an arbitrary witness to a Schur coupling witness:
/// normalize to special form, upgrade until strong, then extract.
pub fn eae_to_sc<T: Scalar>(
    w: &EaeWitness<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<SchurCouplingWitness<T>, CouplingError> {
    let special = normalize_eae(w, cfg)?;
    let upgraded = upgrade_to_strong(&special, cfg)?;
    seae_to_sc(upgraded.witness.as_eae(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::convert::sc_to_eae;
    use crate::matcore::Block2x2;

    fn cfg() -> ToleranceConfig<f64> {
        ToleranceConfig::default()
    }

    fn sc_2112() -> SchurCouplingWitness<f64> {
        let s = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]]).unwrap();
        SchurCouplingWitness::new(&s, 1, &cfg()).unwrap()
    }

    #[test]
    fn normalize_scalar_oracle() {
        let w = sc_to_eae(&sc_2112(), &cfg()).unwrap();
        let s = normalize_eae(&w, &cfg()).unwrap();
        let expect_e = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, -1.0]]).unwrap();
        let expect_f = Matrix::from_rows(&[&[1.0, 1.0], &[0.5, -0.5]]).unwrap();
        let expect_einv = Matrix::from_rows(&[&[0.5, 0.5], &[0.5, -0.5]]).unwrap();
        let expect_finv = Matrix::from_rows(&[&[0.5, 1.0], &[0.5, -1.0]]).unwrap();
        assert!((s.e() - &expect_e).max_abs() < 1e-14);
        assert!((s.f() - &expect_f).max_abs() < 1e-14);
        assert!((s.einv() - &expect_einv).max_abs() < 1e-14);
        assert!((s.finv() - &expect_finv).max_abs() < 1e-14);
    }

    #[test]
    fn normalize_keeps_the_defining_identity() {
        let w = sc_to_eae(&sc_2112(), &cfg()).unwrap();
        let s = normalize_eae(&w, &cfg()).unwrap();
        let lhs = s.extended_u();
        let rhs = s.e() * s.extended_v() * s.f();
        assert!((&lhs - &rhs).max_abs() < 1e-14);
    }

    #[test]
    fn normalize_identity_witness_gives_permutations() {
        let w = sc_to_eae(
            &SchurCouplingWitness::new(&Matrix::identity(2), 1, &cfg()).unwrap(),
            &cfg(),
        )
        .unwrap();
        let s = normalize_eae(&w, &cfg()).unwrap();
        let swap = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!((s.e() - &swap).max_abs() == 0.0);
        assert!((s.f() - &swap).max_abs() == 0.0);
    }

    #[test]
    fn zero_gauge_is_the_identity_map() {
        let w = sc_to_eae(&sc_2112(), &cfg()).unwrap();
        let g = gauge_eae(&w, &Matrix::zeros(1, 1), &Matrix::zeros(1, 1), &cfg()).unwrap();
        assert!((g.e() - w.e()).max_abs() == 0.0);
        assert!((g.f() - w.f()).max_abs() == 0.0);
        assert!((g.einv() - w.einv()).max_abs() == 0.0);
        assert!((g.finv() - w.finv()).max_abs() == 0.0);
    }

    #[test]
    fn gauge_preserves_identity_and_corners() {
        let w = sc_to_eae(&sc_2112(), &cfg()).unwrap();
        let special = normalize_eae(&w, &cfg()).unwrap();
        let xg = Matrix::from_rows(&[&[3.0]]).unwrap();
        let yg = Matrix::from_rows(&[&[-2.0]]).unwrap();
        let g = gauge_eae(special.as_eae(), &xg, &yg, &cfg()).unwrap();

        let lhs = g.extended_u();
        let rhs = g.e() * g.extended_v() * g.f();
        assert!((&lhs - &rhs).max_abs() < 1e-12);
        assert!((g.e() * g.einv() - Matrix::identity(2)).max_abs() < 1e-12);
        assert!((g.f() * g.finv() - Matrix::identity(2)).max_abs() < 1e-12);

        // Upper-right blocks ride through untouched.
        let eb = g.e_blocks();
        assert_eq!(eb.a12()[(0, 0)], special.u()[(0, 0)]);
        let regauged = SpecialFormEae::try_new(g, &cfg()).unwrap();
        assert_eq!(regauged.dim_x0(), 1);
    }

    #[test]
    fn gauge_rejects_misshapen_blocks() {
        let w = sc_to_eae(&sc_2112(), &cfg()).unwrap();
        let bad = gauge_eae(&w, &Matrix::zeros(2, 1), &Matrix::zeros(1, 1), &cfg());
        assert!(matches!(bad, Err(CouplingError::DimensionMismatch(_))));
    }

    #[test]
    fn upgrade_with_invertible_v_is_immediate() {
        let w = sc_to_eae(&sc_2112(), &cfg()).unwrap();
        let special = normalize_eae(&w, &cfg()).unwrap();
        let up = upgrade_to_strong(&special, &cfg()).unwrap();
        assert_eq!(up.halvings, 0);
        assert!(up.flags.all());
        // V = 1/2 is already invertible, so the floor does not move it.
        assert!((up.v_invertible[(0, 0)] - 0.5).abs() < 1e-15);
        let e21 = up.witness.e_blocks().a21().clone();
        // Gauged corner approximates V^-1 = 2.
        assert!((e21[(0, 0)] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn upgrade_scalar_zero_pair() {
        // U = V = 0 over scalars, the minimal genuinely singular case.
        let e = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, -1.0]]).unwrap();
        let f = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, -1.0]]).unwrap();
        let w = EaeWitness::new(
            e.clone(),
            f.clone(),
            e.clone(),
            f.clone(),
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
            1,
            1,
            &cfg(),
        )
        .unwrap();
        let special = normalize_eae(&w, &cfg()).unwrap();
        let up = upgrade_to_strong(&special, &cfg()).unwrap();
        assert_eq!(up.halvings, 0);
        assert!((up.delta - 1e-3).abs() < 1e-18);
        assert!((up.v_invertible[(0, 0)].abs() - 1e-3).abs() < 1e-18);
        assert!(up.flags.all());

        let lhs = up.witness.extended_u();
        let rhs = up.witness.e() * up.witness.extended_v() * up.witness.f();
        assert!((&lhs - &rhs).max_abs() < 1e-10);
    }

    #[test]
    fn upgrade_rejects_broken_inverse_relations() {
        // The corner blocks satisfy the special-form shape checks but the
        // stored inverse of E is wrong, which only assemble_unverified lets
        // through; the upgrade precondition must catch it.
        let e = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, -1.0]]).unwrap();
        let einv = Matrix::from_rows(&[&[1.0, 0.0], &[3.0, -2.0]]).unwrap();
        let f = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, -1.0]]).unwrap();
        let w = EaeWitness::assemble_unverified(
            e,
            f.clone(),
            einv,
            f.clone(),
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
            1,
            1,
        )
        .unwrap();
        let special = SpecialFormEae::try_new(w, &cfg()).unwrap();
        let out = upgrade_to_strong(&special, &cfg());
        assert!(matches!(out, Err(CouplingError::PreconditionViolated(_))));
    }

    #[test]
    fn eae_to_sc_round_trips_the_schur_witness() {
        let sc = sc_2112();
        let w = sc_to_eae(&sc, &cfg()).unwrap();
        let back = eae_to_sc(&w, &cfg()).unwrap();
        assert!((back.coupled_u() - sc.coupled_u()).max_abs() < 1e-9);
        assert!((back.coupled_v() - sc.coupled_v()).max_abs() < 1e-9);
    }

    #[test]
    fn eae_to_sc_handles_the_zero_pair() {
        let e = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, -1.0]]).unwrap();
        let f = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, -1.0]]).unwrap();
        let w = EaeWitness::new(
            e.clone(),
            f.clone(),
            e.clone(),
            f.clone(),
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
            1,
            1,
            &cfg(),
        )
        .unwrap();
        let sc = eae_to_sc(&w, &cfg()).unwrap();
        assert!(sc.coupled_u().max_abs() < 1e-9);
        assert!(sc.coupled_v().max_abs() < 1e-9);
        let blocks = Block2x2::extract(&sc.s(), (1, 1), (1, 1)).unwrap();
        assert!(blocks.a11().max_abs() > 0.0);
    }
}
