//! Constructive conversions between the three witness kinds.
//!
//! Every conversion assembles both the forward factors and their closed-form
//! inverses, then cross-checks each closed form through its identity
//! residual. A closed form that fails the gate is compared against direct
//! numerical inversion, with a warning when the numerical inverse wins,
//! since the closed forms are algebraically exact and losing points at an
//! assembly inconsistency.

use num_traits::Float;

use crate::couplings::{EaeWitness, McWitness, SchurCouplingWitness};
use crate::error::CouplingError;
use crate::matcore::{inverse, op_norm, pinv, Matrix, ToleranceConfig};
use crate::scalar::Scalar;

/// Closed-form inverse of `m`, cross-checked through its identity residual.
///
/// A closed form within `residual_tol` is kept as is; this preserves blocks
/// that are identities or copies of `U` and `V` bit-exactly. Only a closed
/// form that fails the gate is measured against direct numerical inversion,
/// and the more accurate candidate wins.
pub(crate) fn reconcile_inverse<T: Scalar>(
    label: &str,
    m: &Matrix<T>,
    closed: Matrix<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<Matrix<T>, CouplingError> {
    let id = Matrix::identity(m.rows());
    let resid_closed = op_norm(&(m * &closed - &id));
    let scale = Float::max(op_norm(m) * op_norm(&closed), T::one());
    if resid_closed <= cfg.residual_tol * scale {
        return Ok(closed);
    }
    let numerical = inverse(m, label, cfg)?;
    let resid_num = op_norm(&(m * &numerical - &id));
    if resid_num < resid_closed {
        log::warn!(
            "closed-form inverse of {label} leaves identity residual {:e}; direct inversion \
             reaches {:e} and wins",
            resid_closed.lossy_f64(),
            resid_num.lossy_f64()
        );
        Ok(numerical)
    } else {
        Ok(closed)
    }
}

fn not_strong(corner: &str, err: CouplingError) -> CouplingError {
    match err {
        CouplingError::NotInvertible { cond, .. } => {
            CouplingError::NotStrong(format!("{corner} corner has condition {cond:e}"))
        }
        e => e,
    }
}

pub(super) fn rejecting(err: CouplingError) -> CouplingError {
    match err {
        e @ CouplingError::NotInvertible { .. } => {
            CouplingError::WitnessRejected(format!("assembled factor failed inversion: {e}"))
        }
        e => e,
    }
}

/// Schur coupling to equivalence after extension, with `X0 = Y`, `Y0 = X`:
///
/// ```text
/// E = [[-B D^-1, U ],      F = [[-D^-1 C, I     ],
///      [ D^-1,   D^-1 C]]       [ A^-1 U, A^-1 B]]
/// ```
///
/// The output is in special form, so it feeds the strong-form pipeline
/// directly.
pub fn sc_to_eae<T: Scalar>(
    w: &SchurCouplingWitness<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<EaeWitness<T>, CouplingError> {
    let (n, m) = (w.dim_x(), w.dim_y());
    let (a_inv, d_inv) = (w.a_inv(), w.d_inv());
    let (u, v) = (w.coupled_u(), w.coupled_v());
    let b_dinv = w.b() * d_inv;
    let dinv_c = d_inv * w.c();
    let ainv_b = a_inv * w.b();
    let c_ainv = w.c() * a_inv;

    let e = Matrix::from_block_grid(&[&[&-&b_dinv, u], &[d_inv, &dinv_c]])
        .expect("blocks conform by construction");
    let f = Matrix::from_block_grid(&[
        &[&-&dinv_c, &Matrix::identity(m)],
        &[&(a_inv * u), &ainv_b],
    ])
    .expect("blocks conform by construction");
    let einv_closed = Matrix::from_block_grid(&[&[&-&c_ainv, v], &[a_inv, &ainv_b]])
        .expect("blocks conform by construction");
    let finv_closed = Matrix::from_block_grid(&[
        &[&-&ainv_b, &Matrix::identity(n)],
        &[&(d_inv * v), &dinv_c],
    ])
    .expect("blocks conform by construction");

    let einv = reconcile_inverse("E", &e, einv_closed, cfg).map_err(rejecting)?;
    let finv = reconcile_inverse("F", &f, finv_closed, cfg).map_err(rejecting)?;
    EaeWitness::new(e, f, einv, finv, u.clone(), v.clone(), m, n, cfg)
}

/// Schur coupling to matricial coupling:
///
/// ```text
/// u_hat = [[U,      -B D^-1],      u_hat^-1 = [[A^-1,   A^-1 B],
///          [D^-1 C,  D^-1  ]]                  [-C A^-1, V     ]]
/// ```
pub fn sc_to_mc<T: Scalar>(
    w: &SchurCouplingWitness<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<McWitness<T>, CouplingError> {
    let (a_inv, d_inv) = (w.a_inv(), w.d_inv());
    let u_hat = Matrix::from_block_grid(&[
        &[w.coupled_u(), &-&(w.b() * d_inv)],
        &[&(d_inv * w.c()), d_inv],
    ])
    .expect("blocks conform by construction");
    let v_hat_closed = Matrix::from_block_grid(&[
        &[a_inv, &(a_inv * w.b())],
        &[&-&(w.c() * a_inv), w.coupled_v()],
    ])
    .expect("blocks conform by construction");
    let v_hat = reconcile_inverse("u_hat", &u_hat, v_hat_closed, cfg).map_err(rejecting)?;
    McWitness::from_pair(u_hat, v_hat, w.dim_x(), cfg)
}

/// Matricial coupling to equivalence after extension, with `X0 = Y`,
/// `Y0 = X`. Writing `u_hat = [[U, U12], [U21, U22]]` and its inverse
/// `v_hat = [[V11, V12], [V21, V]]`:
///
/// ```text
/// E = [[U12, U  ],      F = [[-U21,  I  ],
///      [U22, U21]]           [V11 U, V12]]
/// ```
///
/// `E` is `u_hat` with its column blocks swapped, so its exact inverse is
/// `v_hat` with the row blocks swapped; the closed forms below are that.
pub fn mc_to_eae<T: Scalar>(
    w: &McWitness<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<EaeWitness<T>, CouplingError> {
    let (n, m) = (w.dim_x(), w.dim_y());
    let uh = w.u_hat();
    let vh = w.v_hat();
    let (u, v) = (uh.a11(), vh.a22());

    let e = Matrix::from_block_grid(&[&[uh.a12(), u], &[uh.a22(), uh.a21()]])
        .expect("blocks conform by construction");
    let f = Matrix::from_block_grid(&[
        &[&-uh.a21(), &Matrix::identity(m)],
        &[&(vh.a11() * u), vh.a12()],
    ])
    .expect("blocks conform by construction");
    let einv_closed = Matrix::from_block_grid(&[&[vh.a21(), v], &[vh.a11(), vh.a12()]])
        .expect("blocks conform by construction");
    let finv_closed = Matrix::from_block_grid(&[
        &[&-vh.a12(), &Matrix::identity(n)],
        &[&(uh.a22() * v), uh.a21()],
    ])
    .expect("blocks conform by construction");

    let einv = reconcile_inverse("E", &e, einv_closed, cfg).map_err(rejecting)?;
    let finv = reconcile_inverse("F", &f, finv_closed, cfg).map_err(rejecting)?;
    EaeWitness::new(e, f, einv, finv, u.clone(), v.clone(), m, n, cfg)
}

/// Equivalence after extension to matricial coupling:
///
/// ```text
/// u_hat = [[U,   -E11   ],      v_hat = [[Finv12 Einv21, Finv11],
///          [F11,  F12 E21]]              [-Einv11,       V     ]]
/// ```
///
/// Works for arbitrary extension dimensions; all blocks contract to
/// `X (+) Y`. The inverse-pair residual is checked on assembly.
pub fn eae_to_mc<T: Scalar>(
    w: &EaeWitness<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<McWitness<T>, CouplingError> {
    let eb = w.e_blocks();
    let fb = w.f_blocks();
    let einvb = w.einv_blocks();
    let finvb = w.finv_blocks();

    let u_hat = Matrix::from_block_grid(&[
        &[w.u(), &-eb.a11()],
        &[fb.a11(), &(fb.a12() * eb.a21())],
    ])
    .expect("blocks conform by construction");
    let v_hat = Matrix::from_block_grid(&[
        &[&(finvb.a12() * einvb.a21()), finvb.a11()],
        &[&-einvb.a11(), w.v()],
    ])
    .expect("blocks conform by construction");
    McWitness::from_pair(u_hat, v_hat, w.dim_x(), cfg)
}

/// Strong matricial coupling to Schur coupling. Requires the `u_hat`
/// lower-right corner invertible; then
///
/// ```text
/// A = U - U12 U22^-1 U21,   B = -U12 U22^-1,
/// C = U22^-1 U21,           D = U22^-1.
/// ```
pub fn smc_to_sc<T: Scalar>(
    w: &McWitness<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<SchurCouplingWitness<T>, CouplingError> {
    let uh = w.u_hat();
    let u22_inv = inverse(uh.a22(), "u_hat 2,2 corner", cfg).map_err(|e| {
        not_strong("u_hat 2,2", e)
    })?;
    let a = w.u() - uh.a12() * &u22_inv * uh.a21();
    let b = -&(uh.a12() * &u22_inv);
    let c = &u22_inv * uh.a21();
    SchurCouplingWitness::from_blocks(a, b, c, u22_inv, cfg)
}

/// Strong equivalence after extension to Schur coupling. Requires the `E21`
/// and `F12` corners invertible; then with
/// `(Einv21)^-1 = E12 - E11 E21^-1 E22` and
/// `(Finv12)^-1 = F21 - F22 F12^-1 F11` (both cross-checked against direct
/// inversion of the extracted corners),
///
/// ```text
/// S = [[(Einv21)^-1 (Finv12)^-1,  -E11 E21^-1 F12^-1],
///      [E21^-1 E22 (Finv12)^-1,    E21^-1 F12^-1    ]]
/// ```
pub fn seae_to_sc<T: Scalar>(
    w: &EaeWitness<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<SchurCouplingWitness<T>, CouplingError> {
    let eb = w.e_blocks();
    let fb = w.f_blocks();
    let e21_inv = inverse(eb.a21(), "E21", cfg).map_err(|e| not_strong("E21", e))?;
    let f12_inv = inverse(fb.a12(), "F12", cfg).map_err(|e| not_strong("F12", e))?;

    let einv21_inv = reconcile_inverse(
        "Einv21",
        w.einv_blocks().a21(),
        eb.a12() - eb.a11() * &e21_inv * eb.a22(),
        cfg,
    )?;
    let finv12_inv = reconcile_inverse(
        "Finv12",
        w.finv_blocks().a12(),
        fb.a21() - fb.a22() * &f12_inv * fb.a11(),
        cfg,
    )?;

    let a = &einv21_inv * &finv12_inv;
    let b = -&(eb.a11() * &e21_inv * &f12_inv);
    let c = &e21_inv * eb.a22() * &finv12_inv;
    let d = &e21_inv * &f12_inv;
    SchurCouplingWitness::from_blocks(a, b, c, d, cfg)
}

/// Direct numerical inverses of the cached factors, for agreement tests
/// against the closed forms a conversion produced.
pub fn numerical_inverse<T: Scalar>(m: &Matrix<T>, cfg: &ToleranceConfig<T>) -> Matrix<T> {
    pinv(m, cfg)
}
