//! Deciding Schur coupling from kernel dimensions and producing witnesses
//! along two constructive routes: through a strong matricial coupling built
//! in singular-vector coordinates (route B), and through a one-sided
//! equivalence extension (route A).
//!
//! Both routes start from the same data: for square `U` and `V` with equal
//! kernel and cokernel dimensions, orthonormal bases of the four subspaces
//! and the diagonal invertible middle factor of each operator.

use std::fmt;

use serde::{Deserialize, Serialize};

use num_traits::Float;

use crate::couplings::{smc_to_sc, McWitness, SchurCouplingWitness};
use crate::error::CouplingError;
use crate::harness::verify_sc;
use crate::matcore::{
    inverse, op_norm, rank, svd_factors, Matrix, SvdFactors, ToleranceConfig,
};
use crate::scalar::Scalar;

/// Singular-value decomposition of an operator reorganized around its
/// kernel: the invertible diagonal middle part and orthonormal bases for
/// range, cokernel, corange and kernel.
#[derive(Debug, Clone)]
pub struct KernelData<T> {
    pub rank: usize,
    /// `diag(sigma_1, ..., sigma_r)`, the action on the corange.
    pub u1: Matrix<T>,
    /// Columns span the range (first `rank` left singular vectors).
    pub range_basis: Matrix<T>,
    /// Columns span the orthogonal complement of the range.
    pub coker_basis: Matrix<T>,
    /// Columns span the orthogonal complement of the kernel.
    pub corange_basis: Matrix<T>,
    /// Columns span the kernel.
    pub ker_basis: Matrix<T>,
}

impl<T: Scalar> KernelData<T> {
    pub fn nullity(&self) -> usize {
        self.ker_basis.cols()
    }

    pub fn conullity(&self) -> usize {
        self.coker_basis.cols()
    }
}

/// Computes [`KernelData`] at the numerical rank determined by
/// `cfg.rank_tol`. Kernel and cokernel columns get their dominant entry
/// normalized positive; with zero singular values this does not disturb the
/// reconstruction.
pub fn kernel_data<T: Scalar>(t: &Matrix<T>, cfg: &ToleranceConfig<T>) -> KernelData<T> {
    let SvdFactors { u, sigma, vt } = svd_factors(t);
    let (rows, cols) = t.shape();
    let smax = sigma.first().copied().unwrap_or_else(T::zero);
    let floor = cfg.rank_tol * smax;
    let r = sigma.iter().filter(|&&s| s > floor).count();

    let range_basis = u.submatrix(0..rows, 0..r);
    let coker_basis = positive_columns(u.submatrix(0..rows, r..rows));
    let corange_basis = vt.submatrix(0..r, 0..cols).transpose();
    let ker_basis = positive_columns(vt.submatrix(r..cols, 0..cols).transpose());
    KernelData {
        rank: r,
        u1: Matrix::diagonal(&sigma[..r]),
        range_basis,
        coker_basis,
        corange_basis,
        ker_basis,
    }
}

fn positive_columns<T: Scalar>(mut m: Matrix<T>) -> Matrix<T> {
    for j in 0..m.cols() {
        let mut dominant = T::zero();
        for i in 0..m.rows() {
            if Float::abs(m[(i, j)]) > Float::abs(dominant) {
                dominant = m[(i, j)];
            }
        }
        if dominant < T::zero() {
            for i in 0..m.rows() {
                let flipped = -m[(i, j)];
                m.set(i, j, flipped);
            }
        }
    }
    m
}

/// Outcome of the kernel-dimension comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CouplingVerdict {
    pub coupled: bool,
    pub nullity_u: usize,
    pub conullity_u: usize,
    pub nullity_v: usize,
    pub conullity_v: usize,
    pub reason: String,
}

impl fmt::Display for CouplingVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.reason)
    }
}

fn verdict_from_dims(
    nullity_u: usize,
    conullity_u: usize,
    nullity_v: usize,
    conullity_v: usize,
) -> CouplingVerdict {
    let coupled = nullity_u == nullity_v && conullity_u == conullity_v;
    let reason = if coupled {
        format!(
            "kernel dimensions agree: dim ker = {nullity_u}, dim coker = {conullity_u}"
        )
    } else {
        format!(
            "kernel dimensions disagree: dim ker U = {nullity_u} vs dim ker V = {nullity_v}, \
             dim coker U = {conullity_u} vs dim coker V = {conullity_v}"
        )
    };
    CouplingVerdict { coupled, nullity_u, conullity_u, nullity_v, conullity_v, reason }
}

/// In finite dimensions the three coupling relations all reduce to this
/// comparison: `U` and `V` are coupled exactly when their kernels and
/// cokernels have matching dimensions.
pub fn decide_coupling<T: Scalar>(
    u: &Matrix<T>,
    v: &Matrix<T>,
    cfg: &ToleranceConfig<T>,
) -> CouplingVerdict {
    let ru = rank(u, cfg);
    let rv = rank(v, cfg);
    verdict_from_dims(u.cols() - ru, u.rows() - ru, v.cols() - rv, v.rows() - rv)
}

/// The isomorphisms `ker U -> ker V` and `coker U -> coker V` expressed in
/// the [`KernelData`] bases. The bases already line the subspaces up, so
/// both maps are identity matrices; they are returned explicitly because
/// the witness constructions accept arbitrary invertible choices.
pub fn kernel_isos<T: Scalar>(
    du: &KernelData<T>,
    dv: &KernelData<T>,
) -> Result<(Matrix<T>, Matrix<T>), CouplingError> {
    if du.nullity() != dv.nullity() || du.conullity() != dv.conullity() {
        return Err(CouplingError::DimensionMismatch(format!(
            "no kernel isomorphisms: dim ker {} vs {}, dim coker {} vs {}",
            du.nullity(),
            dv.nullity(),
            du.conullity(),
            dv.conullity()
        )));
    }
    Ok((Matrix::identity(du.nullity()), Matrix::identity(du.conullity())))
}

fn paste<T: Scalar>(dst: &mut Matrix<T>, r0: usize, c0: usize, src: &Matrix<T>) {
    for i in 0..src.rows() {
        for j in 0..src.cols() {
            dst.set(r0 + i, c0 + j, src[(i, j)]);
        }
    }
}

fn domain_basis<T: Scalar>(d: &KernelData<T>) -> Matrix<T> {
    Matrix::hstack(&[&d.corange_basis, &d.ker_basis]).expect("bases share row count")
}

fn codomain_basis<T: Scalar>(d: &KernelData<T>) -> Matrix<T> {
    Matrix::hstack(&[&d.range_basis, &d.coker_basis]).expect("bases share row count")
}

fn require_square_pair<T: Scalar>(u: &Matrix<T>, v: &Matrix<T>) -> Result<(), CouplingError> {
    if !u.is_square() || !v.is_square() {
        return Err(CouplingError::DimensionMismatch(format!(
            "witness constructions need square operators, got {}x{} and {}x{}",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    Ok(())
}

fn require_coupled<T: Scalar>(
    du: &KernelData<T>,
    dv: &KernelData<T>,
) -> Result<usize, CouplingError> {
    let verdict =
        verdict_from_dims(du.nullity(), du.conullity(), dv.nullity(), dv.conullity());
    if !verdict.coupled {
        return Err(CouplingError::NotCoupled(verdict));
    }
    Ok(du.nullity())
}

/// Strong matricial coupling of `U` and `V` from kernel data and a kernel
/// isomorphism `k: ker U -> ker V` (in basis coordinates).
///
/// In the coordinates that diagonalize both operators the coupling matrix
/// and its inverse are sparse block permutations built from the invertible
/// middle parts and `k`; rotating back by the singular-vector bases gives
/// the witness on the original spaces. The corners `u_hat_22` and
/// `v_hat_11` are invertible by construction, so the result is strong.
pub fn gi_strong_mc<T: Scalar>(
    u: &Matrix<T>,
    v: &Matrix<T>,
    k: &Matrix<T>,
    du: &KernelData<T>,
    dv: &KernelData<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<McWitness<T>, CouplingError> {
    require_square_pair(u, v)?;
    let p = require_coupled(du, dv)?;
    if k.shape() != (p, p) {
        return Err(CouplingError::DimensionMismatch(format!(
            "kernel isomorphism must be {p}x{p}, got {}x{}",
            k.rows(),
            k.cols()
        )));
    }
    let k_inv = inverse(k, "K", cfg)?;
    let (ru, rv) = (du.rank, dv.rank);
    let n = ru + p;
    let m = rv + p;

    let u1_inv = invert_diagonal(&du.u1);
    let v1_inv = invert_diagonal(&dv.u1);

    // Row and column groups: [corange/range U | ker/coker U | range/corange V
    // | coker/ker V], sized [ru, p, rv, p].
    let mut u_hat_coord = Matrix::zeros(n + m, n + m);
    paste(&mut u_hat_coord, 0, 0, &du.u1);
    paste(&mut u_hat_coord, ru, n + rv, &k_inv);
    paste(&mut u_hat_coord, n, n, &v1_inv);
    paste(&mut u_hat_coord, n + rv, ru, &-k);
    paste(&mut u_hat_coord, n + rv, n + rv, &Matrix::identity(p));

    let mut v_hat_coord = Matrix::zeros(n + m, n + m);
    paste(&mut v_hat_coord, 0, 0, &u1_inv);
    paste(&mut v_hat_coord, ru, ru, &(&k_inv * k));
    paste(&mut v_hat_coord, ru, n + rv, &-&k_inv);
    paste(&mut v_hat_coord, n, n, &dv.u1);
    paste(&mut v_hat_coord, n + rv, ru, k);

    let left = Matrix::block_diag(&[&codomain_basis(du), &domain_basis(dv)]);
    let right = Matrix::block_diag(&[&domain_basis(du), &codomain_basis(dv)]);
    let u_hat = &left * u_hat_coord * right.transpose();
    let v_hat = &right * v_hat_coord * left.transpose();

    McWitness::from_pair(u_hat, v_hat, n, cfg)
}

fn invert_diagonal<T: Scalar>(d: &Matrix<T>) -> Matrix<T> {
    let vals: Vec<T> = (0..d.rows()).map(|i| T::one() / d[(i, i)]).collect();
    Matrix::diagonal(&vals)
}

/// One-sided equivalence-after-extension witness: `E^-1 diag(U, I) = V F`
/// with `E` and `F` invertible and no extension on the `V` side.
#[derive(Debug, Clone)]
pub struct OneSidedExtension<T> {
    pub e: Matrix<T>,
    pub f: Matrix<T>,
    pub dim_x0: usize,
}

/// Builds the one-sided extension for coupled `U`, `V` with
/// `rank U <= rank V`, extending the `U` side by `dim_x0 = rank V - rank U`.
///
/// `kstar` maps `coker U -> coker V` in basis coordinates. In singular
/// coordinates `E` permutes `[im L | X0 | ker V*]` onto
/// `[im U | coker U | X0]` through `kstar^-1`, and `F` matches the
/// invertible parts through `V1^-1`; the defining identity is checked
/// before the factors are released.
pub fn build_one_sided_extension<T: Scalar>(
    u: &Matrix<T>,
    v: &Matrix<T>,
    k: &Matrix<T>,
    kstar: &Matrix<T>,
    du: &KernelData<T>,
    dv: &KernelData<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<OneSidedExtension<T>, CouplingError> {
    require_square_pair(u, v)?;
    let p = require_coupled(du, dv)?;
    let (ru, rv) = (du.rank, dv.rank);
    if ru > rv {
        return Err(CouplingError::PreconditionViolated(format!(
            "one-sided extension needs rank U <= rank V, got {ru} > {rv}; \
             build it for the swapped pair and flip the resulting witness"
        )));
    }
    for (label, iso) in [("K", k), ("Kstar", kstar)] {
        if iso.shape() != (p, p) {
            return Err(CouplingError::DimensionMismatch(format!(
                "{label} must be {p}x{p}, got {}x{}",
                iso.rows(),
                iso.cols()
            )));
        }
    }
    let kstar_inv = inverse(kstar, "Kstar", cfg)?;
    let x0 = rv - ru;
    let n = ru + p;
    let m = rv + p;

    // Rows [im U | coker U | X0], columns [im L | X0 | ker V*].
    let mut e_coord = Matrix::zeros(n + x0, m);
    paste(&mut e_coord, 0, 0, &Matrix::identity(ru));
    paste(&mut e_coord, ru, ru + x0, &kstar_inv);
    paste(&mut e_coord, ru + p, ru, &Matrix::identity(x0));

    // Rows [im L | X0 | ker V], columns [corange U | ker U | X0].
    let mut g = Matrix::zeros(m, n + x0);
    paste(&mut g, 0, 0, &du.u1);
    paste(&mut g, ru, ru + p, &Matrix::identity(x0));
    paste(&mut g, ru + x0, ru, k);

    let v1_inv = invert_diagonal(&dv.u1);
    let f_coord = Matrix::block_diag(&[&v1_inv, &Matrix::identity(p)]) * g;

    let e = Matrix::block_diag(&[&codomain_basis(du), &Matrix::identity(x0)])
        * e_coord
        * codomain_basis(dv).transpose();
    let f = domain_basis(dv)
        * f_coord
        * Matrix::block_diag(&[&domain_basis(du), &Matrix::identity(x0)]).transpose();

    let e_inv = inverse(&e, "E", cfg)?;
    let lhs = &e_inv * Matrix::block_diag(&[u, &Matrix::identity(x0)]);
    let rhs = v * &f;
    let resid = op_norm(&(&lhs - &rhs));
    let scale = [op_norm(&lhs), op_norm(&rhs), T::one()].into_iter().fold(T::zero(), Float::max);
    if resid > cfg.residual_tol * scale {
        return Err(CouplingError::WitnessRejected(format!(
            "one-sided extension identity residual {:e} (scale {:e}) at \
             n={n}, m={m}, rank U={ru}, rank V={rv}, nullity={p}",
            resid.lossy_f64(),
            scale.lossy_f64()
        )));
    }
    Ok(OneSidedExtension { e, f, dim_x0: x0 })
}

/// Turns a one-sided extension into a Schur coupling witness.
///
/// With `P` the projection `X + X0 -> X` and `J` its adjoint embedding,
/// `S = [[I, P F^-1], [E^-1 J (I - U), E^-1 F^-1]]` has invertible diagonal
/// blocks and Schur complements `U` (over the lower-right corner) and `V`
/// (over the upper-left one).
pub fn one_sided_to_sc<T: Scalar>(
    u: &Matrix<T>,
    ext: &OneSidedExtension<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<SchurCouplingWitness<T>, CouplingError> {
    let n = u.rows();
    if !u.is_square() {
        return Err(CouplingError::DimensionMismatch(format!(
            "U must be square, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let m = n + ext.dim_x0;
    if ext.e.shape() != (m, m) || ext.f.shape() != (m, m) {
        return Err(CouplingError::DimensionMismatch(format!(
            "extension factors must be {m}x{m}, got {}x{} and {}x{}",
            ext.e.rows(),
            ext.e.cols(),
            ext.f.rows(),
            ext.f.cols()
        )));
    }
    let e_inv = inverse(&ext.e, "E", cfg)?;
    let f_inv = inverse(&ext.f, "F", cfg)?;
    let proj = Matrix::hstack(&[&Matrix::identity(n), &Matrix::zeros(n, ext.dim_x0)])
        .expect("shapes agree");

    let a = Matrix::identity(n);
    let b = &proj * &f_inv;
    let c = &e_inv * proj.transpose() * (Matrix::identity(n) - u);
    let d = &e_inv * &f_inv;
    SchurCouplingWitness::from_blocks(a, b, c, d, cfg)
}

/// Which construction [`witness_sc`] should run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteSelection {
    /// One-sided extension route.
    A,
    /// Strong matricial coupling route.
    B,
    Both,
}

impl RouteSelection {
    fn wants_a(self) -> bool {
        matches!(self, RouteSelection::A | RouteSelection::Both)
    }

    fn wants_b(self) -> bool {
        matches!(self, RouteSelection::B | RouteSelection::Both)
    }
}

/// Verified witnesses for a coupled pair, one entry per requested route.
#[derive(Debug, Clone)]
pub struct WitnessSet<T: Scalar> {
    pub verdict: CouplingVerdict,
    pub route_a: Option<SchurCouplingWitness<T>>,
    pub route_b: Option<SchurCouplingWitness<T>>,
}

/// Decides coupling and, if it holds, constructs Schur coupling witnesses
/// along the requested routes, each one verified before it is returned.
///
/// Route A needs `rank U <= rank V`; when that fails the roles are swapped
/// and the finished witness is flipped back.
pub fn witness_sc<T: Scalar>(
    u: &Matrix<T>,
    v: &Matrix<T>,
    routes: RouteSelection,
    cfg: &ToleranceConfig<T>,
) -> Result<WitnessSet<T>, CouplingError> {
    require_square_pair(u, v)?;
    let verdict = decide_coupling(u, v, cfg);
    if !verdict.coupled {
        return Err(CouplingError::NotCoupled(verdict));
    }
    let du = kernel_data(u, cfg);
    let dv = kernel_data(v, cfg);

    let mut route_a = None;
    if routes.wants_a() {
        let witness = if du.rank <= dv.rank {
            let (k, kstar) = kernel_isos(&du, &dv)?;
            let ext = build_one_sided_extension(u, v, &k, &kstar, &du, &dv, cfg)?;
            one_sided_to_sc(u, &ext, cfg)?
        } else {
            let (k, kstar) = kernel_isos(&dv, &du)?;
            let ext = build_one_sided_extension(v, u, &k, &kstar, &dv, &du, cfg)?;
            one_sided_to_sc(v, &ext, cfg)?.flip()
        };
        route_a = Some(checked(witness, "A", u, v, cfg)?);
    }

    let mut route_b = None;
    if routes.wants_b() {
        let (k, _) = kernel_isos(&du, &dv)?;
        let mc = gi_strong_mc(u, v, &k, &du, &dv, cfg)?;
        route_b = Some(checked(smc_to_sc(&mc, cfg)?, "B", u, v, cfg)?);
    }

    Ok(WitnessSet { verdict, route_a, route_b })
}

fn checked<T: Scalar>(
    w: SchurCouplingWitness<T>,
    route: &str,
    u: &Matrix<T>,
    v: &Matrix<T>,
    cfg: &ToleranceConfig<T>,
) -> Result<SchurCouplingWitness<T>, CouplingError> {
    let report = verify_sc(&w, u, v, cfg);
    if !report.pass {
        return Err(CouplingError::WitnessRejected(format!(
            "route {route} witness failed verification (worst residual {:e})",
            report.worst_residual()
        )));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ToleranceConfig<f64> {
        ToleranceConfig::default()
    }

    #[test]
    fn kernel_data_of_singular_diagonal() {
        let d = kernel_data(&Matrix::diagonal(&[2.0, 0.0]), &cfg());
        assert_eq!(d.rank, 1);
        assert_eq!(d.nullity(), 1);
        assert_eq!(d.conullity(), 1);
        assert!((d.u1[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((d.range_basis[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((d.ker_basis[(1, 0)] - 1.0).abs() < 1e-12);
        assert!((d.coker_basis[(1, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_bases_reconstruct_the_operator() {
        let t = Matrix::from_rows(&[
            &[1.0, 2.0, 3.0],
            &[2.0, 4.0, 6.0],
            &[0.0, 0.0, 0.0],
        ])
        .unwrap();
        let d = kernel_data(&t, &cfg());
        assert_eq!(d.rank, 1);
        let rebuilt = &d.range_basis * &d.u1 * d.corange_basis.transpose();
        assert!((&rebuilt - &t).max_abs() < 1e-12);
        // Kernel columns really annihilate.
        let image = &t * &d.ker_basis;
        assert!(image.max_abs() < 1e-12);
        let co = t.transpose() * &d.coker_basis;
        assert!(co.max_abs() < 1e-12);
    }

    #[test]
    fn decide_coupling_on_diagonals() {
        let c = cfg();
        let yes = decide_coupling(&Matrix::diagonal(&[2.0, 0.0]), &Matrix::diagonal(&[3.0, 0.0]), &c);
        assert!(yes.coupled);
        assert_eq!((yes.nullity_u, yes.conullity_u), (1, 1));

        let no = decide_coupling(&Matrix::diagonal(&[2.0, 0.0]), &Matrix::identity(2), &c);
        assert!(!no.coupled);
        assert!(no.reason.contains("disagree"));
    }

    #[test]
    fn decide_coupling_handles_rectangular_input() {
        let c = cfg();
        let u = Matrix::<f64>::zeros(2, 3);
        let v = Matrix::<f64>::zeros(2, 3);
        let verdict = decide_coupling(&u, &v, &c);
        assert!(verdict.coupled);
        assert_eq!(verdict.nullity_u, 3);
        assert_eq!(verdict.conullity_u, 2);
    }

    #[test]
    fn isos_need_matching_dimensions() {
        let c = cfg();
        let du = kernel_data(&Matrix::diagonal(&[1.0, 0.0]), &c);
        let dv = kernel_data(&Matrix::identity(2), &c);
        assert!(matches!(kernel_isos(&du, &dv), Err(CouplingError::DimensionMismatch(_))));
        let dw = kernel_data(&Matrix::diagonal(&[5.0, 0.0]), &c);
        let (k, kstar) = kernel_isos(&du, &dw).unwrap();
        assert_eq!(k.shape(), (1, 1));
        assert_eq!(kstar.shape(), (1, 1));
    }

    #[test]
    fn strong_mc_worked_two_by_two_pair() {
        let c = cfg();
        let u = Matrix::diagonal(&[2.0, 0.0]);
        let v = Matrix::diagonal(&[3.0, 0.0]);
        let du = kernel_data(&u, &c);
        let dv = kernel_data(&v, &c);
        let (k, _) = kernel_isos(&du, &dv).unwrap();
        let mc = gi_strong_mc(&u, &v, &k, &du, &dv, &c).unwrap();

        let expect_u_hat = Matrix::from_rows(&[
            &[2.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0 / 3.0, 0.0],
            &[0.0, -1.0, 0.0, 1.0],
        ])
        .unwrap();
        let expect_v_hat = Matrix::from_rows(&[
            &[0.5, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, -1.0],
            &[0.0, 0.0, 3.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert!((&mc.u_hat_matrix() - &expect_u_hat).max_abs() < 1e-12);
        assert!((&mc.v_hat_matrix() - &expect_v_hat).max_abs() < 1e-12);
        assert!((mc.u() - &u).max_abs() < 1e-12);
        assert!((mc.v() - &v).max_abs() < 1e-12);
    }

    #[test]
    fn strong_mc_scalar_zero_pair() {
        let c = cfg();
        let u = Matrix::zeros(1, 1);
        let v = Matrix::zeros(1, 1);
        let du = kernel_data(&u, &c);
        let dv = kernel_data(&v, &c);
        let (k, _) = kernel_isos(&du, &dv).unwrap();
        let mc = gi_strong_mc(&u, &v, &k, &du, &dv, &c).unwrap();
        let expect = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 1.0]]).unwrap();
        assert!((&mc.u_hat_matrix() - &expect).max_abs() < 1e-14);
        let sc = smc_to_sc(&mc, &c).unwrap();
        let expect_s = Matrix::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]).unwrap();
        assert!((&sc.s() - &expect_s).max_abs() < 1e-14);
    }

    #[test]
    fn strong_mc_recovers_full_rank_pair() {
        let c = cfg();
        let u = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 2.0]]).unwrap();
        let v = Matrix::from_rows(&[&[3.0, 0.0], &[1.0, 1.0]]).unwrap();
        let du = kernel_data(&u, &c);
        let dv = kernel_data(&v, &c);
        let (k, _) = kernel_isos(&du, &dv).unwrap();
        let mc = gi_strong_mc(&u, &v, &k, &du, &dv, &c).unwrap();
        assert!((mc.u() - &u).max_abs() < 1e-12);
        assert!((mc.v() - &v).max_abs() < 1e-12);
    }

    #[test]
    fn one_sided_extension_equal_ranks() {
        let c = cfg();
        let u = Matrix::diagonal(&[2.0, 0.0]);
        let v = Matrix::diagonal(&[3.0, 0.0]);
        let du = kernel_data(&u, &c);
        let dv = kernel_data(&v, &c);
        let (k, kstar) = kernel_isos(&du, &dv).unwrap();
        let ext = build_one_sided_extension(&u, &v, &k, &kstar, &du, &dv, &c).unwrap();
        assert_eq!(ext.dim_x0, 0);
        assert!((&ext.e - Matrix::identity(2)).max_abs() < 1e-12);
        let expect_f = Matrix::diagonal(&[2.0 / 3.0, 1.0]);
        assert!((&ext.f - &expect_f).max_abs() < 1e-12);

        let sc = one_sided_to_sc(&u, &ext, &c).unwrap();
        assert!((sc.coupled_u() - &u).max_abs() < 1e-12);
        assert!((sc.coupled_v() - &v).max_abs() < 1e-12);
    }

    #[test]
    fn one_sided_extension_with_rank_gap() {
        let c = cfg();
        let u = Matrix::diagonal(&[1.0, 0.0, 0.0]);
        let v = Matrix::diagonal(&[1.0, 1.0, 0.0, 0.0]);
        let du = kernel_data(&u, &c);
        let dv = kernel_data(&v, &c);
        let (k, kstar) = kernel_isos(&du, &dv).unwrap();
        let ext = build_one_sided_extension(&u, &v, &k, &kstar, &du, &dv, &c).unwrap();
        assert_eq!(ext.dim_x0, 1);
        assert_eq!(ext.e.shape(), (4, 4));

        let sc = one_sided_to_sc(&u, &ext, &c).unwrap();
        assert!((sc.coupled_u() - &u).max_abs() < 1e-10);
        assert!((sc.coupled_v() - &v).max_abs() < 1e-10);
    }

    #[test]
    fn one_sided_refuses_descending_ranks() {
        let c = cfg();
        // Coupled (nullity 1, conullity 1 on both sides) but rank U = 2 > rank V = 1.
        let u = Matrix::diagonal(&[1.0, 1.0, 0.0]);
        let v = Matrix::diagonal(&[1.0, 0.0]);
        let du = kernel_data(&u, &c);
        let dv = kernel_data(&v, &c);
        let (k, kstar) = kernel_isos(&du, &dv).unwrap();
        let out = build_one_sided_extension(&u, &v, &k, &kstar, &du, &dv, &c);
        assert!(matches!(out, Err(CouplingError::PreconditionViolated(_))));
    }

    #[test]
    fn witness_sc_serves_both_routes() {
        let c = cfg();
        let u = Matrix::diagonal(&[2.0, 0.0]);
        let v = Matrix::diagonal(&[3.0, 0.0]);
        let set = witness_sc(&u, &v, RouteSelection::Both, &c).unwrap();
        assert!(set.verdict.coupled);
        let wa = set.route_a.unwrap();
        let wb = set.route_b.unwrap();
        assert!((wa.coupled_u() - &u).max_abs() < 1e-10);
        assert!((wb.coupled_u() - &u).max_abs() < 1e-10);
        assert!((wa.coupled_v() - &v).max_abs() < 1e-10);
        assert!((wb.coupled_v() - &v).max_abs() < 1e-10);
    }

    #[test]
    fn witness_sc_scalar_zero_routes_differ() {
        let c = cfg();
        let z = Matrix::zeros(1, 1);
        let set = witness_sc(&z, &z, RouteSelection::Both, &c).unwrap();
        let sa = set.route_a.unwrap().s();
        let sb = set.route_b.unwrap().s();
        let expect_a = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let expect_b = Matrix::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]).unwrap();
        assert!((&sa - &expect_a).max_abs() < 1e-12);
        assert!((&sb - &expect_b).max_abs() < 1e-12);
    }

    #[test]
    fn witness_sc_swaps_when_u_outranks_v() {
        let c = cfg();
        let u = Matrix::diagonal(&[1.0, 1.0, 0.0, 0.0]);
        let v = Matrix::diagonal(&[1.0, 0.0, 0.0]);
        let set = witness_sc(&u, &v, RouteSelection::A, &c).unwrap();
        let w = set.route_a.unwrap();
        assert_eq!(w.dim_x(), 4);
        assert!((w.coupled_u() - &u).max_abs() < 1e-10);
        assert!((w.coupled_v() - &v).max_abs() < 1e-10);
        assert!(set.route_b.is_none());
    }

    #[test]
    fn witness_sc_rejects_uncoupled_pairs() {
        let c = cfg();
        let out = witness_sc(&Matrix::identity(2), &Matrix::diagonal(&[1.0, 0.0]), RouteSelection::Both, &c);
        match out {
            Err(CouplingError::NotCoupled(verdict)) => {
                assert!(!verdict.coupled);
                assert_eq!(verdict.nullity_v, 1);
            }
            other => panic!("expected NotCoupled, got {other:?}"),
        }
    }
}
