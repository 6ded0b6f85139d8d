//! Spectral diagnostics: best invertible approximation, polar factorization,
//! threshold kernel profiles, and the approximation-transfer construction
//! that moves an invertible approximant of `U` across an extension witness
//! to an invertible approximant of `V`.

use num_traits::Float;
use serde::Serialize;

use crate::couplings::SpecialFormEae;
use crate::error::CouplingError;
use crate::matcore::{
    inverse, is_invertible, op_norm, singular_values, svd_factors, Matrix, SvdFactors,
    ToleranceConfig,
};
use crate::scalar::Scalar;

/// Floor the singular values of `t` at `delta` and also return the exact
/// inverse of the floored reconstruction. Sharing one decomposition keeps the
/// pair bitwise consistent for the upgrade loop.
pub(crate) fn floored_svd<T: Scalar>(t: &Matrix<T>, delta: T) -> (Matrix<T>, Matrix<T>) {
    let SvdFactors { u, sigma, vt } = svd_factors(t);
    let k = t.rows();
    let floored: Vec<T> = (0..k)
        .map(|i| Float::max(sigma.get(i).copied().unwrap_or_else(T::zero), delta))
        .collect();
    let inv: Vec<T> = floored.iter().map(|&s| T::one() / s).collect();
    let ti = &u * Matrix::diagonal(&floored) * &vt;
    let ti_inv = vt.transpose() * Matrix::diagonal(&inv) * u.transpose();
    (ti, ti_inv)
}

/// Nearest invertible matrix in spectral norm at distance at most `delta`:
/// reconstruct the SVD with every singular value floored at `delta`.
/// Guarantees `op_norm(t - result) <= delta` and `sigma_min(result) >= delta`.
pub fn approx_invertible<T: Scalar>(t: &Matrix<T>, delta: T) -> Matrix<T> {
    assert!(t.is_square(), "invertible approximation needs a square matrix");
    assert!(delta > T::zero(), "the approximation distance must be positive");
    floored_svd(t, delta).0
}

/// Factorization `t = x * y` with `x` invertible and `y` a partial isometry
/// whose initial space is the row space of `t`.
#[derive(Debug, Clone)]
pub struct PolarFactors<T> {
    pub x: Matrix<T>,
    pub y: Matrix<T>,
    pub cond_x: T,
}

/// Split a square matrix into an invertible factor times a partial isometry.
///
/// From `t = w * diag(sigma) * z^T` with numerical rank `r`, take
/// `y = w_r * z_r^T` and `x = w * diag(sigma_1..sigma_r, 1, ..., 1) * w^T`:
/// `x` keeps the singular values on the range of `t` and acts as the
/// identity on its orthogonal complement.
pub fn polar_closed_range<T: Scalar>(t: &Matrix<T>, cfg: &ToleranceConfig<T>) -> PolarFactors<T> {
    assert!(t.is_square(), "polar factorization is defined here for square matrices");
    let SvdFactors { u, sigma, vt } = svd_factors(t);
    let k = t.rows();
    let smax = sigma.first().copied().unwrap_or_else(T::zero);
    let floor = cfg.rank_tol * smax;
    let r = sigma.iter().filter(|&&s| s > floor).count();

    let lifted: Vec<T> = (0..k).map(|i| if i < r { sigma[i] } else { T::one() }).collect();
    let x = &u * Matrix::diagonal(&lifted) * u.transpose();
    let y = u.submatrix(0..k, 0..r) * vt.submatrix(0..r, 0..k);

    let (mut lo, mut hi) = (T::one(), T::one());
    for &s in &lifted {
        lo = Float::min(lo, s);
        hi = Float::max(hi, s);
    }
    PolarFactors { x, y, cond_x: hi / lo }
}

/// Dimensions of the threshold kernels: the span of directions `x` with
/// `|t x| <= eps |x|`, and the same for the transpose. Counted from the
/// singular values, with `eps` floored at the numerical-rank threshold so
/// that `eps = 0` returns the numerical kernel dimensions.
pub fn eps_kernel_dims<T: Scalar>(
    t: &Matrix<T>,
    eps: T,
    cfg: &ToleranceConfig<T>,
) -> (usize, usize) {
    let sigma = singular_values(t);
    counted_dims(t.rows(), t.cols(), &sigma, eps, cfg)
}

fn counted_dims<T: Scalar>(
    rows: usize,
    cols: usize,
    sigma: &[T],
    eps: T,
    cfg: &ToleranceConfig<T>,
) -> (usize, usize) {
    let smax = sigma.first().copied().unwrap_or_else(T::zero);
    let eff = Float::max(eps, cfg.rank_tol * smax);
    let above = sigma.iter().filter(|&&s| s > eff).count();
    (cols - above, rows - above)
}

/// Threshold kernel dimensions sampled over an ascending grid.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EpsProfile<T> {
    pub epsilons: Vec<T>,
    pub dim_k: Vec<usize>,
    pub dim_k_tilde: Vec<usize>,
    pub ker_t_dim: usize,
    pub ker_t_star_dim: usize,
}

impl<T: Scalar> EpsProfile<T> {
    /// Smallest sampled kernel dimension over strictly positive thresholds.
    pub fn ess_null(&self) -> usize {
        self.positive_min(&self.dim_k).unwrap_or(self.ker_t_dim)
    }

    /// Same for the transpose side.
    pub fn ess_def(&self) -> usize {
        self.positive_min(&self.dim_k_tilde).unwrap_or(self.ker_t_star_dim)
    }

    fn positive_min(&self, dims: &[usize]) -> Option<usize> {
        self.epsilons
            .iter()
            .zip(dims)
            .filter(|(&eps, _)| eps > T::zero())
            .map(|(_, &d)| d)
            .min()
    }
}

/// Sample [`eps_kernel_dims`] over `eps_grid` using a single decomposition.
pub fn ess_profile<T: Scalar>(
    t: &Matrix<T>,
    eps_grid: &[T],
    cfg: &ToleranceConfig<T>,
) -> EpsProfile<T> {
    debug_assert!(eps_grid.windows(2).all(|w| w[0] <= w[1]), "grid must ascend");
    let sigma = singular_values(t);
    let mut dim_k = Vec::with_capacity(eps_grid.len());
    let mut dim_k_tilde = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let (a, b) = counted_dims(t.rows(), t.cols(), &sigma, eps, cfg);
        dim_k.push(a);
        dim_k_tilde.push(b);
    }
    let (ker, ker_star) = counted_dims(t.rows(), t.cols(), &sigma, T::zero(), cfg);
    EpsProfile {
        epsilons: eps_grid.to_vec(),
        dim_k,
        dim_k_tilde,
        ker_t_dim: ker,
        ker_t_star_dim: ker_star,
    }
}

/// Block lower-shift truncation of the stacked example operator.
///
/// The seed block `t0 = diag(I_d, 1, 1/2, ..., 1/k)` of size `s = d + k`
/// is placed on the block subdiagonal of an `(shifts * s)`-dimensional
/// space: block `(i + 1, i)` holds `t0` for `i = 0 .. shifts - 2`. The
/// `d`-dimensional identity part stands in for the orthogonal complement
/// that the full construction takes to be infinite-dimensional; the
/// truncation parameter `shifts` plays the role of the number of copies.
pub fn build_example_t<T: Scalar>(d: usize, k: usize, shifts: usize) -> Matrix<T> {
    assert!(d >= 1 && k >= 1 && shifts >= 2, "need d >= 1, k >= 1, shifts >= 2");
    let s = d + k;
    let dim = shifts * s;
    let mut t = Matrix::zeros(dim, dim);
    let diag = seed_block_values::<T>(d, k);
    for block in 0..shifts - 1 {
        for j in 0..s {
            t.set((block + 1) * s + j, block * s + j, diag[j]);
        }
    }
    t
}

fn seed_block_values<T: Scalar>(d: usize, k: usize) -> Vec<T> {
    let mut diag = vec![T::one(); d];
    diag.extend((1..=k).map(|j| T::one() / T::of(j as f64)));
    diag
}

/// Which expression the extracted corner of `E_n^-1` agrees with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ClosedFormMatch {
    Matches,
    MatchesInverse,
    Neither,
}

/// One perturbation step of the transfer construction.
#[derive(Debug, Clone)]
pub struct TransferStep<T> {
    /// The invertible approximant of `V` read off from the perturbed witness.
    pub v_n: Matrix<T>,
    /// `op_norm(U - U_n)` for this step.
    pub perturbation: T,
    /// `op_norm(V - V_n)`.
    pub measured: T,
    /// The guaranteed ceiling `2 * perturbation / delta^2`.
    pub bound: T,
    /// Agreement of `E21 - E22 U_n^-1 E11` with `V_n` or its inverse.
    pub closed_form: ClosedFormMatch,
}

#[derive(Debug, Clone)]
pub struct TransferReport<T> {
    /// `sigma_min(E)`, the constant in the bound.
    pub delta: T,
    pub steps: Vec<TransferStep<T>>,
}

/// Push invertible approximants of `U` through a special-form witness.
///
/// For each `U_n`, the witness factor `E` gets its upper-right corner
/// replaced by `U_n`; the corner of the inverse then yields an invertible
/// `V_n` with `op_norm(V - V_n) <= 2 op_norm(U - U_n) / delta^2` where
/// `delta = sigma_min(E)`. Each `U_n` must be invertible and stay within
/// `delta / 2` of `U`, else the perturbed factor may lose invertibility.
pub fn approx_transfer<T: Scalar>(
    w: &SpecialFormEae<T>,
    u_seq: &[Matrix<T>],
    cfg: &ToleranceConfig<T>,
) -> Result<TransferReport<T>, CouplingError> {
    let (n, m) = (w.dim_x(), w.dim_y());
    let eb = w.e_blocks();
    let delta = crate::matcore::decomp::smallest_singular_value(w.e());
    let u = w.u();
    let v = w.v();
    let mut steps = Vec::with_capacity(u_seq.len());

    for (idx, u_n) in u_seq.iter().enumerate() {
        if u_n.shape() != u.shape() {
            return Err(CouplingError::DimensionMismatch(format!(
                "approximant {idx} is {}x{}, expected {}x{}",
                u_n.rows(),
                u_n.cols(),
                u.rows(),
                u.cols()
            )));
        }
        let perturbation = op_norm(&(u - u_n));
        if perturbation + perturbation > delta {
            return Err(CouplingError::PerturbationTooLarge(format!(
                "approximant {idx} sits {:e} from U, above half of sigma_min(E) = {:e}",
                perturbation.lossy_f64(),
                delta.lossy_f64()
            )));
        }
        let u_n_inv = inverse(u_n, "U_n", cfg).map_err(|e| {
            CouplingError::PreconditionViolated(format!("approximant {idx} must be invertible: {e}"))
        })?;

        let e_n = Matrix::from_block_grid(&[&[eb.a11(), u_n], &[eb.a21(), eb.a22()]])
            .expect("blocks conform by construction");
        let e_n_inv = inverse(&e_n, "E_n", cfg)?;
        let v_n = e_n_inv.submatrix(0..m, n..n + m);
        let (v_n_ok, v_n_cond) = is_invertible(&v_n, cfg);
        if !v_n_ok {
            return Err(CouplingError::NotInvertible {
                block: "V_n".into(),
                cond: v_n_cond.lossy_f64(),
                limit: cfg.cond_max.lossy_f64(),
            });
        }

        let measured = op_norm(&(v - &v_n));
        let bound = (T::of(2.0) / (delta * delta)) * perturbation;

        let q = eb.a21() - eb.a22() * &u_n_inv * eb.a11();
        let direct_gap = op_norm(&(&q - &v_n)) / Float::max(op_norm(&v_n), T::one());
        let prod = &q * &v_n - Matrix::identity(m);
        let inverse_gap =
            op_norm(&prod) / Float::max(op_norm(&q) * op_norm(&v_n), T::one());
        let closed_form = if direct_gap <= cfg.residual_tol {
            ClosedFormMatch::Matches
        } else if inverse_gap <= cfg.residual_tol {
            ClosedFormMatch::MatchesInverse
        } else {
            ClosedFormMatch::Neither
        };

        steps.push(TransferStep { v_n, perturbation, measured, bound, closed_form });
    }
    Ok(TransferReport { delta, steps })
}

/// Measured and predicted threshold profiles for [`build_example_t`].
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExampleReport<T> {
    pub d: usize,
    pub k: usize,
    pub shifts: usize,
    pub dim: usize,
    pub profile: EpsProfile<T>,
    /// `(shifts - 1) * count(t0, eps) + (d + k)`: the seed-block count
    /// applied to each populated subdiagonal block, plus the full kernel
    /// contributed by the final zero column block of the truncation.
    pub truncated_prediction: Vec<usize>,
    /// `shifts * count(t0, eps)`: the seed-block count applied uniformly to
    /// every block, as the untruncated stacking suggests. Reported for
    /// comparison; the truncation makes it undercount at the final block.
    pub per_block_prediction: Vec<usize>,
    /// Whether every measured `dim_k` equals the truncated prediction.
    pub predictions_match: bool,
    /// The first block of coordinates is annihilated by the transpose.
    pub first_block_in_coker: bool,
    /// Unit vectors in the identity part of the first block keep norm one.
    pub identity_block_isometric: bool,
}

pub fn example_profile_report<T: Scalar>(
    d: usize,
    k: usize,
    shifts: usize,
    eps_grid: &[T],
    cfg: &ToleranceConfig<T>,
) -> ExampleReport<T> {
    let t = build_example_t::<T>(d, k, shifts);
    let s = d + k;
    let profile = ess_profile(&t, eps_grid, cfg);

    let seed = seed_block_values::<T>(d, k);
    let seed_count = |eps: T| seed.iter().filter(|&&x| x <= eps).count();
    let truncated: Vec<usize> =
        eps_grid.iter().map(|&eps| (shifts - 1) * seed_count(eps) + s).collect();
    let per_block: Vec<usize> = eps_grid.iter().map(|&eps| shifts * seed_count(eps)).collect();
    let predictions_match = profile.dim_k == truncated;

    let first_block_rows = t.submatrix(0..s, 0..t.cols());
    let first_block_in_coker = first_block_rows.max_abs() == T::zero();

    let mut identity_block_isometric = true;
    for j in 0..d {
        let mut norm_sq = T::zero();
        for i in 0..t.rows() {
            norm_sq = norm_sq + t[(i, j)] * t[(i, j)];
        }
        if Float::abs(Float::sqrt(norm_sq) - T::one()) > T::of(1e-12) {
            identity_block_isometric = false;
        }
    }

    ExampleReport {
        d,
        k,
        shifts,
        dim: t.rows(),
        profile,
        truncated_prediction: truncated,
        per_block_prediction: per_block,
        predictions_match,
        first_block_in_coker,
        identity_block_isometric,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ToleranceConfig<f64> {
        ToleranceConfig::default()
    }

    #[test]
    fn approx_invertible_leaves_invertible_input_alone() {
        let t = Matrix::from_rows(&[&[3.0, 1.0], &[0.5, 2.0]]).unwrap();
        let ti = approx_invertible(&t, 1e-3);
        assert!((&ti - &t).max_abs() < 1e-12);
    }

    #[test]
    fn approx_invertible_lifts_the_zero_matrix() {
        let ti = approx_invertible(&Matrix::<f64>::zeros(3, 3), 0.1);
        let sv = singular_values(&ti);
        for s in sv {
            assert!((s - 0.1).abs() < 1e-15);
        }
        assert!((op_norm(&ti) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn approx_invertible_floors_a_small_singular_value() {
        let ti = approx_invertible(&Matrix::diagonal(&[5.0, 1e-6]), 1e-3);
        assert!((&ti - Matrix::diagonal(&[5.0, 1e-3])).max_abs() < 1e-12);
    }

    #[test]
    fn floored_pair_multiplies_to_identity() {
        let t = Matrix::from_rows(&[&[1.0, 2.0, 0.0], &[0.0, 0.0, 0.0], &[1.0, 0.0, 1.0]]).unwrap();
        let (ti, ti_inv) = floored_svd(&t, 0.25);
        assert!((&ti * &ti_inv - Matrix::identity(3)).max_abs() < 1e-13);
        assert!(op_norm(&(&ti - &t)) <= 0.25 + 1e-12);
    }

    #[test]
    fn polar_of_orthogonal_is_trivial() {
        let q = Matrix::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        let p = polar_closed_range(&q, &cfg());
        assert!((&p.x - Matrix::identity(2)).max_abs() < 1e-12);
        assert!((&p.y - &q).max_abs() < 1e-12);
        assert!((p.cond_x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polar_of_singular_diagonal() {
        let p = polar_closed_range(&Matrix::diagonal(&[2.0, 0.0]), &cfg());
        assert!((&p.x - Matrix::diagonal(&[2.0, 1.0])).max_abs() < 1e-12);
        assert!((&p.y - Matrix::diagonal(&[1.0, 0.0])).max_abs() < 1e-12);
        assert!((p.cond_x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn polar_reconstructs_the_input() {
        let t = Matrix::from_rows(&[
            &[1.0, 2.0, 3.0],
            &[2.0, 4.0, 6.0],
            &[0.0, 1.0, -1.0],
        ])
        .unwrap();
        let p = polar_closed_range(&t, &cfg());
        assert!(op_norm(&(&p.x * &p.y - &t)) < 1e-12 * op_norm(&t).max(1.0));
        let proj = p.y.transpose() * &p.y;
        assert!(op_norm(&(&proj * &proj - &proj)) < 1e-12);
    }

    #[test]
    fn eps_kernel_counts_the_small_values() {
        let t = Matrix::diagonal(&[1.0, 0.5, 1.0 / 3.0]);
        assert_eq!(eps_kernel_dims(&t, 0.0, &cfg()), (0, 0));
        assert_eq!(eps_kernel_dims(&t, 0.4, &cfg()), (1, 1));
        assert_eq!(eps_kernel_dims(&t, 0.5, &cfg()), (2, 2));
        assert_eq!(eps_kernel_dims(&t, 1.0, &cfg()), (3, 3));
    }

    #[test]
    fn eps_zero_returns_numerical_kernels() {
        let t = Matrix::diagonal(&[2.0, 0.0, 0.0]);
        assert_eq!(eps_kernel_dims(&t, 0.0, &cfg()), (2, 2));
    }

    #[test]
    fn profile_is_monotone_and_keeps_kernel_floor() {
        let t = Matrix::diagonal(&[1.0, 0.3, 0.0]);
        let grid = [0.0, 0.1, 0.35, 2.0];
        let p = ess_profile(&t, &grid, &cfg());
        assert_eq!(p.dim_k, vec![1, 1, 2, 3]);
        assert!(p.dim_k.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(p.ker_t_dim, 1);
        assert_eq!(p.ess_null(), 1);
    }

    #[test]
    fn zero_operator_profile_is_full() {
        let p = ess_profile(&Matrix::<f64>::zeros(3, 3), &[0.0, 1.0], &cfg());
        assert_eq!(p.dim_k, vec![3, 3]);
        assert_eq!(p.dim_k_tilde, vec![3, 3]);
    }

    #[test]
    fn example_operator_smallest_case() {
        let t = build_example_t::<f64>(1, 1, 2);
        assert_eq!(t.shape(), (4, 4));
        let lower_left = t.submatrix(2..4, 0..2);
        assert!((&lower_left - Matrix::identity(2)).max_abs() == 0.0);
        assert_eq!(t.submatrix(0..2, 0..4).max_abs(), 0.0);
    }

    #[test]
    fn example_operator_kernel_dimensions() {
        let t = build_example_t::<f64>(2, 3, 3);
        let (dim_k, dim_k_tilde) = eps_kernel_dims(&t, 0.0, &cfg());
        assert_eq!(dim_k, 5);
        assert_eq!(dim_k_tilde, 5);
    }

    #[test]
    fn example_singular_values_repeat_the_seed_block() {
        let t = build_example_t::<f64>(1, 2, 3);
        let sv = singular_values(&t);
        // Seed values {1, 1, 1/2}, each twice, then three zeros.
        let expect = [1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.0, 0.0, 0.0];
        assert_eq!(sv.len(), expect.len());
        for (got, want) in sv.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "got {got} want {want}");
        }
    }

    #[test]
    fn example_report_demo_parameters() {
        let grid = [0.0, 0.3, 0.6];
        let rep = example_profile_report::<f64>(3, 5, 4, &grid, &cfg());
        assert_eq!(rep.dim, 32);
        // Seed values <= 0.3 are 1/4 and 1/5; three populated blocks.
        assert_eq!(rep.truncated_prediction, vec![8, 14, 20]);
        assert_eq!(rep.per_block_prediction, vec![0, 8, 16]);
        assert_eq!(rep.profile.dim_k, rep.truncated_prediction);
        assert!(rep.predictions_match);
        assert!(rep.first_block_in_coker);
        assert!(rep.identity_block_isometric);
    }
}
