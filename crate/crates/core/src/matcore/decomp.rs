//! Rank-revealing primitives built on the singular value decomposition.
//!
//! Every numerical judgment in the toolkit (rank, invertibility, operator
//! norm, pseudoinverse, kernel bases) funnels through the SVD so that a
//! single pair of thresholds, `rank_tol` and `cond_max`, governs all of them.

use num_traits::Float;

use crate::error::CouplingError;
use crate::matcore::{Matrix, ToleranceConfig};
use crate::scalar::Scalar;

/// A full decomposition `m = u * diag(sigma) * vt`.
///
/// Singular values are sorted in descending order. Columns of `u` and rows of
/// `vt` are sign-normalized so that each right singular vector has a positive
/// entry of largest magnitude; left vectors attached to exactly zero singular
/// values, which the product does not constrain, get the same convention
/// independently. This makes the factors reproducible and lets tests pin
/// exact bases for simple inputs.
#[derive(Debug, Clone)]
pub struct SvdFactors<T> {
    pub u: Matrix<T>,
    pub sigma: Vec<T>,
    pub vt: Matrix<T>,
}

pub fn svd_factors<T: Scalar>(m: &Matrix<T>) -> SvdFactors<T> {
    let SvdFactors { mut u, sigma, mut vt } = jacobi_factors(m);

    for i in 0..sigma.len() {
        let mut best = 0;
        for j in 0..vt.cols() {
            if Float::abs(vt[(i, j)]) > Float::abs(vt[(i, best)]) {
                best = j;
            }
        }
        if vt[(i, best)] < T::zero() {
            for j in 0..vt.cols() {
                vt.set(i, j, -vt[(i, j)]);
            }
            for j in 0..u.rows() {
                u.set(j, i, -u[(j, i)]);
            }
        }
        // An exactly zero singular value leaves the left vector unconstrained
        // by the product; pin its sign independently.
        if sigma[i] == T::zero() {
            let mut top = 0;
            for j in 0..u.rows() {
                if Float::abs(u[(j, i)]) > Float::abs(u[(top, i)]) {
                    top = j;
                }
            }
            if u[(top, i)] < T::zero() {
                for j in 0..u.rows() {
                    u.set(j, i, -u[(j, i)]);
                }
            }
        }
    }
    SvdFactors { u, sigma, vt }
}

/// Thin SVD by one-sided Jacobi rotations on the columns.
///
/// The bidiagonalization-based SVD in nalgebra can lose six or more digits in
/// the computed factors when singular values cluster, which is fatal for the
/// residual gates downstream. Jacobi sweeps keep the factors accurate at
/// working precision, and their cubic cost per sweep is immaterial at the
/// matrix sizes this library handles.
fn jacobi_factors<T: Scalar>(m: &Matrix<T>) -> SvdFactors<T> {
    if m.is_empty() {
        return SvdFactors {
            u: Matrix::identity(m.rows()),
            sigma: Vec::new(),
            vt: Matrix::identity(m.cols()),
        };
    }
    if m.rows() < m.cols() {
        let f = jacobi_factors(&m.transpose());
        return SvdFactors { u: f.vt.transpose(), sigma: f.sigma, vt: f.u.transpose() };
    }

    let (rows, cols) = m.shape();
    let mut b: Vec<Vec<T>> = (0..cols).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect();
    let mut v: Vec<Vec<T>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();

    // Sweeps converge quadratically once the off-diagonal mass is small; 64
    // is far beyond what any input at these sizes needs.
    for _ in 0..64 {
        let mut rotated = false;
        for p in 0..cols - 1 {
            for q in p + 1..cols {
                let app = dot(&b[p], &b[p]);
                let aqq = dot(&b[q], &b[q]);
                let apq = dot(&b[p], &b[q]);
                if Float::abs(apq) <= T::epsilon() * Float::sqrt(app) * Float::sqrt(aqq) {
                    continue;
                }
                let tau = (aqq - app) / (T::of(2.0) * apq);
                let t = Float::signum(tau) / (Float::abs(tau) + Float::sqrt(T::one() + tau * tau));
                let cs = T::one() / Float::sqrt(T::one() + t * t);
                let sn = cs * t;
                rotate_pair(&mut b, p, q, cs, sn);
                rotate_pair(&mut v, p, q, cs, sn);
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<T> = b.iter().map(|col| Float::sqrt(dot(col, col))).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite singular values"));

    let mut u = Matrix::zeros(rows, cols);
    let mut vt = Matrix::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    let mut filled = 0;
    for (k, &j) in order.iter().enumerate() {
        sigma.push(norms[j]);
        for i in 0..cols {
            vt.set(k, i, v[j][i]);
        }
        if norms[j] > T::zero() {
            for i in 0..rows {
                u.set(i, k, b[j][i] / norms[j]);
            }
            filled = k + 1;
        }
    }
    complete_orthonormal(&mut u, filled);
    SvdFactors { u, sigma, vt }
}

fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

fn rotate_pair<T: Scalar>(data: &mut [Vec<T>], p: usize, q: usize, cs: T, sn: T) {
    let (head, tail) = data.split_at_mut(q);
    for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
        let (xi, yi) = (*x, *y);
        *x = cs * xi - sn * yi;
        *y = sn * xi + cs * yi;
    }
}

/// Fills columns `filled..` of `u` with unit vectors orthogonal to the ones
/// before them, taken from whichever canonical basis vector keeps the largest
/// residual after projection. Exactly zero singular values leave their left
/// vectors unconstrained; this pins them deterministically.
fn complete_orthonormal<T: Scalar>(u: &mut Matrix<T>, filled: usize) {
    let rows = u.rows();
    for k in filled..u.cols() {
        let mut best: Option<(T, Vec<T>)> = None;
        for cand in 0..rows {
            let mut w = vec![T::zero(); rows];
            w[cand] = T::one();
            for j in 0..k {
                let proj = (0..rows).fold(T::zero(), |acc, i| acc + u[(i, j)] * w[i]);
                for (i, wi) in w.iter_mut().enumerate() {
                    *wi = *wi - proj * u[(i, j)];
                }
            }
            let norm = Float::sqrt(dot(&w, &w));
            if best.as_ref().is_none_or(|(top, _)| norm > *top) {
                best = Some((norm, w));
            }
        }
        let (norm, w) = best.expect("column count never exceeds row count here");
        for (i, wi) in w.iter().enumerate() {
            u.set(i, k, *wi / norm);
        }
    }
}

/// Singular values in descending order.
pub fn singular_values<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    if m.is_empty() {
        return Vec::new();
    }
    m.to_na().svd(false, false).singular_values.iter().copied().collect()
}

/// Largest singular value; zero for matrices with an empty dimension.
pub fn op_norm<T: Scalar>(m: &Matrix<T>) -> T {
    singular_values(m).first().copied().unwrap_or_else(T::zero)
}

pub(crate) fn smallest_singular_value<T: Scalar>(m: &Matrix<T>) -> T {
    singular_values(m).last().copied().unwrap_or_else(T::zero)
}

fn count_above<T: Scalar>(sigma: &[T], rank_tol: T) -> usize {
    let Some(&smax) = sigma.first() else { return 0 };
    let floor = rank_tol * smax;
    sigma.iter().filter(|&&s| s > floor).count()
}

/// Numerical rank together with the singular values it was read from.
///
/// A value counts toward the rank when it exceeds `rank_tol` times the
/// largest one, so the zero matrix has rank zero for every tolerance.
pub fn svd_rank<T: Scalar>(m: &Matrix<T>, cfg: &ToleranceConfig<T>) -> (usize, Vec<T>) {
    let sigma = singular_values(m);
    (count_above(&sigma, cfg.rank_tol), sigma)
}

pub fn rank<T: Scalar>(m: &Matrix<T>, cfg: &ToleranceConfig<T>) -> usize {
    svd_rank(m, cfg).0
}

/// Moore-Penrose pseudoinverse, truncating singular values at the rank floor.
///
/// Square full-rank matrices are inverted by LU instead of from the singular
/// factors: the iterative SVD loses several digits on clustered singular
/// values, while LU with partial pivoting stays backward stable.
pub fn pinv<T: Scalar>(m: &Matrix<T>, cfg: &ToleranceConfig<T>) -> Matrix<T> {
    if m.is_square() && !m.is_empty() {
        let sigma = singular_values(m);
        if count_above(&sigma, cfg.rank_tol) == m.rows() {
            if let Some(inv) = m.to_na().lu().try_inverse() {
                return Matrix::from_na(&inv);
            }
        }
    }
    let SvdFactors { u, sigma, vt } = svd_factors(m);
    let r = count_above(&sigma, cfg.rank_tol);
    if r == 0 {
        return Matrix::zeros(m.cols(), m.rows());
    }
    let vr_t = vt.submatrix(0..r, 0..vt.cols());
    let ur = u.submatrix(0..u.rows(), 0..r);
    let inv_sigma: Vec<T> = sigma[..r].iter().map(|&s| T::one() / s).collect();
    vr_t.transpose() * Matrix::diagonal(&inv_sigma) * ur.transpose()
}

/// Invertibility flag plus the condition number `sigma_max / sigma_min`.
///
/// Invertible means square, full numerical rank, and condition number within
/// `cond_max`. Non-square and singular matrices report an infinite condition
/// number; the 0x0 matrix is invertible with condition number one.
pub fn is_invertible<T: Scalar>(m: &Matrix<T>, cfg: &ToleranceConfig<T>) -> (bool, T) {
    if !m.is_square() {
        return (false, T::infinity());
    }
    if m.rows() == 0 {
        return (true, T::one());
    }
    let sigma = singular_values(m);
    let smax = sigma[0];
    let smin = sigma[sigma.len() - 1];
    if smin <= T::zero() || smax <= T::zero() {
        return (false, T::infinity());
    }
    let cond = smax / smin;
    let full_rank = smin > cfg.rank_tol * smax;
    (full_rank && cond <= cfg.cond_max, cond)
}

/// Inverse of a matrix that passes [`is_invertible`]; `label` names the
/// offending block in the error when it does not.
pub fn inverse<T: Scalar>(
    m: &Matrix<T>,
    label: &str,
    cfg: &ToleranceConfig<T>,
) -> Result<Matrix<T>, CouplingError> {
    let (ok, cond) = is_invertible(m, cfg);
    if !ok {
        return Err(CouplingError::NotInvertible {
            block: label.to_string(),
            cond: cond.lossy_f64(),
            limit: cfg.cond_max.lossy_f64(),
        });
    }
    Ok(pinv(m, cfg))
}
