//! Deterministic random instance generators. Every public generator takes a
//! `u64` seed and owns its generator state, so instances are reproducible
//! across threads and runs.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::couplings::{mc_to_eae, McWitness, SchurCouplingWitness, SpecialFormEae};
use crate::couplings::normal_form::gauge_eae;
use crate::kernelroute::{gi_strong_mc, kernel_data, kernel_isos};
use crate::matcore::{Matrix, ToleranceConfig};
use crate::scalar::Scalar;

/// SplitMix64 step: derives an independent stream seed from a master seed,
/// so parallel trials stay reproducible regardless of scheduling.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Matrix with independent standard normal entries.
pub fn random_gaussian<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Matrix<T> {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let x: f64 = StandardNormal.sample(rng);
            m.set(i, j, T::of(x));
        }
    }
    m
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs fixed so the `R` factor has a positive diagonal.
pub fn random_orthogonal<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix<T> {
    if n == 0 {
        return Matrix::identity(0);
    }
    let g = random_gaussian::<T, _>(n, n, rng);
    let qr = g.to_na().qr();
    let r = qr.r();
    let mut q = Matrix::from_na(&qr.q());
    for j in 0..n {
        if r[(j, j)] < T::zero() {
            for i in 0..n {
                let flipped = -q[(i, j)];
                q.set(i, j, flipped);
            }
        }
    }
    q
}

fn log_uniform_values<T: Scalar, R: Rng + ?Sized>(
    count: usize,
    cond_cap: T,
    rng: &mut R,
) -> Vec<T> {
    let ln_cap = Float::ln(cond_cap);
    let mut values: Vec<T> =
        (0..count).map(|_| Float::exp(T::of(rng.random::<f64>()) * ln_cap)).collect();
    values.sort_by(|a, b| b.partial_cmp(a).expect("spectrum values are finite"));
    values
}

/// `n x n` matrix of the given rank whose nonzero singular values are drawn
/// log-uniformly from `[1, cond_cap]` and applied between two random
/// orthogonal factors.
pub fn random_with_rank<T: Scalar>(
    n: usize,
    rank: usize,
    cond_cap: T,
    seed: u64,
) -> Matrix<T> {
    assert!(rank <= n, "rank {rank} exceeds size {n}");
    assert!(cond_cap >= T::one(), "condition cap must be at least one");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rank_deficient(n, rank, cond_cap, T::one(), &mut rng)
}

fn rank_deficient<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    rank: usize,
    cond_cap: T,
    scale: T,
    rng: &mut R,
) -> Matrix<T> {
    let q1 = random_orthogonal::<T, _>(n, rng);
    let q2 = random_orthogonal::<T, _>(n, rng);
    let mut sigma = log_uniform_values(rank, cond_cap, rng);
    for s in &mut sigma {
        *s = *s * scale;
    }
    sigma.resize(n, T::zero());
    &q1 * Matrix::diagonal(&sigma) * q2.transpose()
}

/// Invertible matrix with condition number at most `cond_cap` and spectrum
/// centered around one, so products of several such factors stay
/// well-scaled.
fn balanced_invertible<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    cond_cap: T,
    rng: &mut R,
) -> Matrix<T> {
    let center = T::one() / Float::sqrt(cond_cap);
    rank_deficient(n, n, cond_cap, center, rng)
}

fn balanced_rank_deficient<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    rank: usize,
    cond_cap: T,
    rng: &mut R,
) -> Matrix<T> {
    let center = T::one() / Float::sqrt(cond_cap);
    rank_deficient(n, rank, cond_cap, center, rng)
}

/// Schur coupling witness with well-conditioned diagonal blocks
/// (`cond <= cond_cap`, spectrum centered around one) and Gaussian
/// off-diagonal blocks scaled to unit operator norm.
pub fn random_sc_witness<T: Scalar>(
    n: usize,
    m: usize,
    cond_cap: T,
    seed: u64,
    cfg: &ToleranceConfig<T>,
) -> SchurCouplingWitness<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = balanced_invertible(n, cond_cap, &mut rng);
    let d = balanced_invertible(m, cond_cap, &mut rng);
    let off_scale = T::of(1.0 / (n.max(m).max(1) as f64).sqrt());
    let b = random_gaussian::<T, _>(n, m, &mut rng).scale(off_scale);
    let c = random_gaussian::<T, _>(m, n, &mut rng).scale(off_scale);
    SchurCouplingWitness::from_blocks(a, b, c, d, cfg)
        .expect("generated diagonal blocks are invertible by construction")
}

/// Matricial coupling witness from a random well-conditioned coupling
/// matrix.
pub fn random_mc_witness<T: Scalar>(
    n: usize,
    m: usize,
    cond_cap: T,
    seed: u64,
    cfg: &ToleranceConfig<T>,
) -> McWitness<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u_hat = balanced_invertible(n + m, cond_cap, &mut rng);
    McWitness::new(u_hat, n, cfg).expect("generated coupling matrix is invertible")
}

/// Coupled pair: `U` of size `n` and `V` of size `m`, both with the given
/// nullity (square, so the conullities match automatically).
pub fn random_coupled_pair<T: Scalar>(
    n: usize,
    m: usize,
    nullity: usize,
    cond_cap: T,
    seed: u64,
) -> (Matrix<T>, Matrix<T>) {
    assert!(nullity <= n.min(m), "nullity {nullity} exceeds min size {}", n.min(m));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = balanced_rank_deficient(n, n - nullity, cond_cap, &mut rng);
    let v = balanced_rank_deficient(m, m - nullity, cond_cap, &mut rng);
    (u, v)
}

/// Special-form witness for a random coupled pair with singular operators:
/// built through the strong coupling construction, converted, then hidden
/// behind a random gauge so the factors carry no visible structure.
pub fn random_special_form_eae<T: Scalar>(
    n: usize,
    m: usize,
    nullity: usize,
    cond_cap: T,
    seed: u64,
    cfg: &ToleranceConfig<T>,
) -> SpecialFormEae<T> {
    assert!(nullity <= n.min(m), "nullity {nullity} exceeds min size {}", n.min(m));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = balanced_rank_deficient(n, n - nullity, cond_cap, &mut rng);
    let v = balanced_rank_deficient(m, m - nullity, cond_cap, &mut rng);

    let du = kernel_data(&u, cfg);
    let dv = kernel_data(&v, cfg);
    let (k, _) = kernel_isos(&du, &dv).expect("equal nullities by construction");
    let mc = gi_strong_mc(&u, &v, &k, &du, &dv, cfg).expect("pair is coupled by construction");
    let eae = mc_to_eae(&mc, cfg).expect("strong coupling always converts");
    let special = SpecialFormEae::try_new(eae, cfg).expect("conversion lands in special form");

    let xg = random_gaussian::<T, _>(m, n, &mut rng).scale(T::of(0.5));
    let yg = random_gaussian::<T, _>(n, m, &mut rng).scale(T::of(0.5));
    let gauged = gauge_eae(special.as_eae(), &xg, &yg, cfg).expect("gauge keeps the witness valid");
    SpecialFormEae::try_new(gauged, cfg).expect("gauge preserves the special form")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{op_norm, rank, singular_values};

    fn cfg() -> ToleranceConfig<f64> {
        ToleranceConfig::default()
    }

    #[test]
    fn derive_seed_separates_streams() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        let c = derive_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(42, 0));
    }

    #[test]
    fn orthogonal_means_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = random_orthogonal::<f64, _>(6, &mut rng);
        let gram = q.transpose() * &q;
        assert!((&gram - Matrix::identity(6)).max_abs() < 1e-12);
    }

    #[test]
    fn with_rank_hits_the_rank_and_the_cap() {
        let m = random_with_rank::<f64>(8, 5, 1e3, 123);
        assert_eq!(rank(&m, &cfg()), 5);
        let sv = singular_values(&m);
        assert!(sv[0] <= 1e3 * (1.0 + 1e-12));
        assert!(sv[4] >= 1.0 - 1e-9);
        assert!(sv[5] < 1e-9);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_with_rank::<f64>(6, 6, 100.0, 9);
        let b = random_with_rank::<f64>(6, 6, 100.0, 9);
        assert!((&a - &b).max_abs() == 0.0);
        let c = random_with_rank::<f64>(6, 6, 100.0, 10);
        assert!((&a - &c).max_abs() > 0.0);
    }

    #[test]
    fn sc_witness_blocks_are_well_conditioned() {
        let w = random_sc_witness::<f64>(5, 7, 1e3, 11, &cfg());
        assert!(w.cond_a() <= 1e3 * (1.0 + 1e-9));
        assert!(w.cond_d() <= 1e3 * (1.0 + 1e-9));
        assert_eq!(w.dim_x(), 5);
        assert_eq!(w.dim_y(), 7);
        // Balanced spectrum: norms of A and A^-1 agree up to the cap root.
        assert!(op_norm(w.a()) <= 1e3f64.sqrt() * (1.0 + 1e-9));
    }

    #[test]
    fn coupled_pair_has_matching_nullities() {
        let (u, v) = random_coupled_pair::<f64>(6, 9, 2, 1e3, 21);
        let c = cfg();
        assert_eq!(rank(&u, &c), 4);
        assert_eq!(rank(&v, &c), 7);
    }

    #[test]
    fn special_form_generator_survives_its_own_checks() {
        let c = cfg();
        let w = random_special_form_eae::<f64>(4, 5, 2, 1e2, 33, &c);
        assert_eq!(w.dim_x(), 4);
        assert_eq!(w.dim_y(), 5);
        assert_eq!(w.dim_x0(), 5);
        assert_eq!(w.dim_y0(), 4);
        let rep = crate::harness::verify_eae(&w, w.u(), w.v(), &c);
        assert!(rep.pass, "residuals: {:?}", rep.residuals);
        assert_eq!(rank(w.u(), &c), 2);
    }
}
