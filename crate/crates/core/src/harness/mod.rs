//! Residual-based verification and the randomized testing harness.
//!
//! Verifiers never fail with an error: whatever state a witness is in, they
//! produce a [`ResidualReport`] whose `pass` flag summarizes every check at
//! the configured tolerance. Residuals that cannot be evaluated (a required
//! inverse does not exist, dimensions disagree) are reported as infinite.

pub mod gen;
pub mod suite;

pub use gen::{
    derive_seed, random_coupled_pair, random_gaussian, random_mc_witness, random_orthogonal,
    random_sc_witness, random_special_form_eae, random_with_rank,
};
pub use suite::{roundtrip_suite, PropertyOutcome, SuiteSummary};

use std::fmt;

use num_traits::Float;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::couplings::{EaeWitness, McWitness, SchurCouplingWitness};
use crate::matcore::{is_invertible, op_norm, pinv, Matrix, ToleranceConfig};
use crate::scalar::Scalar;

/// Which of the three relations a report speaks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "SC")]
    Sc,
    #[serde(rename = "EAE")]
    Eae,
    #[serde(rename = "MC")]
    Mc,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Sc => "SC",
            Relation::Eae => "EAE",
            Relation::Mc => "MC",
        })
    }
}

/// A nonnegative measurement that may legitimately be infinite. Serialized
/// as a plain number when finite and as `"inf"`, `"-inf"` or `"nan"`
/// otherwise, so reports survive JSON round trips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric(pub f64);

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0.is_nan() {
            s.serialize_str("nan")
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct MetricVisitor;
        impl Visitor<'_> for MetricVisitor {
            type Value = Metric;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Metric, E> {
                Ok(Metric(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Metric, E> {
                Ok(Metric(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Metric, E> {
                Ok(Metric(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Metric, E> {
                v.parse::<f64>().map(Metric).map_err(|_| {
                    de::Error::invalid_value(de::Unexpected::Str(v), &self)
                })
            }
        }
        d.deserialize_any(MetricVisitor)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedMetric {
    pub label: String,
    pub value: Metric,
}

fn metric(label: &str, value: f64) -> NamedMetric {
    NamedMetric { label: label.to_string(), value: Metric(value) }
}

/// Everything a verifier measured, plus the verdict at `tolerance`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualReport {
    pub relation: Relation,
    pub residuals: Vec<NamedMetric>,
    pub conditions: Vec<NamedMetric>,
    pub pass: bool,
    pub tolerance: f64,
}

impl ResidualReport {
    pub fn worst_residual(&self) -> f64 {
        self.residuals.iter().map(|m| m.value.0).fold(0.0, f64::max)
    }
}

fn mismatch_report(relation: Relation, tolerance: f64, label: &str) -> ResidualReport {
    ResidualReport {
        relation,
        residuals: vec![metric(label, f64::INFINITY)],
        conditions: vec![],
        pass: false,
        tolerance,
    }
}

fn operator_scale<T: Scalar>(u: &Matrix<T>, v: &Matrix<T>) -> T {
    [op_norm(u), op_norm(v), T::one()].into_iter().fold(T::zero(), Float::max)
}

fn inverse_pair_residual<T: Scalar>(m: &Matrix<T>, minv: &Matrix<T>) -> f64 {
    let k = m.rows();
    let resid = op_norm(&(m * minv - Matrix::identity(k)));
    let scale = Float::max(op_norm(m) * op_norm(minv), T::one());
    (resid / scale).lossy_f64()
}

/// Checks that `S` has invertible diagonal blocks whose Schur complements
/// reproduce `u` and `v`. Complement residuals are relative to
/// `max(|u|, |v|, 1)`; the inverses are recomputed here rather than taken
/// from the witness cache.
pub fn verify_sc<T: Scalar>(
    w: &SchurCouplingWitness<T>,
    u: &Matrix<T>,
    v: &Matrix<T>,
    cfg: &ToleranceConfig<T>,
) -> ResidualReport {
    let tolerance = cfg.residual_tol.lossy_f64();
    if u.shape() != (w.dim_x(), w.dim_x()) || v.shape() != (w.dim_y(), w.dim_y()) {
        return mismatch_report(Relation::Sc, tolerance, "dimensions");
    }
    let blocks = w.blocks();
    let (ok_a, cond_a) = is_invertible(blocks.a11(), cfg);
    let (ok_d, cond_d) = is_invertible(blocks.a22(), cfg);
    let scale = operator_scale(u, v);

    let res_u = if ok_d {
        let d_inv = pinv(blocks.a22(), cfg);
        let complement = blocks.a11() - blocks.a12() * &d_inv * blocks.a21();
        (op_norm(&(u - &complement)) / scale).lossy_f64()
    } else {
        f64::INFINITY
    };
    let res_v = if ok_a {
        let a_inv = pinv(blocks.a11(), cfg);
        let complement = blocks.a22() - blocks.a21() * &a_inv * blocks.a12();
        (op_norm(&(v - &complement)) / scale).lossy_f64()
    } else {
        f64::INFINITY
    };

    let pass = ok_a && ok_d && res_u <= tolerance && res_v <= tolerance;
    ResidualReport {
        relation: Relation::Sc,
        residuals: vec![
            metric("u_schur_complement", res_u),
            metric("v_schur_complement", res_v),
        ],
        conditions: vec![
            metric("cond_a", cond_a.lossy_f64()),
            metric("cond_d", cond_d.lossy_f64()),
        ],
        pass,
        tolerance,
    }
}

/// Checks the extension identity `diag(u, I) = E diag(v, I) F` together
/// with both cached inverse pairs and the invertibility of the factors.
pub fn verify_eae<T: Scalar>(
    w: &EaeWitness<T>,
    u: &Matrix<T>,
    v: &Matrix<T>,
    cfg: &ToleranceConfig<T>,
) -> ResidualReport {
    let tolerance = cfg.residual_tol.lossy_f64();
    if u.shape() != (w.dim_x(), w.dim_x()) || v.shape() != (w.dim_y(), w.dim_y()) {
        return mismatch_report(Relation::Eae, tolerance, "dimensions");
    }
    let ext_u = Matrix::block_diag(&[u, &Matrix::identity(w.dim_x0())]);
    let ext_v = Matrix::block_diag(&[v, &Matrix::identity(w.dim_y0())]);
    let scale = operator_scale(u, v);
    let res_identity =
        (op_norm(&(&ext_u - w.e() * ext_v * w.f())) / scale).lossy_f64();
    let res_e = inverse_pair_residual(w.e(), w.einv());
    let res_f = inverse_pair_residual(w.f(), w.finv());
    let (ok_e, cond_e) = is_invertible(w.e(), cfg);
    let (ok_f, cond_f) = is_invertible(w.f(), cfg);

    let pass = ok_e
        && ok_f
        && res_identity <= tolerance
        && res_e <= tolerance
        && res_f <= tolerance;
    ResidualReport {
        relation: Relation::Eae,
        residuals: vec![
            metric("extension_identity", res_identity),
            metric("e_inverse_pair", res_e),
            metric("f_inverse_pair", res_f),
        ],
        conditions: vec![
            metric("cond_e", cond_e.lossy_f64()),
            metric("cond_f", cond_f.lossy_f64()),
        ],
        pass,
        tolerance,
    }
}

/// Checks that the coupling matrix is invertible with the stored inverse
/// and that its corners reproduce `u` and `v`.
pub fn verify_mc<T: Scalar>(
    w: &McWitness<T>,
    u: &Matrix<T>,
    v: &Matrix<T>,
    cfg: &ToleranceConfig<T>,
) -> ResidualReport {
    let tolerance = cfg.residual_tol.lossy_f64();
    if u.shape() != (w.dim_x(), w.dim_x()) || v.shape() != (w.dim_y(), w.dim_y()) {
        return mismatch_report(Relation::Mc, tolerance, "dimensions");
    }
    let u_hat = w.u_hat_matrix();
    let v_hat = w.v_hat_matrix();
    let scale = operator_scale(u, v);
    let res_pair = inverse_pair_residual(&u_hat, &v_hat);
    let res_u = (op_norm(&(u - w.u_hat().a11())) / scale).lossy_f64();
    let res_v = (op_norm(&(v - w.v_hat().a22())) / scale).lossy_f64();
    let (ok, cond) = is_invertible(&u_hat, cfg);

    let pass = ok && res_pair <= tolerance && res_u <= tolerance && res_v <= tolerance;
    ResidualReport {
        relation: Relation::Mc,
        residuals: vec![
            metric("inverse_pair", res_pair),
            metric("u_corner", res_u),
            metric("v_corner", res_v),
        ],
        conditions: vec![metric("cond_u_hat", cond.lossy_f64())],
        pass,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{sc_to_eae, sc_to_mc};

    fn cfg() -> ToleranceConfig<f64> {
        ToleranceConfig::default()
    }

    fn sc_2112() -> SchurCouplingWitness<f64> {
        let s = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]]).unwrap();
        SchurCouplingWitness::new(&s, 1, &cfg()).unwrap()
    }

    #[test]
    fn verify_sc_accepts_the_scalar_witness() {
        let w = sc_2112();
        let rep = verify_sc(&w, w.coupled_u(), w.coupled_v(), &cfg());
        assert!(rep.pass);
        assert!(rep.worst_residual() < 1e-14);
        assert_eq!(rep.relation, Relation::Sc);
    }

    #[test]
    fn verify_sc_measures_a_wrong_u() {
        // S = I with split 1 has U = 1; claiming U = 2 leaves residual
        // |2 - 1| / max(|2|, |1|, 1) = 0.5.
        let w = SchurCouplingWitness::new(&Matrix::identity(2), 1, &cfg()).unwrap();
        let two = Matrix::from_rows(&[&[2.0]]).unwrap();
        let one = Matrix::identity(1);
        let rep = verify_sc(&w, &two, &one, &cfg());
        assert!(!rep.pass);
        assert!((rep.residuals[0].value.0 - 0.5).abs() < 1e-15);
        assert!(rep.residuals[1].value.0 < 1e-15);
    }

    #[test]
    fn verify_sc_flags_dimension_mismatch() {
        let w = sc_2112();
        let rep = verify_sc(&w, &Matrix::identity(3), w.coupled_v(), &cfg());
        assert!(!rep.pass);
        assert!(rep.residuals[0].value.0.is_infinite());
    }

    #[test]
    fn verify_eae_accepts_a_converted_witness() {
        let w = sc_2112();
        let eae = sc_to_eae(&w, &cfg()).unwrap();
        let rep = verify_eae(&eae, w.coupled_u(), w.coupled_v(), &cfg());
        assert!(rep.pass, "residuals: {:?}", rep.residuals);
    }

    #[test]
    fn verify_eae_catches_a_tampered_factor() {
        let w = sc_2112();
        let eae = sc_to_eae(&w, &cfg()).unwrap();
        let mut e = eae.e().clone();
        e.set(0, 0, e[(0, 0)] + 0.25);
        let tampered = EaeWitness::assemble_unverified(
            e,
            eae.f().clone(),
            eae.einv().clone(),
            eae.finv().clone(),
            eae.u().clone(),
            eae.v().clone(),
            eae.dim_x0(),
            eae.dim_y0(),
        )
        .unwrap();
        let rep = verify_eae(&tampered, w.coupled_u(), w.coupled_v(), &cfg());
        assert!(!rep.pass);
        assert!(rep.worst_residual() > 0.01);
    }

    #[test]
    fn verify_mc_accepts_and_rejects() {
        let w = sc_2112();
        let mc = sc_to_mc(&w, &cfg()).unwrap();
        let rep = verify_mc(&mc, w.coupled_u(), w.coupled_v(), &cfg());
        assert!(rep.pass);

        let wrong_u = Matrix::from_rows(&[&[5.0]]).unwrap();
        let rep = verify_mc(&mc, &wrong_u, w.coupled_v(), &cfg());
        assert!(!rep.pass);
    }

    #[test]
    fn metric_serialization_round_trips() {
        let values = [1.5, 0.0, f64::INFINITY, f64::NEG_INFINITY];
        for v in values {
            let json = serde_json::to_string(&Metric(v)).unwrap();
            let back: Metric = serde_json::from_str(&json).unwrap();
            assert_eq!(back.0, v, "through {json}");
        }
        let nan_json = serde_json::to_string(&Metric(f64::NAN)).unwrap();
        assert_eq!(nan_json, "\"nan\"");
        let back: Metric = serde_json::from_str(&nan_json).unwrap();
        assert!(back.0.is_nan());
    }

    #[test]
    fn report_serialization_keeps_labels() {
        let w = sc_2112();
        let rep = verify_sc(&w, w.coupled_u(), w.coupled_v(), &cfg());
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"relation\":\"SC\""));
        assert!(json.contains("u_schur_complement"));
        let back: ResidualReport = serde_json::from_str(&json).unwrap();
        assert!(back.pass);
        assert_eq!(back.tolerance, rep.tolerance);
    }
}
