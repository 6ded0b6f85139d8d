//! Witness bundles: self-contained JSON artifacts carrying the certified
//! pair, the witness matrices, and the residual report recorded at save
//! time. Loading re-runs the verifier at the stored tolerance and refuses
//! bundles whose recomputed verdict disagrees with the recorded one.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use opcouple::couplings::{EaeWitness, McWitness, SchurCouplingWitness};
use opcouple::harness::{verify_eae, verify_mc, verify_sc, Relation, ResidualReport};
use opcouple::{Matrix64, Tolerances64};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixPayload {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixPayload {
    pub fn of(m: &Matrix64) -> Self {
        let mut data = Vec::with_capacity(m.rows() * m.cols());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                data.push(m[(i, j)]);
            }
        }
        MatrixPayload { rows: m.rows(), cols: m.cols(), data }
    }

    fn to_matrix(&self, key: &str) -> Result<Matrix64, CliError> {
        Matrix64::from_vec(self.rows, self.cols, self.data.clone())
            .map_err(|e| CliError::Usage(format!("bundle matrix {key:?}: {e}")))
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BundleDims {
    pub dim_x: usize,
    pub dim_y: usize,
    pub dim_x0: usize,
    pub dim_y0: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WitnessBundle {
    pub schema_version: String,
    pub relation: Relation,
    pub matrices: BTreeMap<String, MatrixPayload>,
    pub dims: BundleDims,
    pub provenance: String,
    pub report: ResidualReport,
}

/// A bundle's witness rebuilt into its typed form.
pub enum LoadedWitness {
    Sc(SchurCouplingWitness<f64>),
    Eae(EaeWitness<f64>),
    Mc(McWitness<f64>),
}

impl WitnessBundle {
    pub fn from_sc(
        w: &SchurCouplingWitness<f64>,
        u: &Matrix64,
        v: &Matrix64,
        provenance: String,
        report: ResidualReport,
    ) -> Self {
        let matrices = BTreeMap::from([
            ("s".into(), MatrixPayload::of(&w.s())),
            ("u".into(), MatrixPayload::of(u)),
            ("v".into(), MatrixPayload::of(v)),
        ]);
        let dims = BundleDims { dim_x: w.dim_x(), dim_y: w.dim_y(), dim_x0: 0, dim_y0: 0 };
        WitnessBundle {
            schema_version: SCHEMA_VERSION.into(),
            relation: Relation::Sc,
            matrices,
            dims,
            provenance,
            report,
        }
    }

    pub fn from_eae(w: &EaeWitness<f64>, provenance: String, report: ResidualReport) -> Self {
        let matrices = BTreeMap::from([
            ("e".into(), MatrixPayload::of(w.e())),
            ("f".into(), MatrixPayload::of(w.f())),
            ("einv".into(), MatrixPayload::of(w.einv())),
            ("finv".into(), MatrixPayload::of(w.finv())),
            ("u".into(), MatrixPayload::of(w.u())),
            ("v".into(), MatrixPayload::of(w.v())),
        ]);
        let dims = BundleDims {
            dim_x: w.dim_x(),
            dim_y: w.dim_y(),
            dim_x0: w.dim_x0(),
            dim_y0: w.dim_y0(),
        };
        WitnessBundle {
            schema_version: SCHEMA_VERSION.into(),
            relation: Relation::Eae,
            matrices,
            dims,
            provenance,
            report,
        }
    }

    pub fn from_mc(w: &McWitness<f64>, provenance: String, report: ResidualReport) -> Self {
        let matrices = BTreeMap::from([
            ("uHat".into(), MatrixPayload::of(&w.u_hat_matrix())),
            ("vHat".into(), MatrixPayload::of(&w.v_hat_matrix())),
            ("u".into(), MatrixPayload::of(w.u())),
            ("v".into(), MatrixPayload::of(w.v())),
        ]);
        let dims = BundleDims { dim_x: w.dim_x(), dim_y: w.dim_y(), dim_x0: 0, dim_y0: 0 };
        WitnessBundle {
            schema_version: SCHEMA_VERSION.into(),
            relation: Relation::Mc,
            matrices,
            dims,
            provenance,
            report,
        }
    }

    fn matrix(&self, key: &str) -> Result<Matrix64, CliError> {
        self.matrices
            .get(key)
            .ok_or_else(|| CliError::Usage(format!("bundle is missing matrix {key:?}")))?
            .to_matrix(key)
    }

    /// The certified pair, common to all three relations.
    pub fn pair(&self) -> Result<(Matrix64, Matrix64), CliError> {
        Ok((self.matrix("u")?, self.matrix("v")?))
    }

    /// Rebuilds the typed witness without numeric gates; verification is the
    /// caller's next step.
    pub fn instantiate(&self, cfg: &Tolerances64) -> Result<LoadedWitness, CliError> {
        let invalid =
            |e| CliError::Usage(format!("bundle is not a valid {} witness: {e}", self.relation));
        match self.relation {
            Relation::Sc => {
                let s = self.matrix("s")?;
                SchurCouplingWitness::assemble_unverified(&s, self.dims.dim_x, cfg)
                    .map(LoadedWitness::Sc)
                    .map_err(invalid)
            }
            Relation::Eae => {
                let (u, v) = self.pair()?;
                EaeWitness::assemble_unverified(
                    self.matrix("e")?,
                    self.matrix("f")?,
                    self.matrix("einv")?,
                    self.matrix("finv")?,
                    u,
                    v,
                    self.dims.dim_x0,
                    self.dims.dim_y0,
                )
                .map(LoadedWitness::Eae)
                .map_err(invalid)
            }
            Relation::Mc => {
                McWitness::assemble_unverified(
                    self.matrix("uHat")?,
                    self.matrix("vHat")?,
                    self.dims.dim_x,
                )
                .map(LoadedWitness::Mc)
                .map_err(invalid)
            }
        }
    }
}

pub fn reverify(
    w: &LoadedWitness,
    u: &Matrix64,
    v: &Matrix64,
    cfg: &Tolerances64,
) -> ResidualReport {
    match w {
        LoadedWitness::Sc(w) => verify_sc(w, u, v, cfg),
        LoadedWitness::Eae(w) => verify_eae(w, u, v, cfg),
        LoadedWitness::Mc(w) => verify_mc(w, u, v, cfg),
    }
}

/// JSON value of a bundle after checking every stored entry is finite;
/// non-finite entries would not round-trip through the text format.
pub fn checked_value(bundle: &WitnessBundle) -> Result<serde_json::Value, CliError> {
    for (key, payload) in &bundle.matrices {
        if payload.data.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Internal(format!(
                "matrix {key:?} has non-finite entries; refusing to serialize"
            )));
        }
    }
    serde_json::to_value(bundle)
        .map_err(|e| CliError::Internal(format!("bundle serialization: {e}")))
}

pub fn render(bundle: &WitnessBundle) -> Result<String, CliError> {
    let value = checked_value(bundle)?;
    serde_json::to_string_pretty(&value)
        .map_err(|e| CliError::Internal(format!("bundle serialization: {e}")))
}

/// Loads a bundle, rebuilds its witness, and replays the verifier at the
/// stored tolerance. A verdict that disagrees with the recorded pass flag
/// means the file was edited or built elsewhere: the bundle is stale.
pub fn load(
    path: &Path,
    cfg: &Tolerances64,
) -> Result<(WitnessBundle, LoadedWitness, Matrix64, Matrix64), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let bundle: WitnessBundle = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: schema error: {e}", path.display())))?;
    if bundle.schema_version != SCHEMA_VERSION {
        return Err(CliError::Usage(format!(
            "{}: schema version {:?} is not supported (expected {SCHEMA_VERSION:?})",
            path.display(),
            bundle.schema_version
        )));
    }
    let (u, v) = bundle.pair()?;
    let witness = bundle.instantiate(cfg)?;

    let mut stored_cfg = cfg.clone();
    stored_cfg.residual_tol = bundle.report.tolerance;
    let fresh = reverify(&witness, &u, &v, &stored_cfg);
    if fresh.pass != bundle.report.pass {
        return Err(CliError::Verification(format!(
            "{}: stale witness: stored report says pass={}, recomputation says pass={} \
             (worst residual {:e} at tolerance {:e})",
            path.display(),
            bundle.report.pass,
            fresh.pass,
            fresh.worst_residual(),
            bundle.report.tolerance
        )));
    }
    Ok((bundle, witness, u, v))
}
