//! Randomized round-trip suite: a fixed set of conversion and construction
//! properties exercised over many seeded trials in parallel. Per-trial
//! seeds are derived from the master seed, so the summary is identical
//! whether trials run serially or across threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::couplings::{
    eae_to_mc, eae_to_sc, mc_to_eae, sc_to_eae, sc_to_mc, seae_to_sc, smc_to_sc,
};
use crate::harness::gen::{
    derive_seed, random_coupled_pair, random_mc_witness, random_sc_witness,
    random_special_form_eae, random_with_rank,
};
use crate::harness::{verify_eae, verify_mc, verify_sc, Metric};
use crate::kernelroute::{witness_sc, RouteSelection};
use crate::matcore::ToleranceConfig;
use crate::scalar::Scalar;
use crate::CouplingError;

const SUITE_COND_CAP: f64 = 1e3;

/// Aggregate of one property across all its trials.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyOutcome {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    pub worst_residual: Metric,
    pub first_failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteSummary {
    pub seed: u64,
    pub properties: Vec<PropertyOutcome>,
    pub total_trials: usize,
    pub total_failures: usize,
}

impl SuiteSummary {
    pub fn all_passed(&self) -> bool {
        self.total_failures == 0
    }
}

fn run_property<F>(
    name: &str,
    index: u64,
    sizes: &[usize],
    trials: usize,
    master: u64,
    property: F,
) -> PropertyOutcome
where
    F: Fn(usize, u64) -> Result<f64, String> + Sync,
{
    let results: Vec<Result<f64, String>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let size = sizes[t % sizes.len()].max(1);
            property(size, derive_seed(master, (index << 32) ^ t as u64))
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count();
    let worst = results.iter().filter_map(|r| r.as_ref().ok().copied()).fold(0.0, f64::max);
    let first_failure = results.iter().find_map(|r| r.as_ref().err().cloned());
    PropertyOutcome {
        name: name.to_string(),
        trials,
        failures,
        worst_residual: Metric(worst),
        first_failure,
    }
}

fn failed(report: &crate::harness::ResidualReport, what: &str) -> String {
    format!("{what} failed verification (worst residual {:e})", report.worst_residual())
}

/// Runs every property `trials` times over the size list and aggregates the
/// outcomes. All witnesses are verified at `cfg.residual_tol`.
pub fn roundtrip_suite<T: Scalar>(
    sizes: &[usize],
    trials: usize,
    cfg: &ToleranceConfig<T>,
    seed: u64,
) -> SuiteSummary {
    assert!(!sizes.is_empty(), "need at least one size");
    let cap = T::of(SUITE_COND_CAP);

    let sc_conversions = |n: usize, s: u64| -> Result<f64, String> {
        let w = random_sc_witness::<T>(n, n, cap, s, cfg);
        let eae = sc_to_eae(&w, cfg).map_err(|e| e.to_string())?;
        let rep_e = verify_eae(&eae, w.coupled_u(), w.coupled_v(), cfg);
        if !rep_e.pass {
            return Err(failed(&rep_e, "sc_to_eae witness"));
        }
        let mc = sc_to_mc(&w, cfg).map_err(|e| e.to_string())?;
        let rep_m = verify_mc(&mc, w.coupled_u(), w.coupled_v(), cfg);
        if !rep_m.pass {
            return Err(failed(&rep_m, "sc_to_mc witness"));
        }
        Ok(rep_e.worst_residual().max(rep_m.worst_residual()))
    };

    let mc_eae_round_trip = |n: usize, s: u64| -> Result<f64, String> {
        let mc = random_mc_witness::<T>(n, n + 1, cap, s, cfg);
        let eae = mc_to_eae(&mc, cfg).map_err(|e| e.to_string())?;
        let rep_e = verify_eae(&eae, mc.u(), mc.v(), cfg);
        if !rep_e.pass {
            return Err(failed(&rep_e, "mc_to_eae witness"));
        }
        let back = eae_to_mc(&eae, cfg).map_err(|e| e.to_string())?;
        let rep_m = verify_mc(&back, mc.u(), mc.v(), cfg);
        if !rep_m.pass {
            return Err(failed(&rep_m, "eae_to_mc round trip"));
        }
        Ok(rep_e.worst_residual().max(rep_m.worst_residual()))
    };

    let strong_recovery = |n: usize, s: u64| -> Result<f64, String> {
        let mc = random_mc_witness::<T>(n, n, cap, s, cfg);
        let worst_mc = match smc_to_sc(&mc, cfg) {
            Ok(sc) => {
                let rep = verify_sc(&sc, mc.u(), mc.v(), cfg);
                if !rep.pass {
                    return Err(failed(&rep, "smc_to_sc witness"));
                }
                rep.worst_residual()
            }
            // A random coupling matrix can have a numerically singular
            // corner; refusing it is correct behavior, not a failure.
            Err(CouplingError::NotStrong(_)) | Err(CouplingError::NotInvertible { .. }) => 0.0,
            Err(e) => return Err(e.to_string()),
        };

        let w = random_sc_witness::<T>(n, n, cap, s ^ 0x5bd1_e995, cfg);
        let eae = sc_to_eae(&w, cfg).map_err(|e| e.to_string())?;
        let back = seae_to_sc(&eae, cfg).map_err(|e| e.to_string())?;
        let rep = verify_sc(&back, w.coupled_u(), w.coupled_v(), cfg);
        if !rep.pass {
            return Err(failed(&rep, "seae_to_sc witness"));
        }
        Ok(worst_mc.max(rep.worst_residual()))
    };

    let upgrade_pipeline = |n: usize, s: u64| -> Result<f64, String> {
        let nullity = n.min(2);
        let w = random_special_form_eae::<T>(n, n + 1, nullity, cap, s, cfg);
        let sc = eae_to_sc(w.as_eae(), cfg).map_err(|e| e.to_string())?;
        let rep = verify_sc(&sc, w.u(), w.v(), cfg);
        if !rep.pass {
            return Err(failed(&rep, "eae_to_sc pipeline witness"));
        }
        Ok(rep.worst_residual())
    };

    let kernel_routes = |n: usize, s: u64| -> Result<f64, String> {
        let (u, v) = random_coupled_pair::<T>(n, n + 1, n.min(1), cap, s);
        let set = witness_sc(&u, &v, RouteSelection::Both, cfg).map_err(|e| e.to_string())?;
        let wa = set.route_a.ok_or("route A missing")?;
        let wb = set.route_b.ok_or("route B missing")?;
        let rep_a = verify_sc(&wa, &u, &v, cfg);
        let rep_b = verify_sc(&wb, &u, &v, cfg);
        if !rep_a.pass || !rep_b.pass {
            return Err("route witness failed re-verification".to_string());
        }

        // A full-rank V against a singular U must be refused.
        let v_bad = random_with_rank::<T>(n + 1, n + 1, cap, derive_seed(s, 1));
        match witness_sc(&u, &v_bad, RouteSelection::Both, cfg) {
            Err(CouplingError::NotCoupled(_)) => {}
            Ok(_) => return Err("uncoupled pair produced witnesses".to_string()),
            Err(e) => return Err(format!("expected NotCoupled, got {e}")),
        }
        Ok(rep_a.worst_residual().max(rep_b.worst_residual()))
    };

    let flip_symmetry = |n: usize, s: u64| -> Result<f64, String> {
        let w = random_sc_witness::<T>(n, n + 2, cap, s, cfg);
        let flipped = w.flip();
        let rep = verify_sc(&flipped, w.coupled_v(), w.coupled_u(), cfg);
        if !rep.pass {
            return Err(failed(&rep, "flipped witness"));
        }
        Ok(rep.worst_residual())
    };

    let properties = vec![
        run_property("sc_conversions_verify", 1, sizes, trials, seed, sc_conversions),
        run_property("mc_eae_round_trip", 2, sizes, trials, seed, mc_eae_round_trip),
        run_property("strong_witnesses_recover_pair", 3, sizes, trials, seed, strong_recovery),
        run_property("upgrade_pipeline_reaches_sc", 4, sizes, trials, seed, upgrade_pipeline),
        run_property("kernel_routes_decide_and_verify", 5, sizes, trials, seed, kernel_routes),
        run_property("flip_swaps_coupled_pair", 6, sizes, trials, seed, flip_symmetry),
    ];

    let total_trials = properties.iter().map(|p| p.trials).sum();
    let total_failures = properties.iter().map(|p| p.failures).sum();
    SuiteSummary { seed, properties, total_trials, total_failures }
}
