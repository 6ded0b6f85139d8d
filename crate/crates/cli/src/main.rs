//! Command-line front end: decide coupling, construct witnesses, convert
//! and re-verify stored bundles, and run the demo profiles.
//!
//! Exit codes: 0 success, 1 internal failure, 2 usage or malformed input,
//! 3 operators not coupled (verdict JSON on standard output), 4 verification
//! failure including stale bundles.

mod bundle;
mod matfile;

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use opcouple::couplings::{
    eae_to_mc, eae_to_sc, mc_strong_flags, mc_to_eae, sc_to_eae, sc_to_mc, smc_to_sc,
    SchurCouplingWitness,
};
use opcouple::diagnostics::example_profile_report;
use opcouple::harness::{random_with_rank, roundtrip_suite, verify_sc, Relation};
use opcouple::kernelroute::{decide_coupling, witness_sc, CouplingVerdict, RouteSelection};
use opcouple::{CouplingError, Matrix64, Tolerances64};

use bundle::{LoadedWitness, WitnessBundle};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    NotCoupled(CouplingVerdict),
    Verification(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Usage(_) => 2,
            CliError::NotCoupled(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Internal(msg) | CliError::Verification(msg) => {
                f.write_str(msg)
            }
            CliError::NotCoupled(verdict) => write!(f, "not coupled: {verdict}"),
        }
    }
}

impl From<CouplingError> for CliError {
    fn from(e: CouplingError) -> Self {
        match e {
            CouplingError::NotCoupled(verdict) => CliError::NotCoupled(verdict),
            CouplingError::WitnessRejected(msg) => CliError::Verification(msg),
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "opcouple", version, about = "Operator coupling witnesses from the command line")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Numerical-rank threshold, relative to the largest singular value.
    #[arg(long, global = true, default_value_t = 1e-9)]
    rank_tol: f64,

    /// Condition-number ceiling for the invertibility gates.
    #[arg(long, global = true, default_value_t = 1e12)]
    cond_max: f64,

    /// Relative residual tolerance for verification.
    #[arg(long, global = true, default_value_t = 1e-8)]
    residual_tol: f64,

    /// Starting perturbation for the strong-form upgrade.
    #[arg(long, global = true, default_value_t = 1e-3)]
    delta_init: f64,

    /// Retry budget for the strong-form upgrade.
    #[arg(long, global = true, default_value_t = 40)]
    max_halvings: u32,

    /// Write the produced artifact to this file as well.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Print the machine-readable artifact instead of a human summary.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RelArg {
    Sc,
    Eae,
    Mc,
}

impl From<RelArg> for Relation {
    fn from(r: RelArg) -> Relation {
        match r {
            RelArg::Sc => Relation::Sc,
            RelArg::Eae => Relation::Eae,
            RelArg::Mc => Relation::Mc,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    A,
    B,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether two square operators are coupled (equal kernel and
    /// cokernel dimensions). Exit 0 when coupled, 3 with a verdict otherwise.
    Decide { u: PathBuf, v: PathBuf },

    /// Construct verified Schur coupling witnesses for a pair of operators.
    /// With --route both the artifact holds one bundle per route.
    Witness {
        u: PathBuf,
        v: PathBuf,
        #[arg(long, value_enum, default_value_t = RouteArg::Both)]
        route: RouteArg,
    },

    /// Convert a stored bundle to another relation through the library
    /// constructions; the result is re-verified before it is written.
    Convert {
        #[arg(long, value_enum)]
        from: RelArg,
        #[arg(long, value_enum)]
        to: RelArg,
        bundle: PathBuf,
    },

    /// Re-verify a stored bundle against a pair of operator files.
    Verify { bundle: PathBuf, u: PathBuf, v: PathBuf },

    /// Threshold-kernel profile of the block-shift truncation example:
    /// CSV columns eps, dimK, dimKtilde (full report with --json).
    DemoExample {
        /// Identity block size inside the seed block.
        #[arg(long)]
        d: usize,
        /// Number of 1/n diagonal values inside the seed block.
        #[arg(long)]
        k: usize,
        /// Number of stacked copies.
        #[arg(long = "N")]
        shifts: usize,
        /// Comma-separated thresholds; sorted ascending before use.
        #[arg(long, value_delimiter = ',', required = true)]
        eps_grid: Vec<f64>,
    },

    /// Write a random square matrix with planted rank in the text format.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ratio between the largest and smallest planted singular value.
        #[arg(long, default_value_t = 1e3)]
        cond_cap: f64,
    },

    /// Run the randomized round-trip suite and report per-property outcomes.
    Suite {
        #[arg(long, value_delimiter = ',', default_value = "2,5,9")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 25)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if let CliError::NotCoupled(verdict) = &err {
                match serde_json::to_string_pretty(verdict) {
                    Ok(json) => print_line(&json),
                    Err(e) => eprintln!("error: verdict serialization: {e}"),
                }
            }
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = tolerances(cli)?;
    match &cli.command {
        Command::Decide { u, v } => decide(cli, &cfg, u, v),
        Command::Witness { u, v, route } => witness(cli, &cfg, u, v, *route),
        Command::Convert { from, to, bundle } => convert(cli, &cfg, *from, *to, bundle),
        Command::Verify { bundle, u, v } => verify(cli, &cfg, bundle, u, v),
        Command::DemoExample { d, k, shifts, eps_grid } => {
            demo_example(cli, &cfg, *d, *k, *shifts, eps_grid)
        }
        Command::Random { n, rank, seed, cond_cap } => {
            random(cli, *n, *rank, *seed, *cond_cap)
        }
        Command::Suite { sizes, trials, seed } => suite(cli, &cfg, sizes, *trials, *seed),
    }
}

fn tolerances(cli: &Cli) -> Result<Tolerances64, CliError> {
    for (name, value) in [
        ("--rank-tol", cli.rank_tol),
        ("--residual-tol", cli.residual_tol),
        ("--delta-init", cli.delta_init),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(CliError::Usage(format!("{name} must be a positive number, got {value}")));
        }
    }
    if !(cli.cond_max.is_finite() && cli.cond_max >= 1.0) {
        return Err(CliError::Usage(format!("--cond-max must be at least 1, got {}", cli.cond_max)));
    }
    Ok(Tolerances64 {
        rank_tol: cli.rank_tol,
        cond_max: cli.cond_max,
        residual_tol: cli.residual_tol,
        delta_init: cli.delta_init,
        max_halvings: cli.max_halvings,
    })
}

/// Prints a line to standard output, swallowing broken-pipe errors so that
/// truncating consumers like `head` do not turn into panics.
fn print_line(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

/// Writes the artifact to --out when given, then prints either the artifact
/// (--json) or the human summary.
fn emit(cli: &Cli, artifact: &str, human: &str) -> Result<(), CliError> {
    if let Some(path) = &cli.out {
        let mut contents = artifact.to_string();
        if !contents.ends_with('\n') {
            contents.push('\n');
        }
        fs::write(path, contents)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
    }
    if cli.json {
        print_line(artifact);
    } else {
        print_line(human);
    }
    Ok(())
}

fn load_square(path: &Path, name: &str) -> Result<Matrix64, CliError> {
    let m = matfile::load_matrix(path)?;
    if !m.is_square() {
        return Err(CliError::Usage(format!(
            "{name} must be square, got {}x{} in {}",
            m.rows(),
            m.cols(),
            path.display()
        )));
    }
    Ok(m)
}

fn to_pretty<T: serde::Serialize>(value: &T, what: &str) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("{what} serialization: {e}")))
}

fn decide(cli: &Cli, cfg: &Tolerances64, u: &Path, v: &Path) -> Result<(), CliError> {
    let um = load_square(u, "U")?;
    let vm = load_square(v, "V")?;
    let verdict = decide_coupling(&um, &vm, cfg);
    let artifact = to_pretty(&verdict, "verdict")?;
    if verdict.coupled {
        emit(cli, &artifact, &format!("coupled: {}", verdict.reason))
    } else {
        if let Some(path) = &cli.out {
            fs::write(path, artifact)
                .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
        }
        Err(CliError::NotCoupled(verdict))
    }
}

fn witness(
    cli: &Cli,
    cfg: &Tolerances64,
    u: &Path,
    v: &Path,
    route: RouteArg,
) -> Result<(), CliError> {
    let um = load_square(u, "U")?;
    let vm = load_square(v, "V")?;
    let selection = match route {
        RouteArg::A => RouteSelection::A,
        RouteArg::B => RouteSelection::B,
        RouteArg::Both => RouteSelection::Both,
    };
    let set = witness_sc(&um, &vm, selection, cfg)?;

    let package = |w: &SchurCouplingWitness<f64>, name: &str| -> Result<(WitnessBundle, String), CliError> {
        let report = verify_sc(w, &um, &vm, cfg);
        if !report.pass {
            return Err(CliError::Verification(format!(
                "route {name} witness fails verification (worst residual {:e})",
                report.worst_residual()
            )));
        }
        let human = format!(
            "route {name}: verified SC witness, S is {0}x{0}, worst residual {1:e}",
            w.dim_x() + w.dim_y(),
            report.worst_residual()
        );
        let provenance = format!(
            "witness route {name} for {} and {}, residual tolerance {:e}",
            u.display(),
            v.display(),
            cfg.residual_tol
        );
        Ok((WitnessBundle::from_sc(w, &um, &vm, provenance, report), human))
    };

    match (&set.route_a, &set.route_b) {
        (Some(a), Some(b)) => {
            let (bundle_a, human_a) = package(a, "A")?;
            let (bundle_b, human_b) = package(b, "B")?;
            let doc = serde_json::json!({
                "routeA": bundle::checked_value(&bundle_a)?,
                "routeB": bundle::checked_value(&bundle_b)?,
            });
            let artifact = to_pretty(&doc, "witness set")?;
            emit(cli, &artifact, &format!("{human_a}\n{human_b}"))
        }
        (Some(w), None) | (None, Some(w)) => {
            let name = if set.route_a.is_some() { "A" } else { "B" };
            let (b, human) = package(w, name)?;
            let artifact = bundle::render(&b)?;
            emit(cli, &artifact, &human)
        }
        (None, None) => Err(CliError::Internal("no route produced a witness".into())),
    }
}

fn convert(
    cli: &Cli,
    cfg: &Tolerances64,
    from: RelArg,
    to: RelArg,
    path: &Path,
) -> Result<(), CliError> {
    if from == to {
        return Err(CliError::Usage("--from and --to name the same relation".into()));
    }
    let (stored, witness, u, v) = bundle::load(path, cfg)?;
    if stored.relation != Relation::from(from) {
        return Err(CliError::Usage(format!(
            "bundle holds an {} witness, not {}",
            stored.relation,
            Relation::from(from)
        )));
    }

    use LoadedWitness as L;
    let converted = match (witness, to) {
        (L::Sc(w), RelArg::Eae) => L::Eae(sc_to_eae(&w, cfg)?),
        (L::Sc(w), RelArg::Mc) => L::Mc(sc_to_mc(&w, cfg)?),
        (L::Eae(w), RelArg::Sc) => L::Sc(eae_to_sc(&w, cfg)?),
        (L::Eae(w), RelArg::Mc) => L::Mc(eae_to_mc(&w, cfg)?),
        (L::Mc(w), RelArg::Eae) => L::Eae(mc_to_eae(&w, cfg)?),
        (L::Mc(w), RelArg::Sc) => {
            // The direct strong-form construction when available, otherwise
            // through the extension pipeline.
            if mc_strong_flags(&w, cfg).all() {
                L::Sc(smc_to_sc(&w, cfg)?)
            } else {
                L::Sc(eae_to_sc(&mc_to_eae(&w, cfg)?, cfg)?)
            }
        }
        _ => unreachable!("matching --from and --to are rejected above"),
    };

    let report = bundle::reverify(&converted, &u, &v, cfg);
    if !report.pass {
        return Err(CliError::Verification(format!(
            "converted witness fails verification (worst residual {:e})",
            report.worst_residual()
        )));
    }
    let human = format!(
        "{} -> {}: verified, worst residual {:e}",
        stored.relation,
        Relation::from(to),
        report.worst_residual()
    );
    let provenance = format!(
        "convert {} -> {} of [{}]",
        stored.relation,
        Relation::from(to),
        stored.provenance
    );
    let converted_bundle = match &converted {
        L::Sc(w) => WitnessBundle::from_sc(w, &u, &v, provenance, report),
        L::Eae(w) => WitnessBundle::from_eae(w, provenance, report),
        L::Mc(w) => WitnessBundle::from_mc(w, provenance, report),
    };
    let artifact = bundle::render(&converted_bundle)?;
    emit(cli, &artifact, &human)
}

fn verify(
    cli: &Cli,
    cfg: &Tolerances64,
    path: &Path,
    u: &Path,
    v: &Path,
) -> Result<(), CliError> {
    let (stored, witness, _, _) = bundle::load(path, cfg)?;
    let um = load_square(u, "U")?;
    let vm = load_square(v, "V")?;
    let report = bundle::reverify(&witness, &um, &vm, cfg);
    let artifact = to_pretty(&report, "report")?;
    let human = format!(
        "{} witness {}: worst residual {:e} at tolerance {:e}",
        stored.relation,
        if report.pass { "passes" } else { "FAILS" },
        report.worst_residual(),
        report.tolerance
    );
    let pass = report.pass;
    let worst = report.worst_residual();
    emit(cli, &artifact, &human)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "verification failed (worst residual {worst:e})"
        )))
    }
}

fn demo_example(
    cli: &Cli,
    cfg: &Tolerances64,
    d: usize,
    k: usize,
    shifts: usize,
    eps_grid: &[f64],
) -> Result<(), CliError> {
    if d < 1 || k < 1 || shifts < 2 {
        return Err(CliError::Usage(format!(
            "the example needs --d >= 1, --k >= 1, --N >= 2; got d={d}, k={k}, N={shifts}"
        )));
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !e.is_finite()) {
        return Err(CliError::Usage("--eps-grid needs at least one finite threshold".into()));
    }
    let mut grid = eps_grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let report = example_profile_report::<f64>(d, k, shifts, &grid, cfg);
    let mut csv = String::from("eps,dimK,dimKtilde\n");
    for (i, eps) in report.profile.epsilons.iter().enumerate() {
        writeln!(csv, "{eps},{},{}", report.profile.dim_k[i], report.profile.dim_k_tilde[i])
            .expect("writing to a string cannot fail");
    }
    let artifact = if cli.json { to_pretty(&report, "example report")? } else { csv.clone() };
    emit(cli, &artifact, csv.trim_end())
}

fn random(cli: &Cli, n: usize, rank: usize, seed: u64, cond_cap: f64) -> Result<(), CliError> {
    if rank > n {
        return Err(CliError::Usage(format!("--rank {rank} exceeds --n {n}")));
    }
    if !(cond_cap.is_finite() && cond_cap >= 1.0) {
        return Err(CliError::Usage(format!("--cond-cap must be at least 1, got {cond_cap}")));
    }
    let t = random_with_rank::<f64>(n, rank, cond_cap, seed);
    let text = matfile::render_matrix(&t);
    let artifact = if cli.json {
        to_pretty(&bundle::MatrixPayload::of(&t), "matrix")?
    } else {
        text.clone()
    };
    emit(cli, &artifact, text.trim_end())
}

fn suite(
    cli: &Cli,
    cfg: &Tolerances64,
    sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<(), CliError> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(CliError::Usage("--sizes needs a non-empty list of positive sizes".into()));
    }
    if trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let summary = roundtrip_suite::<f64>(sizes, trials, cfg, seed);
    let artifact = to_pretty(&summary, "suite summary")?;
    let mut human = String::new();
    for p in &summary.properties {
        writeln!(
            human,
            "{}: {}/{} passed, worst residual {:e}",
            p.name,
            p.trials - p.failures,
            p.trials,
            p.worst_residual.0
        )
        .expect("writing to a string cannot fail");
    }
    write!(human, "total: {}/{} passed", summary.total_trials - summary.total_failures, summary.total_trials)
        .expect("writing to a string cannot fail");
    emit(cli, &artifact, &human)?;
    if summary.all_passed() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "{} of {} suite trials failed",
            summary.total_failures, summary.total_trials
        )))
    }
}
