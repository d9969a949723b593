//! Command-line front end.
//!
//! Subcommands map one-to-one onto report sections: each loads the model
//! from `--config` (except `trees`, which is pure combinatorics), runs its
//! battery of checks, and contributes rows to a witness table. The process
//! exits 0 when every check passes, 1 when an inequality failed (the report
//! embeds the failing witnesses, worst first), and 2 when the run could not
//! be set up at all (bad flags, unreadable or invalid config).
//!
//! Reports are deterministic: the same config bytes, seed, and flags produce
//! byte-identical `report.json` and `witness.csv`, independent of `--workers`.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde_json::json;
use thiserror::Error;

use crate::config::{load_config_bytes, ConfigError, LoadedConfig, NamedEvent};
use crate::constants::{
    good_constant_check, hypercontract_exponent, log_sobolev_upper, ConstantsError,
};
use crate::families::{family, FamilyKind};
use crate::functionals::{entropy, lp_norm, variance, FunctionalError};
use crate::graphical::{mc_semigroup, GraphicalError};
use crate::influence::{
    kkl_check, russo_check, sharp_threshold_check, InfluenceError, ParamFamily,
};
use crate::operators::{dirichlet_form, Generator, Observable, OperatorError};
use crate::report::{
    config_hash, write_outputs, ReportDocument, RunManifest, ToleranceProfile, WitnessRow,
};
use crate::statespace::Model;
use crate::talagrand::{
    log_commutation_constant, log_talagrand_constant, reverse_talagrand_check,
    verify_commutation, verify_corollary_log, verify_talagrand_log, TalagrandError,
    CALIBRATED_KERNEL_RATIO,
};
use crate::trees::{
    catalan, check_decomposition, double_factorial, enumerate_trees, factorial, left_comb,
    right_comb, tree_mass_exact, Shape, TreeError,
};

/// Multi-start budget for the log-Sobolev optimizer.
const RHO_RESTARTS: usize = 6;
/// Salt so sweep functions are drawn from a different stream than the
/// optimizer starts.
const SWEEP_SALT: u64 = 0x5357_4545_5054;
/// Salt for the extra Monte Carlo test observable.
const MIXED_OBS_SALT: u64 = 0x4d49_5845_4442;
/// t-grid for the good-constant check (0 included deliberately).
const GOOD_CONSTANT_GRID: [f64; 4] = [0.0, 0.1, 1.0, 10.0];
/// Times at which hypercontractivity is spot-checked.
const HYPERCONTRACTIVITY_TIMES: [f64; 2] = [0.25, 1.0];

const DEFAULT_CONSTANTS_FUNCTIONS: usize = 100;
const DEFAULT_TALAGRAND_FUNCTIONS: usize = 200;
const DEFAULT_COMMUTATION_FUNCTIONS: usize = 100;
const DEFAULT_REVERSE_FUNCTIONS: usize = 200;
const DEFAULT_RUSSO_STEP: f64 = 1e-3;
const DEFAULT_THRESHOLD_GRID: usize = 9;
const DEFAULT_SIMULATE_TIME: f64 = 1.0;
const DEFAULT_SIMULATE_SAMPLES: usize = 10_000;
const DEFAULT_TREE_LEAVES: usize = 4;

fn default_commutation_times() -> Vec<f64> {
    vec![0.1, 0.5, 1.0, 2.0, 5.0]
}

#[derive(Debug, Parser)]
#[command(
    name = "ipslab",
    version,
    about = "Verification laboratory for functional inequalities on finite \
             interacting particle systems"
)]
pub struct Cli {
    /// Model description (JSON). Required by every subcommand except `trees`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized ingredient (optimizer starts, function
    /// sweeps, Monte Carlo). Same seed, same report bytes.
    #[arg(long, global = true, default_value_t = 2024)]
    pub seed: u64,
    /// Worker threads for Monte Carlo estimation. Estimates are bitwise
    /// identical across worker counts.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Directory for report.json and witness.csv (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tolerance profile; defaults to the config's choice, else "default".
    #[arg(long, global = true)]
    pub tolerance: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral gap, audited log-Sobolev bound, hypercontractivity spot
    /// checks, and the gradient-control constant along the semigroup.
    Constants {
        /// Size of the random function sweep.
        #[arg(long, default_value_t = DEFAULT_CONSTANTS_FUNCTIONS)]
        functions: usize,
    },
    /// Variance vs Orlicz-gradient bound and its logarithmic-ratio corollary.
    Talagrand {
        #[arg(long, default_value_t = DEFAULT_TALAGRAND_FUNCTIONS)]
        functions: usize,
    },
    /// Gradient-semigroup commutation bound on a time grid.
    Commutation {
        #[arg(long, default_value_t = DEFAULT_COMMUTATION_FUNCTIONS)]
        functions: usize,
        /// Comma-separated times.
        #[arg(long, value_delimiter = ',', default_values_t = default_commutation_times())]
        t: Vec<f64>,
    },
    /// Entropy bound derived from the empirical variance constant.
    Reverse {
        #[arg(long, default_value_t = DEFAULT_REVERSE_FUNCTIONS)]
        functions: usize,
    },
    /// Derivative-vs-influence identity check for increasing events along
    /// the config's one-parameter family.
    Russo {
        /// Evaluation parameter; defaults to the family interval midpoint.
        #[arg(long)]
        p: Option<f64>,
        /// Initial step for the extrapolated derivative.
        #[arg(long, default_value_t = DEFAULT_RUSSO_STEP)]
        h: f64,
    },
    /// Largest-influence floor for the config's events.
    Kkl,
    /// Differential and endpoint sharp-threshold bounds over a parameter
    /// window.
    Threshold {
        #[arg(long)]
        p1: Option<f64>,
        #[arg(long)]
        p2: Option<f64>,
        /// Number of grid points across [p1, p2].
        #[arg(long, default_value_t = DEFAULT_THRESHOLD_GRID)]
        grid: usize,
    },
    /// Monte Carlo semigroup estimates against the exact eigensolve.
    Simulate {
        #[arg(long, default_value_t = DEFAULT_SIMULATE_TIME)]
        t: f64,
        #[arg(long, default_value_t = DEFAULT_SIMULATE_SAMPLES)]
        samples: usize,
    },
    /// Full binary tree combinatorics: enumeration, mass polynomials,
    /// expansion decomposition. Needs no config.
    Trees {
        /// Number of leaves (1 to 10).
        #[arg(long, default_value_t = DEFAULT_TREE_LEAVES)]
        n: usize,
    },
    /// Every section above (family-dependent ones only when the config
    /// provides the ingredients).
    All,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants { .. } => "constants",
            Command::Talagrand { .. } => "talagrand",
            Command::Commutation { .. } => "commutation",
            Command::Reverse { .. } => "reverse",
            Command::Russo { .. } => "russo",
            Command::Kkl => "kkl",
            Command::Threshold { .. } => "threshold",
            Command::Simulate { .. } => "simulate",
            Command::Trees { .. } => "trees",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error(transparent)]
    Talagrand(#[from] TalagrandError),
    #[error(transparent)]
    Graphical(#[from] GraphicalError),
    #[error(transparent)]
    Influence(#[from] InfluenceError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Trees(#[from] TreeError),
}

/// Run the parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let out_dir = cli.out.clone();
    let (doc, rows) = build_report(&cli)?;
    for name in doc.sections.keys() {
        let in_section: Vec<&WitnessRow> = rows.iter().filter(|r| &r.section == name).collect();
        let ok = in_section.iter().all(|r| r.pass);
        println!(
            "{name}: {} ({} checks)",
            if ok { "pass" } else { "FAIL" },
            in_section.len()
        );
    }
    for note in &doc.notes {
        println!("note: {note}");
    }
    if let Some(dir) = &out_dir {
        let (report_path, witness_path) =
            write_outputs(dir, &doc, &rows).map_err(|source| CliError::Io {
                path: dir.display().to_string(),
                source,
            })?;
        println!("wrote {}", report_path.display());
        println!("wrote {}", witness_path.display());
    }
    println!("result: {}", if doc.pass { "pass" } else { "FAIL" });
    Ok(doc.pass)
}

/// Everything `execute` does except printing and file output; separated so
/// the report bytes themselves can be tested.
pub fn build_report(cli: &Cli) -> Result<(ReportDocument, Vec<WitnessRow>), CliError> {
    if cli.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let config_raw: Option<Vec<u8>> = match &cli.config {
        Some(path) => Some(std::fs::read(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?),
        None => None,
    };
    let loaded = match &config_raw {
        Some(bytes) => Some(load_config_bytes(bytes)?),
        None => None,
    };
    let tolerance = resolve_tolerance(cli, &loaded)?;
    let manifest = RunManifest {
        config_hash: config_raw
            .as_deref()
            .map(config_hash)
            .unwrap_or_else(|| "none".to_string()),
        seed: cli.seed,
        tolerance_profile: tolerance.name.clone(),
        subcommand: cli.command.name().to_string(),
        timestamp: None,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let mut doc = ReportDocument::new(manifest, tolerance.clone());
    let mut rows: Vec<WitnessRow> = Vec::new();

    let (sections, notes) = dispatch(cli, &loaded, &tolerance)?;
    for (name, section) in sections {
        doc.add_section(name, section.value, section.rows.iter().all(|r| r.pass));
        doc.notes.extend(section.notes);
        rows.extend(section.rows);
    }
    doc.notes.extend(notes);
    doc.record_failures(&rows);
    Ok((doc, rows))
}

fn resolve_tolerance(
    cli: &Cli,
    loaded: &Option<LoadedConfig>,
) -> Result<ToleranceProfile, CliError> {
    match &cli.tolerance {
        Some(name) => ToleranceProfile::by_name(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown tolerance profile '{name}' (known: {})",
                ToleranceProfile::known_names().join(", ")
            ))
        }),
        None => Ok(loaded
            .as_ref()
            .map(|l| l.tolerance.clone())
            .unwrap_or_else(ToleranceProfile::default_profile)),
    }
}

/// One report section: its JSON value, its witness rows, and any notes about
/// skipped work.
struct Section {
    value: serde_json::Value,
    rows: Vec<WitnessRow>,
    notes: Vec<String>,
}

struct Ctx<'a> {
    model: &'a Model,
    tolerance: &'a ToleranceProfile,
    seed: u64,
    workers: usize,
}

fn model_ctx<'a>(
    cli: &Cli,
    loaded: &'a Option<LoadedConfig>,
    tolerance: &'a ToleranceProfile,
) -> Result<Ctx<'a>, CliError> {
    let l = loaded.as_ref().ok_or_else(|| {
        CliError::Usage(format!(
            "the '{}' subcommand needs --config <model.json>",
            cli.command.name()
        ))
    })?;
    Ok(Ctx {
        model: &l.model,
        tolerance,
        seed: cli.seed,
        workers: cli.workers,
    })
}

fn require_functions(functions: usize) -> Result<(), CliError> {
    if functions == 0 {
        Err(CliError::Usage("--functions must be at least 1".into()))
    } else {
        Ok(())
    }
}

type Sections = Vec<(&'static str, Section)>;

fn dispatch(
    cli: &Cli,
    loaded: &Option<LoadedConfig>,
    tolerance: &ToleranceProfile,
) -> Result<(Sections, Vec<String>), CliError> {
    let mut notes = Vec::new();
    let mut sections: Sections = Vec::new();
    match &cli.command {
        Command::Constants { functions } => {
            require_functions(*functions)?;
            let ctx = model_ctx(cli, loaded, tolerance)?;
            sections.push(("constants", section_constants(&ctx, *functions)?));
        }
        Command::Talagrand { functions } => {
            require_functions(*functions)?;
            let ctx = model_ctx(cli, loaded, tolerance)?;
            sections.push(("talagrand", section_talagrand(&ctx, *functions)?));
        }
        Command::Commutation { functions, t } => {
            require_functions(*functions)?;
            if t.is_empty() {
                return Err(CliError::Usage("--t needs at least one time".into()));
            }
            let ctx = model_ctx(cli, loaded, tolerance)?;
            sections.push(("commutation", section_commutation(&ctx, *functions, t)?));
        }
        Command::Reverse { functions } => {
            require_functions(*functions)?;
            let ctx = model_ctx(cli, loaded, tolerance)?;
            sections.push(("reverse", section_reverse(&ctx, *functions)?));
        }
        Command::Russo { p, h } => {
            let ctx = model_ctx(cli, loaded, tolerance)?;
            let l = loaded.as_ref().expect("model_ctx checked");
            let fam = require_family(l, "russo")?;
            require_increasing(l, "russo")?;
            sections.push(("russo", section_russo(&ctx, fam, &l.events, *p, *h)?));
        }
        Command::Kkl => {
            let ctx = model_ctx(cli, loaded, tolerance)?;
            let l = loaded.as_ref().expect("model_ctx checked");
            if l.events.is_empty() {
                return Err(CliError::Usage(
                    "the 'kkl' subcommand needs at least one event in the config".into(),
                ));
            }
            sections.push(("kkl", section_kkl(&ctx, &l.events)?));
        }
        Command::Threshold { p1, p2, grid } => {
            let ctx = model_ctx(cli, loaded, tolerance)?;
            let l = loaded.as_ref().expect("model_ctx checked");
            let fam = require_family(l, "threshold")?;
            require_increasing(l, "threshold")?;
            let (a, b) = match (p1, p2) {
                (Some(a), Some(b)) => (*a, *b),
                (None, None) => l.threshold_range.ok_or_else(|| {
                    CliError::Usage(
                        "give --p1 and --p2, or declare threshold_range in the \
                         config's family"
                            .into(),
                    )
                })?,
                _ => {
                    return Err(CliError::Usage(
                        "--p1 and --p2 must be given together".into(),
                    ))
                }
            };
            sections.push(("threshold", section_threshold(&ctx, fam, &l.events, a, b, *grid)?));
        }
        Command::Simulate { t, samples } => {
            let ctx = model_ctx(cli, loaded, tolerance)?;
            sections.push(("simulate", section_simulate(&ctx, *t, *samples)?));
        }
        Command::Trees { n } => {
            sections.push(("trees", section_trees(*n)?));
        }
        Command::All => {
            let ctx = model_ctx(cli, loaded, tolerance)?;
            sections.push(("constants", section_constants(&ctx, DEFAULT_CONSTANTS_FUNCTIONS)?));
            sections.push(("talagrand", section_talagrand(&ctx, DEFAULT_TALAGRAND_FUNCTIONS)?));
            sections.push((
                "commutation",
                section_commutation(&ctx, DEFAULT_COMMUTATION_FUNCTIONS, &default_commutation_times())?,
            ));
            sections.push(("reverse", section_reverse(&ctx, DEFAULT_REVERSE_FUNCTIONS)?));
            sections.push((
                "simulate",
                section_simulate(&ctx, DEFAULT_SIMULATE_TIME, DEFAULT_SIMULATE_SAMPLES)?,
            ));
            sections.push(("trees", section_trees(DEFAULT_TREE_LEAVES)?));
            let l = loaded.as_ref().expect("model_ctx checked");
            match &l.family {
                Some(fam) if l.events.iter().any(|e| e.increasing) => {
                    sections.push((
                        "russo",
                        section_russo(&ctx, fam, &l.events, None, DEFAULT_RUSSO_STEP)?,
                    ));
                    match l.threshold_range {
                        Some((a, b)) => sections.push((
                            "threshold",
                            section_threshold(&ctx, fam, &l.events, a, b, DEFAULT_THRESHOLD_GRID)?,
                        )),
                        None => notes.push(
                            "threshold skipped: the family declares no threshold_range"
                                .to_string(),
                        ),
                    }
                }
                Some(_) => notes.push(
                    "russo and threshold skipped: the config has no increasing events"
                        .to_string(),
                ),
                None => notes.push(
                    "russo and threshold skipped: the config declares no one-parameter family"
                        .to_string(),
                ),
            }
            if l.events.is_empty() {
                notes.push("kkl skipped: the config declares no events".to_string());
            } else {
                sections.push(("kkl", section_kkl(&ctx, &l.events)?));
            }
        }
    }
    Ok((sections, notes))
}

fn require_family<'a>(l: &'a LoadedConfig, sub: &str) -> Result<&'a ParamFamily, CliError> {
    l.family.as_ref().ok_or_else(|| {
        CliError::Usage(format!(
            "the '{sub}' subcommand needs a one-parameter family in the config"
        ))
    })
}

fn require_increasing(l: &LoadedConfig, sub: &str) -> Result<(), CliError> {
    if l.events.iter().any(|e| e.increasing) {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "the '{sub}' subcommand needs at least one increasing event in the config"
        )))
    }
}

// ───────────────────────────── sections ─────────────────────────────

fn section_constants(ctx: &Ctx, functions: usize) -> Result<Section, CliError> {
    const S: &str = "constants";
    let model = ctx.model;
    let n = model.num_states();
    let slack = ctx.tolerance.inequality_slack;
    let report = log_sobolev_upper(model, RHO_RESTARTS, ctx.seed)?;
    let sweep = family(FamilyKind::Mixed, n, functions, ctx.seed ^ SWEEP_SALT);
    let generator = Generator::build(model)?;

    let mut rows = vec![
        WitnessRow::outcome(S, "spectral gap is positive", 0.0, report.kappa, report.kappa > 0.0),
        WitnessRow::le(
            S,
            "audited log-Sobolev bound stays below the spectral gap",
            report.rho_upper,
            report.kappa,
            1e-12,
        ),
    ];

    // Poincaré: κ·Var(f) ≤ E(f,f) for every f in the sweep.
    let mut worst = (0usize, f64::NEG_INFINITY, 0.0, 0.0);
    for (i, f) in sweep.iter().enumerate() {
        let lhs = report.kappa * variance(model.mu(), f)?;
        let rhs = dirichlet_form(model, f, f)?;
        if lhs - rhs > worst.1 {
            worst = (i, lhs - rhs, lhs, rhs);
        }
    }
    rows.push(WitnessRow::le(
        S,
        format!("poincare inequality (worst of {functions}; index {})", worst.0),
        worst.2,
        worst.3,
        slack * worst.2.abs().max(1.0),
    ));
    let poincare_worst = worst;

    // Log-Sobolev with the audited bound: ρ·Ent(f²) ≤ 2E(f,f).
    let mut worst = (0usize, f64::NEG_INFINITY, 0.0, 0.0);
    for (i, f) in sweep.iter().enumerate() {
        let squared = Observable::new(f.values().map(|v| v * v));
        let lhs = report.rho_upper * entropy(model.mu(), &squared)?;
        let rhs = 2.0 * dirichlet_form(model, f, f)?;
        if lhs - rhs > worst.1 {
            worst = (i, lhs - rhs, lhs, rhs);
        }
    }
    rows.push(WitnessRow::le(
        S,
        format!("log-Sobolev inequality (worst of {functions}; index {})", worst.0),
        worst.2,
        worst.3,
        slack * worst.2.abs().max(1.0),
    ));
    let lsi_worst = worst;

    // Hypercontractivity with the audited bound: ‖P_t f‖₂ ≤ ‖f‖_{p(t)}.
    let mut hyper = Vec::new();
    for &t in &HYPERCONTRACTIVITY_TIMES {
        let p = hypercontract_exponent(t, 2.0, report.rho_upper)?;
        let mut worst = (0usize, f64::NEG_INFINITY, 0.0, 0.0);
        for (i, f) in sweep.iter().enumerate() {
            let smoothed = generator.semigroup(t, f)?;
            let lhs = lp_norm(model.mu(), &smoothed, 2.0)?;
            let rhs = lp_norm(model.mu(), f, p)?;
            if lhs - rhs > worst.1 {
                worst = (i, lhs - rhs, lhs, rhs);
            }
        }
        rows.push(WitnessRow::le(
            S,
            format!("hypercontractivity at t={t} (worst of {functions}; index {})", worst.0),
            worst.2,
            worst.3,
            slack * worst.2.abs().max(1.0),
        ));
        hyper.push(json!({
            "t": t,
            "source_exponent": p,
            "worst_index": worst.0,
            "worst_lhs": worst.2,
            "worst_rhs": worst.3,
        }));
    }

    // Gradient control along the semigroup with K = α⁻³.
    let k = model.alpha().powi(-3);
    let mut worst_ratio = 0.0f64;
    let mut worst_index = 0usize;
    let mut all_pass = true;
    for (i, f) in sweep.iter().enumerate() {
        let rep = good_constant_check(model, f, k, &GOOD_CONSTANT_GRID)?;
        if rep.worst_ratio > worst_ratio {
            worst_ratio = rep.worst_ratio;
            worst_index = i;
        }
        all_pass &= rep.pass;
    }
    rows.push(WitnessRow::outcome(
        S,
        format!(
            "dirichlet form of P_t f bounded by K x gradient terms (worst of {functions}; index {worst_index})"
        ),
        worst_ratio,
        1.0,
        all_pass,
    ));

    let value = json!({
        "kappa": report.kappa,
        "rho_upper": report.rho_upper,
        "raw_minimum": report.raw_minimum,
        "audit_rounds": report.audit_rounds,
        "optimizer_starts": report.starts,
        "optimizer_iterations": report.iterations,
        "sweep_functions": functions,
        "poincare": {"worst_index": poincare_worst.0, "worst_lhs": poincare_worst.2, "worst_rhs": poincare_worst.3},
        "log_sobolev": {"worst_index": lsi_worst.0, "worst_lhs": lsi_worst.2, "worst_rhs": lsi_worst.3},
        "hypercontractivity": hyper,
        "good_constant": {"k": k, "t_grid": GOOD_CONSTANT_GRID, "worst_ratio": worst_ratio, "worst_index": worst_index},
    });
    Ok(Section { value, rows, notes: vec![] })
}

fn section_talagrand(ctx: &Ctx, functions: usize) -> Result<Section, CliError> {
    const S: &str = "talagrand";
    let model = ctx.model;
    let rho = log_sobolev_upper(model, RHO_RESTARTS, ctx.seed)?.rho_upper;
    let k = model.alpha().powi(-3);
    let log_c = log_talagrand_constant(k, model.neighborhood_size(), rho)?;
    let sweep = family(FamilyKind::Mixed, model.num_states(), functions, ctx.seed ^ SWEEP_SALT);

    let mut worst_lr = f64::NEG_INFINITY;
    let mut worst_index = 0usize;
    let mut all_pass = true;
    let mut worst_report = None;
    for (i, f) in sweep.iter().enumerate() {
        let rep = verify_talagrand_log(model, f, log_c)?;
        all_pass &= rep.pass;
        if rep.log_ratio > worst_lr || worst_report.is_none() {
            worst_lr = rep.log_ratio;
            worst_index = i;
            worst_report = Some(rep);
        }
    }
    let mut rows = vec![WitnessRow::outcome(
        S,
        format!("variance bounded by the Orlicz gradient sum (worst log ratio of {functions}; index {worst_index})"),
        worst_lr,
        0.0,
        all_pass,
    )];

    let log_c1c = CALIBRATED_KERNEL_RATIO.ln() + log_c;
    let mut cor_worst_lr = f64::NEG_INFINITY;
    let mut cor_worst_index = 0usize;
    let mut cor_all_pass = true;
    let mut skipped_sites_seen = 0usize;
    for (i, f) in sweep.iter().enumerate() {
        let rep = verify_corollary_log(model, f, log_c1c)?;
        cor_all_pass &= rep.pass;
        skipped_sites_seen += rep.skipped_sites.len();
        if rep.log_ratio > cor_worst_lr {
            cor_worst_lr = rep.log_ratio;
            cor_worst_index = i;
        }
    }
    rows.push(WitnessRow::outcome(
        S,
        format!("logarithmic-ratio corollary (worst log ratio of {functions}; index {cor_worst_index})"),
        cor_worst_lr,
        0.0,
        cor_all_pass,
    ));

    let value = json!({
        "rho_used": rho,
        "k": k,
        "neighborhood_size": model.neighborhood_size(),
        "log_constant": log_c,
        "constant_fits_in_f64": log_c <= f64::MAX.ln(),
        "calibrated_kernel_ratio": CALIBRATED_KERNEL_RATIO,
        "log_corollary_constant": log_c1c,
        "sweep_functions": functions,
        "worst_case": serde_json::to_value(worst_report.expect("nonempty sweep")).expect("report serializes"),
        "corollary": {"worst_index": cor_worst_index, "worst_log_ratio": cor_worst_lr, "skipped_site_entries": skipped_sites_seen},
    });
    Ok(Section { value, rows, notes: vec![] })
}

fn section_commutation(ctx: &Ctx, functions: usize, times: &[f64]) -> Result<Section, CliError> {
    const S: &str = "commutation";
    let model = ctx.model;
    let rho = log_sobolev_upper(model, RHO_RESTARTS, ctx.seed)?.rho_upper;
    let generator = Generator::build(model)?;
    let sweep = family(FamilyKind::Mixed, model.num_states(), functions, ctx.seed ^ SWEEP_SALT);
    let log_ct = log_commutation_constant(model.neighborhood_size())?;

    let mut rows = Vec::new();
    let mut per_time = Vec::new();
    for &t in times {
        let mut worst_lr = f64::NEG_INFINITY;
        let mut worst_index = 0usize;
        let mut all_pass = true;
        let mut exponent = 2.0;
        for (i, f) in sweep.iter().enumerate() {
            let rep = verify_commutation(model, &generator, f, t, rho)?;
            all_pass &= rep.pass;
            exponent = rep.exponent;
            if rep.log_ratio > worst_lr {
                worst_lr = rep.log_ratio;
                worst_index = i;
            }
        }
        rows.push(WitnessRow::outcome(
            S,
            format!("gradient of P_t controlled at t={t} (worst log ratio of {functions}; index {worst_index})"),
            worst_lr,
            0.0,
            all_pass,
        ));
        per_time.push(json!({
            "t": t,
            "source_exponent": exponent,
            "worst_log_ratio": worst_lr,
            "worst_index": worst_index,
            "pass": all_pass,
        }));
    }
    let value = json!({
        "rho_used": rho,
        "log_constant": log_ct,
        "neighborhood_size": model.neighborhood_size(),
        "sweep_functions": functions,
        "times": per_time,
    });
    Ok(Section { value, rows, notes: vec![] })
}

fn section_reverse(ctx: &Ctx, functions: usize) -> Result<Section, CliError> {
    const S: &str = "reverse";
    let model = ctx.model;
    let sweep = family(FamilyKind::Mixed, model.num_states(), functions, ctx.seed ^ SWEEP_SALT);
    let rep = reverse_talagrand_check(model, &sweep)?;
    let rows = vec![WitnessRow::outcome(
        S,
        format!("entropy of f^2 bounded via the empirical variance constant (worst of {functions}; index {})", rep.worst_index),
        rep.worst_ratio,
        1.0,
        rep.pass,
    )];
    let value = serde_json::to_value(&rep).expect("report serializes");
    Ok(Section { value, rows, notes: vec![] })
}

fn section_russo(
    _ctx: &Ctx,
    fam: &ParamFamily,
    events: &[NamedEvent],
    p: Option<f64>,
    h: f64,
) -> Result<Section, CliError> {
    const S: &str = "russo";
    let (a, b) = fam.interval();
    let p = p.unwrap_or(0.5 * (a + b));
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut per_event = Vec::new();
    for ev in events {
        if !ev.increasing {
            notes.push(format!("russo: event '{}' is not increasing; skipped", ev.name));
            continue;
        }
        let rep = russo_check(fam, &ev.event, p, h)?;
        rows.push(WitnessRow::outcome(
            S,
            format!("{}: derivative dominates the kernel-weighted influence sum", ev.name),
            rep.rhs_strong,
            rep.derivative,
            rep.pass,
        ));
        rows.push(WitnessRow::le(
            S,
            format!("{}: kernel-weighted influence sum dominates the plain sum", ev.name),
            rep.rhs_weak,
            rep.rhs_strong,
            1e-12,
        ));
        per_event.push(json!({
            "name": ev.name,
            "mu_a": rep.mu_a,
            "derivative": rep.derivative,
            "derivative_error": rep.derivative_error,
            "beta": rep.beta,
            "beta_error": rep.beta_error,
            "pivotal_measures": rep.pivotal,
            "rhs_strong": rep.rhs_strong,
            "rhs_weak": rep.rhs_weak,
            "pass": rep.pass,
        }));
    }
    let value = json!({"p": p, "h": h, "events": per_event});
    Ok(Section { value, rows, notes })
}

fn section_kkl(ctx: &Ctx, events: &[NamedEvent]) -> Result<Section, CliError> {
    const S: &str = "kkl";
    let model = ctx.model;
    let rho = log_sobolev_upper(model, RHO_RESTARTS, ctx.seed)?.rho_upper;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut per_event = Vec::new();
    for ev in events {
        match kkl_check(model, &ev.event, rho) {
            Ok(rep) => {
                rows.push(WitnessRow::outcome(
                    S,
                    format!("{}: some site carries the influence floor", ev.name),
                    rep.rhs,
                    rep.lhs,
                    rep.pass,
                ));
                per_event.push(json!({
                    "name": ev.name,
                    "mu_a": rep.mu_a,
                    "support_size": rep.support.len(),
                    "support": rep.support,
                    "r": rep.r,
                    "alpha": rep.alpha,
                    "log_constant": rep.log_c,
                    "max_influence": rep.lhs,
                    "floor": rep.rhs,
                    "floor_ratio_term": rep.rhs_ratio_term,
                    "floor_cap_term": rep.rhs_cap_term,
                    "pass": rep.pass,
                }));
            }
            Err(InfluenceError::DegenerateEvent(mu_a)) => {
                notes.push(format!(
                    "kkl: event '{}' is degenerate (measure {mu_a}); skipped",
                    ev.name
                ));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let value = json!({"rho_used": rho, "events": per_event});
    Ok(Section { value, rows, notes })
}

fn section_threshold(
    _ctx: &Ctx,
    fam: &ParamFamily,
    events: &[NamedEvent],
    p1: f64,
    p2: f64,
    grid: usize,
) -> Result<Section, CliError> {
    const S: &str = "threshold";
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut per_event = Vec::new();
    for ev in events {
        if !ev.increasing {
            notes.push(format!("threshold: event '{}' is not increasing; skipped", ev.name));
            continue;
        }
        match sharp_threshold_check(fam, &ev.event, p1, p2, grid) {
            Ok(rep) => {
                // The grid point with the least differential slack is the
                // embedded witness.
                let worst = rep
                    .grid
                    .iter()
                    .min_by(|x, y| (x.derivative - x.rhs).total_cmp(&(y.derivative - y.rhs)))
                    .expect("nonempty grid");
                rows.push(WitnessRow::outcome(
                    S,
                    format!("{}: differential bound across the grid (tightest at p={})", ev.name, worst.p),
                    worst.rhs,
                    worst.derivative,
                    rep.differential_pass,
                ));
                rows.push(WitnessRow::outcome(
                    S,
                    format!("{}: endpoint product bound", ev.name),
                    rep.endpoint_lhs,
                    rep.endpoint_rhs,
                    rep.endpoint_pass,
                ));
                let grid_json: Vec<serde_json::Value> = rep
                    .grid
                    .iter()
                    .map(|pt| {
                        json!({
                            "p": pt.p,
                            "mu_a": pt.mu_a,
                            "alpha": pt.alpha,
                            "delta": pt.delta,
                            "beta": pt.beta,
                            "rho": pt.rho,
                            "log_constant": pt.log_c,
                            "derivative": pt.derivative,
                            "rhs": pt.rhs,
                            "log_rhs_magnitude": pt.log_rhs_magnitude,
                            "pass": pt.pass,
                        })
                    })
                    .collect();
                per_event.push(json!({
                    "name": ev.name,
                    "grid": grid_json,
                    "delta_star": rep.delta_star,
                    "alpha_star": rep.alpha_star,
                    "beta_star": rep.beta_star,
                    "rho_star": rep.rho_star,
                    "log_c_prime": rep.log_c_prime,
                    "exponent": rep.exponent,
                    "endpoint_lhs": rep.endpoint_lhs,
                    "endpoint_rhs": rep.endpoint_rhs,
                    "calibrated_ratio": rep.calibrated_ratio,
                    "pass": rep.pass,
                }));
            }
            Err(InfluenceError::ThresholdHypothesisFailed { p, delta, bound }) => {
                rows.push(WitnessRow::outcome(
                    S,
                    format!("{}: hypothesis pivotal-mass < e^2 alpha^2 at p={p}", ev.name),
                    delta,
                    bound,
                    false,
                ));
                notes.push(format!(
                    "threshold: event '{}' leaves the hypothesis region at p={p} \
                     (pivotal kernel mass {delta} vs bound {bound})",
                    ev.name
                ));
                per_event.push(json!({
                    "name": ev.name,
                    "hypothesis_failed_at": p,
                    "delta": delta,
                    "bound": bound,
                    "pass": false,
                }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let value = json!({"p1": p1, "p2": p2, "grid_points": grid, "events": per_event});
    Ok(Section { value, rows, notes })
}

fn section_simulate(ctx: &Ctx, t: f64, samples: usize) -> Result<Section, CliError> {
    const S: &str = "simulate";
    let model = ctx.model;
    let space = model.space();
    let n = model.num_states();
    let generator = Generator::build(model)?;
    let sigma = ctx.tolerance.mc_sigma;

    // Test observables: the top-symbol indicator of every site, plus one
    // rough mixed function.
    let mut observables: Vec<(String, Observable)> = (0..model.num_sites())
        .map(|x| {
            let top = space.num_symbols() - 1;
            let f = Observable::from_fn(n, |eta| {
                if space.digit(eta, x) == top {
                    1.0
                } else {
                    0.0
                }
            });
            (format!("site {x} top-symbol indicator"), f)
        })
        .collect();
    observables.push((
        "mixed test function".to_string(),
        family(FamilyKind::Mixed, n, 1, ctx.seed ^ MIXED_OBS_SALT)
            .pop()
            .expect("one function requested"),
    ));

    let mut total_entries = 0usize;
    let mut within = 0usize;
    let mut max_z = 0.0f64;
    let mut per_observable = Vec::new();
    for (i, (name, f)) in observables.iter().enumerate() {
        let exact = generator.semigroup(t, f)?;
        let est = mc_semigroup(
            model,
            t,
            f,
            samples,
            ctx.seed.wrapping_add(1 + i as u64),
            ctx.workers,
        )?;
        let mut obs_max_z = 0.0f64;
        for eta in 0..n {
            let diff = (est.estimate.values()[eta] - exact.values()[eta]).abs();
            let se = est.std_err[eta];
            let z = if se > 0.0 {
                diff / se
            } else if diff <= ctx.tolerance.ergodic {
                0.0
            } else {
                f64::INFINITY
            };
            total_entries += 1;
            if z <= sigma {
                within += 1;
            }
            obs_max_z = obs_max_z.max(z);
        }
        max_z = max_z.max(obs_max_z);
        per_observable.push(json!({
            "name": name,
            "max_z": obs_max_z,
            "entries": n,
        }));
    }
    let frac_within = within as f64 / total_entries as f64;
    let rows = vec![WitnessRow::le(
        S,
        format!("at least 99% of state entries within {sigma} standard errors"),
        0.99,
        frac_within,
        0.0,
    )];
    let value = json!({
        "t": t,
        "samples": samples,
        "observables": per_observable,
        "total_entries": total_entries,
        "entries_within_sigma": within,
        "fraction_within_sigma": frac_within,
        "max_z": max_z,
    });
    Ok(Section { value, rows, notes: vec![] })
}

fn render_shape(shape: &Shape) -> String {
    match shape {
        Shape::Leaf => ".".to_string(),
        Shape::Node(l, r) => format!("({} {})", render_shape(l), render_shape(r)),
    }
}

fn section_trees(n: usize) -> Result<Section, CliError> {
    const S: &str = "trees";
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let trees = enumerate_trees(n)?;
    let expected = catalan(n.saturating_sub(1)).to_usize().expect("small n");
    let bound = BigRational::new(BigInt::one(), double_factorial(2 * n as i64 - 3));
    let bound_f = bound.to_f64().expect("bound fits in f64");

    let mut rows = vec![WitnessRow::outcome(
        S,
        format!("enumeration of {n}-leaf trees matches the Catalan count"),
        trees.len() as f64,
        expected as f64,
        trees.len() == expected,
    )];

    let mut tree_json = Vec::new();
    let mut worst_coeff = BigRational::from_integer(BigInt::from(0));
    let mut degrees_ok = true;
    let mut coeffs_ok = true;
    for tree in &trees {
        let mass = tree_mass_exact(tree);
        degrees_ok &= mass.degree == 2 * n - 2;
        coeffs_ok &= mass.coefficient <= bound;
        if mass.coefficient > worst_coeff {
            worst_coeff = mass.coefficient.clone();
        }
        tree_json.push(json!({
            "shape": render_shape(tree.shape()),
            "mass_coefficient": mass.coefficient.to_string(),
            "mass_degree": mass.degree,
            "mass_at_one": mass.eval(1.0),
        }));
    }
    rows.push(WitnessRow::outcome(
        S,
        "every mass polynomial has degree 2n-2",
        (2 * n - 2) as f64,
        (2 * n - 2) as f64,
        degrees_ok,
    ));
    rows.push(WitnessRow::outcome(
        S,
        "mass coefficients bounded by the comb coefficient",
        worst_coeff.to_f64().unwrap_or(f64::NAN),
        bound_f,
        coeffs_ok,
    ));
    let combs_attain = tree_mass_exact(&left_comb(n)).coefficient == bound
        && tree_mass_exact(&right_comb(n)).coefficient == bound;
    rows.push(WitnessRow::outcome(
        S,
        "left and right combs attain the bound exactly",
        bound_f,
        bound_f,
        combs_attain,
    ));

    // Exact rational identity: C_n / (2n−1)!! = 2ⁿ / (n+1)!.
    let identity_lhs = BigRational::new(catalan(n), double_factorial(2 * n as i64 - 1));
    let identity_rhs = BigRational::new(BigInt::from(1u64 << n), factorial(n + 1));
    rows.push(WitnessRow::outcome(
        S,
        "Catalan double-factorial identity holds exactly",
        identity_lhs.to_f64().unwrap_or(f64::NAN),
        identity_rhs.to_f64().unwrap_or(f64::NAN),
        identity_lhs == identity_rhs,
    ));

    let mut notes = Vec::new();
    let decomposition = if n <= 8 {
        let rep = check_decomposition(n)?;
        rows.push(WitnessRow::outcome(
            S,
            "one-vertex expansions decompose the next level disjointly",
            rep.produced as f64,
            rep.expected as f64,
            rep.pass,
        ));
        json!({
            "n": rep.n,
            "expected": rep.expected,
            "produced": rep.produced,
            "all_multiplicity_one": rep.all_multiplicity_one,
            "pass": rep.pass,
        })
    } else {
        notes.push(format!(
            "trees: expansion decomposition skipped for n={n} (checked up to n=8)"
        ));
        serde_json::Value::Null
    };

    let value = json!({
        "n": n,
        "count": trees.len(),
        "expected": expected,
        "mass_coefficient_bound": bound.to_string(),
        "trees": tree_json,
        "decomposition": decomposition,
    });
    Ok(Section { value, rows, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::render_report;

    fn write_temp_config(value: &serde_json::Value) -> tempfile::NamedTempFile {
        let file = tempfile::NamedTempFile::new().expect("temp file");
        std::fs::write(file.path(), value.to_string()).expect("write config");
        file
    }

    fn ring_config() -> serde_json::Value {
        serde_json::json!({
            "schema": 1,
            "alphabet": ["down", "up"],
            "sites": ["r0", "r1", "r2"],
            "kernel": {"heat_bath": {"hamiltonian": {
                "beta": 0.5,
                "couplings": [[0, 1, 1.0], [1, 2, 1.0], [2, 0, 1.0]],
            }}},
            "events": [
                {"name": "first_up", "formula": {"op": "site", "x": 0}},
                {"name": "majority", "formula": {"op": "threshold", "k": 2, "sites": [0, 1, 2]}},
            ],
        })
    }

    fn cli_with(command: Command, config: Option<PathBuf>) -> Cli {
        Cli {
            config,
            seed: 2024,
            workers: 1,
            out: None,
            tolerance: None,
            command,
        }
    }

    #[test]
    fn trees_section_lists_every_shape_and_passes() {
        let section = section_trees(4).unwrap();
        assert!(section.rows.iter().all(|r| r.pass), "{:?}", section.rows);
        let trees = section.value["trees"].as_array().unwrap();
        assert_eq!(trees.len(), 5);
        let shapes: std::collections::HashSet<&str> =
            trees.iter().map(|t| t["shape"].as_str().unwrap()).collect();
        assert_eq!(shapes.len(), 5, "shapes must be distinct: {shapes:?}");
        assert!(shapes.contains("(. (. (. .)))"), "right comb rendered: {shapes:?}");
        // Total mass of the level at t=1 is C_{n−1}-many positive terms; the
        // comb bound caps each at 1/(2n−3)!! = 1/15.
        for t in trees {
            let m = t["mass_at_one"].as_f64().unwrap();
            assert!(m > 0.0 && m <= 1.0 / 15.0 + 1e-15, "{m}");
        }
    }

    #[test]
    fn trees_report_without_config_hashes_to_none_and_passes() {
        let cli = cli_with(Command::Trees { n: 4 }, None);
        let (doc, rows) = build_report(&cli).unwrap();
        assert!(doc.pass);
        assert_eq!(doc.manifest.config_hash, "none");
        assert_eq!(doc.manifest.subcommand, "trees");
        assert!(doc.failures.is_empty());
        assert!(rows.len() >= 5);
        assert!(doc.sections.contains_key("trees"));
    }

    #[test]
    fn model_subcommands_without_config_are_usage_errors() {
        for command in [
            Command::Constants { functions: 5 },
            Command::Simulate { t: 0.5, samples: 500 },
            Command::All,
        ] {
            let cli = cli_with(command, None);
            match build_report(&cli) {
                Err(CliError::Usage(msg)) => assert!(msg.contains("--config"), "{msg}"),
                other => panic!("expected usage error, got {:?}", other.map(|_| ())),
            }
        }
    }

    #[test]
    fn unknown_tolerance_and_zero_workers_are_usage_errors() {
        let mut cli = cli_with(Command::Trees { n: 4 }, None);
        cli.tolerance = Some("strict".into());
        assert!(matches!(build_report(&cli), Err(CliError::Usage(_))));

        let mut cli = cli_with(Command::Trees { n: 4 }, None);
        cli.workers = 0;
        assert!(matches!(build_report(&cli), Err(CliError::Usage(_))));
    }

    #[test]
    fn constants_section_passes_on_the_dependent_ring() {
        let file = write_temp_config(&ring_config());
        let cli = cli_with(
            Command::Constants { functions: 25 },
            Some(file.path().to_path_buf()),
        );
        let (doc, rows) = build_report(&cli).unwrap();
        assert!(doc.pass, "failures: {:?}", doc.failures);
        assert!(rows.iter().all(|r| r.section == "constants"));
        let kappa = doc.sections["constants"]["kappa"].as_f64().unwrap();
        let rho = doc.sections["constants"]["rho_upper"].as_f64().unwrap();
        assert!(kappa > 0.0 && rho > 0.0 && rho <= kappa + 1e-12);
    }

    #[test]
    fn kkl_section_runs_on_config_events() {
        let file = write_temp_config(&ring_config());
        let cli = cli_with(Command::Kkl, Some(file.path().to_path_buf()));
        let (doc, rows) = build_report(&cli).unwrap();
        assert!(doc.pass, "failures: {:?}", doc.failures);
        assert_eq!(rows.len(), 2, "one row per event");
        let events = doc.sections["kkl"]["events"].as_array().unwrap();
        assert_eq!(events.len(), 2);
        for ev in events {
            assert!(ev["max_influence"].as_f64().unwrap() > 0.0);
        }
    }

    #[test]
    fn reports_are_byte_identical_for_a_fixed_seed() {
        let file = write_temp_config(&ring_config());
        let make = || {
            let cli = cli_with(
                Command::Simulate { t: 0.7, samples: 400 },
                Some(file.path().to_path_buf()),
            );
            let (doc, rows) = build_report(&cli).unwrap();
            (render_report(&doc), crate::report::witness_csv(&rows))
        };
        let (r1, w1) = make();
        let (r2, w2) = make();
        assert_eq!(r1, r2);
        assert_eq!(w1, w2);
    }

    #[test]
    fn workers_do_not_change_the_monte_carlo_report() {
        let file = write_temp_config(&ring_config());
        let render = |workers: usize| {
            let mut cli = cli_with(
                Command::Simulate { t: 0.7, samples: 400 },
                Some(file.path().to_path_buf()),
            );
            cli.workers = workers;
            let (doc, _) = build_report(&cli).unwrap();
            serde_json::to_string(&doc.sections["simulate"]["observables"]).unwrap()
        };
        assert_eq!(render(1), render(3));
    }
}
