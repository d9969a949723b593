//! Run manifests, frozen tolerance profiles, and deterministic report
//! serialization.
//!
//! Every verification run is stamped with a [`RunManifest`] (config hash,
//! seed, tolerance profile, subcommand, tool version). Timestamps default to
//! `None` so that re-running a deterministic subcommand with the same
//! manifest produces byte-identical `report.json` / `witness.csv` files;
//! callers that want wall-clock stamps must opt in explicitly.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io;
use std::path::{Path, PathBuf};

/// Named bundle of the numerical tolerances a run is judged against. The
/// profile is resolved by name at config time and the resolved numbers are
/// frozen into the report, so a verdict can be audited without knowing which
/// tool version produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ToleranceProfile {
    pub name: String,
    /// Structural identities: kernel stochasticity, symmetrization,
    /// Dirichlet-form adjointness.
    pub structural: f64,
    /// Measure and kernel-row normalization.
    pub normalization: f64,
    /// Exact-vs-eigendecomposition semigroup products.
    pub semigroup: f64,
    /// Relative slack granted to verified inequalities.
    pub inequality_slack: f64,
    /// Monte Carlo acceptance band in standard errors.
    pub mc_sigma: f64,
    /// Zero-mode threshold for ergodicity detection.
    pub ergodic: f64,
    /// Luxemburg-norm bisection relative tolerance.
    pub orlicz_rel: f64,
    /// Budget for quadrature-based norm comparisons.
    pub quadrature_budget: f64,
}

impl ToleranceProfile {
    /// The single shipped profile; its numbers are frozen and regression
    /// tested.
    pub fn default_profile() -> Self {
        ToleranceProfile {
            name: "default".to_string(),
            structural: 1e-10,
            normalization: 1e-12,
            semigroup: 1e-9,
            inequality_slack: 1e-6,
            mc_sigma: 4.0,
            ergodic: 1e-9,
            orlicz_rel: 1e-12,
            quadrature_budget: 1e-6,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default_profile()),
            _ => None,
        }
    }

    pub fn known_names() -> &'static [&'static str] {
        &["default"]
    }
}

/// Identity card of one verification run; embedded in every report.
/// Identical manifests produce identical report bytes for deterministic
/// subcommands, and identical estimates for seeded Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    /// "sha256:<hex>" of the exact config bytes, or "none" for config-free
    /// runs (e.g. the tree subcommand).
    pub config_hash: String,
    pub seed: u64,
    pub tolerance_profile: String,
    pub subcommand: String,
    /// None by default, by design: see the module docs.
    pub timestamp: Option<String>,
    pub tool_version: String,
}

/// Hash of the exact bytes of a config file.
pub fn config_hash(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

/// One row of the witness table: a single checked comparison. `margin` is
/// rhs − lhs for "lhs ≤ rhs" checks (nonnegative means slack to spare).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessRow {
    pub section: String,
    pub item: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

impl WitnessRow {
    /// Row for a "lhs ≤ rhs (+ slack)" check.
    pub fn le(section: &str, item: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        WitnessRow {
            section: section.to_string(),
            item: item.into(),
            lhs,
            rhs,
            margin: rhs - lhs,
            pass: lhs <= rhs + slack,
        }
    }

    /// Row whose verdict was decided elsewhere.
    pub fn outcome(
        section: &str,
        item: impl Into<String>,
        lhs: f64,
        rhs: f64,
        pass: bool,
    ) -> Self {
        WitnessRow {
            section: section.to_string(),
            item: item.into(),
            lhs,
            rhs,
            margin: rhs - lhs,
            pass,
        }
    }
}

/// The complete JSON report. Sections are keyed by subcommand name in a
/// sorted map, so serialization order (and hence the emitted bytes) does not
/// depend on execution order.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportDocument {
    pub manifest: RunManifest,
    pub tolerance: ToleranceProfile,
    pub sections: std::collections::BTreeMap<String, serde_json::Value>,
    /// Notes about work that was skipped (e.g. no family in the config);
    /// skipped work never flips `pass`.
    pub notes: Vec<String>,
    pub pass: bool,
    /// Every failed comparison, worst first by margin.
    pub failures: Vec<WitnessRow>,
}

impl ReportDocument {
    pub fn new(manifest: RunManifest, tolerance: ToleranceProfile) -> Self {
        ReportDocument {
            manifest,
            tolerance,
            sections: std::collections::BTreeMap::new(),
            notes: Vec::new(),
            pass: true,
            failures: Vec::new(),
        }
    }

    /// Record a section's value and fold its verdict into the run verdict.
    pub fn add_section(&mut self, name: &str, value: serde_json::Value, pass: bool) {
        self.sections.insert(name.to_string(), value);
        self.pass &= pass;
    }

    /// Collect failures from a witness table (sorted by ascending margin:
    /// the worst violation first).
    pub fn record_failures(&mut self, rows: &[WitnessRow]) {
        let mut failed: Vec<WitnessRow> = rows.iter().filter(|r| !r.pass).cloned().collect();
        failed.sort_by(|a, b| a.margin.total_cmp(&b.margin));
        self.failures.extend(failed);
    }
}

/// Deterministic pretty JSON (struct field order + sorted section map).
pub fn render_report(doc: &ReportDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report structs serialize");
    s.push('\n');
    s
}

/// CSV rendering of the witness table. Fields never contain commas or
/// quotes (section/item names are code-chosen identifiers), so plain
/// joining is faithful.
pub fn witness_csv(rows: &[WitnessRow]) -> String {
    let mut out = String::from("section,item,lhs,rhs,margin,pass\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.section, r.item, r.lhs, r.rhs, r.margin, r.pass
        ));
    }
    out
}

/// Write `report.json` and `witness.csv` into `dir` (created if missing);
/// returns both paths.
pub fn write_outputs(
    dir: &Path,
    doc: &ReportDocument,
    rows: &[WitnessRow],
) -> io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let report_path = dir.join("report.json");
    let witness_path = dir.join("witness.csv");
    std::fs::write(&report_path, render_report(doc))?;
    std::fs::write(&witness_path, witness_csv(rows))?;
    Ok((report_path, witness_path))
}
