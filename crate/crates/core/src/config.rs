//! JSON model configuration: schema-versioned, strictly validated.
//!
//! A config describes one model (alphabet, sites, kernels, reference
//! measure), optionally named events, an optional one-parameter family, and
//! a tolerance profile name. Unknown keys are rejected wholesale — a
//! verification tool must not silently ignore a typo that was meant to
//! tighten a check — and validation is line-itemized: all detectable
//! problems are reported at once.
//!
//! Conventions: symbols and sites are referenced by *index* into the
//! `alphabet` / `sites` arrays everywhere (couplings, neighborhoods, event
//! formulas); site 0 is the most significant digit of the state enumeration.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use thiserror::Error;

use crate::influence::{
    is_increasing, Event, EventFormula, FieldSpec, GibbsFamilySpec, ParamFamily,
};
use crate::report::ToleranceProfile;
use crate::statespace::{
    gibbs_measure, heat_bath_kernels, stationary_measure, Alphabet, Configuration, KernelFamily,
    Measure, Model, SiteSet, StateSpace, DEFAULT_STATE_CAP,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema: u32,
    /// Symbol names; their order fixes the symbol encoding.
    pub alphabet: Vec<String>,
    /// Site names; their order fixes the site encoding.
    pub sites: Vec<String>,
    /// Declared dependency neighborhoods (site indices per site). Derived
    /// from the kernels when omitted.
    #[serde(default)]
    pub neighborhoods: Option<Vec<Vec<usize>>>,
    /// Whether declared neighborhoods contain their own site (kernels that
    /// read the current value at x). Inferred when omitted.
    #[serde(default)]
    pub neighborhood_includes_self: Option<bool>,
    pub kernel: KernelSpec,
    /// Reference measure weights (normalized on load). Heat-bath kernels
    /// need either this or a hamiltonian; table kernels fall back to the
    /// stationary measure.
    #[serde(default)]
    pub measure: Option<Vec<f64>>,
    /// Upper bound on |Ω| this config is willing to enumerate.
    #[serde(default)]
    pub state_cap: Option<usize>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    /// Tolerance profile name ("default" when omitted).
    #[serde(default)]
    pub tolerance: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    /// Heat-bath (single-site conditional) kernels of the reference measure.
    HeatBath(HeatBathSpec),
    /// Explicit per-site resampling tables.
    Table(TableSpec),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatBathSpec {
    /// Binary-spin Gibbs weights exp(β Σ J σσ′ + h Σ σ) as the reference
    /// measure; mutually exclusive with the top-level `measure`.
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    /// rows[x][state][symbol] = μ_{x,η}(symbol).
    pub rows: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub beta: f64,
    /// (site, site, J) triples by index.
    #[serde(default)]
    pub couplings: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub field: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub name: String,
    /// Monotone boolean formula over site indices.
    #[serde(default)]
    pub formula: Option<EventFormula>,
    /// Explicit member configurations (symbol index per site).
    #[serde(default)]
    pub states: Option<Vec<Vec<u8>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    /// Parameter interval [a, b].
    pub parameter: (f64, f64),
    pub hamiltonian: FamilyHamiltonianSpec,
    /// Default sweep range [p1, p2] for threshold runs; must sit strictly
    /// inside `parameter` (central differences need room).
    #[serde(default)]
    pub threshold_range: Option<(f64, f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyHamiltonianSpec {
    pub beta: f64,
    #[serde(default)]
    pub couplings: Vec<(usize, usize, f64)>,
    /// Parameter-dependent single-site field schedule.
    pub field: FieldSpec,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config rejected:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

/// A config event together with its exhaustively decided monotonicity.
#[derive(Debug, Clone)]
pub struct NamedEvent {
    pub name: String,
    pub event: Event,
    pub increasing: bool,
}

/// Fully validated, ready-to-run configuration.
pub struct LoadedConfig {
    pub model: Model,
    pub events: Vec<NamedEvent>,
    pub family: Option<ParamFamily>,
    pub family_interval: Option<(f64, f64)>,
    pub threshold_range: Option<(f64, f64)>,
    pub tolerance: ToleranceProfile,
}

pub fn load_config_str(text: &str) -> Result<LoadedConfig, ConfigError> {
    load_config_bytes(text.as_bytes())
}

pub fn load_config_bytes(bytes: &[u8]) -> Result<LoadedConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_slice(bytes)?;
    build(raw)
}

fn build(raw: RawConfig) -> Result<LoadedConfig, ConfigError> {
    let mut issues: Vec<String> = Vec::new();

    if raw.schema != SCHEMA_VERSION {
        issues.push(format!(
            "schema: this tool reads schema {SCHEMA_VERSION}, the config declares {}",
            raw.schema
        ));
    }

    // ── Fundamental pieces: alphabet, sites, state space. Without these
    // nothing else can be validated, so failures here end the run.
    let alphabet = match Alphabet::new(raw.alphabet.clone()) {
        Ok(a) => a,
        Err(e) => {
            issues.push(format!("alphabet: {e}"));
            return Err(ConfigError::Invalid(issues));
        }
    };
    if raw.sites.is_empty() {
        issues.push("sites: at least one site is required".into());
        return Err(ConfigError::Invalid(issues));
    }
    let cap = raw.state_cap.unwrap_or(DEFAULT_STATE_CAP).min(DEFAULT_STATE_CAP);
    let space = match StateSpace::new(alphabet.len(), raw.sites.len(), cap) {
        Ok(s) => s,
        Err(e) => {
            issues.push(format!("state space: {e}"));
            return Err(ConfigError::Invalid(issues));
        }
    };

    let tolerance_name = raw.tolerance.clone().unwrap_or_else(|| "default".to_string());
    let tolerance = match ToleranceProfile::by_name(&tolerance_name) {
        Some(t) => t,
        None => {
            issues.push(format!(
                "tolerance: unknown profile '{tolerance_name}' (known: {})",
                ToleranceProfile::known_names().join(", ")
            ));
            ToleranceProfile::default_profile()
        }
    };

    // ── Kernels and reference measure.
    let built = build_model(&raw, &alphabet, &space, &mut issues);

    // ── Events (need only the state space).
    let mut events = Vec::new();
    for (i, spec) in raw.events.iter().enumerate() {
        let label = format!("events[{i}] '{}'", spec.name);
        if spec.name.is_empty() {
            issues.push(format!("events[{i}]: name must be nonempty"));
        }
        // Names are reproduced verbatim in the witness CSV.
        if spec.name.contains([',', '"', '\n', '\r']) {
            issues.push(format!(
                "events[{i}]: name must not contain commas or quotes or line breaks"
            ));
        }
        if raw.events[..i].iter().any(|e| e.name == spec.name) {
            issues.push(format!("{label}: duplicate event name"));
        }
        let event = match (&spec.formula, &spec.states) {
            (Some(_), Some(_)) => {
                issues.push(format!("{label}: give either formula or states, not both"));
                continue;
            }
            (None, None) => {
                issues.push(format!("{label}: needs a formula or an explicit state list"));
                continue;
            }
            (Some(formula), None) => match formula.compile(&space) {
                Ok(e) => e,
                Err(e) => {
                    issues.push(format!("{label}: {e}"));
                    continue;
                }
            },
            (None, Some(states)) => match event_from_states(&space, states) {
                Ok(e) => e,
                Err(msg) => {
                    issues.push(format!("{label}: {msg}"));
                    continue;
                }
            },
        };
        match is_increasing(&space, &event) {
            Ok(increasing) => {
                events.push(NamedEvent { name: spec.name.clone(), event, increasing })
            }
            Err(e) => issues.push(format!("{label}: {e}")),
        }
    }

    // ── One-parameter family.
    let mut family = None;
    let mut family_interval = None;
    let mut threshold_range = None;
    if let Some(spec) = &raw.family {
        if alphabet.len() != 2 {
            issues.push("family: one-parameter families require the binary alphabet".into());
        } else {
            match ParamFamily::gibbs(GibbsFamilySpec {
                site_names: raw.sites.clone(),
                beta: spec.hamiltonian.beta,
                couplings: spec.hamiltonian.couplings.clone(),
                field: spec.hamiltonian.field,
                interval: spec.parameter,
            }) {
                Ok(f) => {
                    family_interval = Some(spec.parameter);
                    family = Some(f);
                }
                Err(e) => issues.push(format!("family: {e}")),
            }
            if let Some((p1, p2)) = spec.threshold_range {
                let (a, b) = spec.parameter;
                if !(a < p1 && p1 < p2 && p2 < b) {
                    issues.push(format!(
                        "family.threshold_range: needs a < p1 < p2 < b inside [{a}, {b}], \
                         got [{p1}, {p2}]"
                    ));
                } else {
                    threshold_range = Some((p1, p2));
                }
            }
        }
    }

    match built {
        Some(model) if issues.is_empty() => Ok(LoadedConfig {
            model,
            events,
            family,
            family_interval,
            threshold_range,
            tolerance,
        }),
        _ => Err(ConfigError::Invalid(issues)),
    }
}

fn event_from_states(space: &StateSpace, states: &[Vec<u8>]) -> Result<Event, String> {
    let mut indices = Vec::with_capacity(states.len());
    for (i, values) in states.iter().enumerate() {
        if values.len() != space.num_sites() {
            return Err(format!(
                "states[{i}]: expected {} symbols, got {}",
                space.num_sites(),
                values.len()
            ));
        }
        if let Some(&bad) = values.iter().find(|&&v| (v as usize) >= space.num_symbols()) {
            return Err(format!(
                "states[{i}]: symbol index {bad} out of range for {} symbols",
                space.num_symbols()
            ));
        }
        indices.push(space.index_of(&Configuration::new(values.clone())));
    }
    Event::from_indices(space, &indices).map_err(|e| e.to_string())
}

/// Kernels + measure + site set + assembled model; pushes issues instead of
/// bailing so event/family problems surface in the same pass.
fn build_model(
    raw: &RawConfig,
    alphabet: &Alphabet,
    space: &StateSpace,
    issues: &mut Vec<String>,
) -> Option<Model> {
    let (kernels, mu) = match &raw.kernel {
        KernelSpec::HeatBath(spec) => {
            let mu = match (&raw.measure, &spec.hamiltonian) {
                (Some(_), Some(_)) => {
                    issues.push(
                        "kernel.heat_bath: give either a measure or a hamiltonian, not both"
                            .into(),
                    );
                    return None;
                }
                (None, None) => {
                    issues.push(
                        "kernel.heat_bath: heat-bath kernels need a measure or a hamiltonian"
                            .into(),
                    );
                    return None;
                }
                (Some(weights), None) => {
                    if weights.len() != space.num_states() {
                        issues.push(format!(
                            "measure: expected {} weights, got {}",
                            space.num_states(),
                            weights.len()
                        ));
                        return None;
                    }
                    match Measure::normalized(DVector::from_vec(weights.clone())) {
                        Ok(m) => m,
                        Err(e) => {
                            issues.push(format!("measure: {e}"));
                            return None;
                        }
                    }
                }
                (None, Some(h)) => {
                    match gibbs_measure(space, h.beta, &h.couplings, h.field) {
                        Ok(m) => m,
                        Err(e) => {
                            issues.push(format!("kernel.heat_bath.hamiltonian: {e}"));
                            return None;
                        }
                    }
                }
            };
            match heat_bath_kernels(&mu, space) {
                Ok(k) => (k, mu),
                Err(e) => {
                    issues.push(format!("kernel.heat_bath: {e}"));
                    return None;
                }
            }
        }
        KernelSpec::Table(spec) => {
            if spec.rows.len() != space.num_sites() {
                issues.push(format!(
                    "kernel.table.rows: expected {} per-site tables, got {}",
                    space.num_sites(),
                    spec.rows.len()
                ));
                return None;
            }
            let mut per_site = Vec::with_capacity(spec.rows.len());
            for (x, table) in spec.rows.iter().enumerate() {
                if table.len() != space.num_states()
                    || table.iter().any(|row| row.len() != space.num_symbols())
                {
                    issues.push(format!(
                        "kernel.table.rows[{x}]: expected {} rows of {} probabilities",
                        space.num_states(),
                        space.num_symbols()
                    ));
                    return None;
                }
                per_site.push(DMatrix::from_fn(
                    space.num_states(),
                    space.num_symbols(),
                    |eta, a| table[eta][a],
                ));
            }
            let kernels = match KernelFamily::new(per_site, space) {
                Ok(k) => k,
                Err(e) => {
                    issues.push(format!("kernel.table: {e}"));
                    return None;
                }
            };
            let mu = match &raw.measure {
                Some(weights) => {
                    if weights.len() != space.num_states() {
                        issues.push(format!(
                            "measure: expected {} weights, got {}",
                            space.num_states(),
                            weights.len()
                        ));
                        return None;
                    }
                    match Measure::normalized(DVector::from_vec(weights.clone())) {
                        Ok(m) => m,
                        Err(e) => {
                            issues.push(format!("measure: {e}"));
                            return None;
                        }
                    }
                }
                None => match stationary_measure(&kernels, space) {
                    Ok(m) => m,
                    Err(e) => {
                        issues.push(format!(
                            "measure: none given and the stationary fallback failed: {e}"
                        ));
                        return None;
                    }
                },
            };
            (kernels, mu)
        }
    };

    // Site set: declared neighborhoods are validated (finite-range check in
    // assembly); otherwise the minimal ones are derived from the kernels.
    let sites = match &raw.neighborhoods {
        Some(declared) => {
            if declared.len() != raw.sites.len() {
                issues.push(format!(
                    "neighborhoods: expected {} entries, got {}",
                    raw.sites.len(),
                    declared.len()
                ));
                return None;
            }
            let include_self = match raw.neighborhood_includes_self {
                Some(flag) => flag,
                None => {
                    let with_self =
                        declared.iter().enumerate().filter(|(x, nb)| nb.contains(x)).count();
                    if with_self == 0 {
                        false
                    } else if with_self == declared.len() {
                        true
                    } else {
                        issues.push(
                            "neighborhoods: some contain their own site and some do not; \
                             set neighborhood_includes_self explicitly"
                                .into(),
                        );
                        return None;
                    }
                }
            };
            match SiteSet::new(raw.sites.clone(), declared.clone(), include_self) {
                Ok(s) => s,
                Err(e) => {
                    issues.push(format!("neighborhoods: {e}"));
                    return None;
                }
            }
        }
        None => {
            let mut derived = kernels.derive_neighborhoods(space);
            let include_self = derived.iter().enumerate().any(|(x, nb)| nb.contains(&x));
            if include_self {
                // Uniform self-membership keeps the declaration consistent;
                // enlarging a neighborhood never breaks the range check.
                for (x, nb) in derived.iter_mut().enumerate() {
                    if !nb.contains(&x) {
                        nb.push(x);
                    }
                }
            }
            match SiteSet::new(raw.sites.clone(), derived, include_self) {
                Ok(s) => s,
                Err(e) => {
                    issues.push(format!("sites: {e}"));
                    return None;
                }
            }
        }
    };

    match Model::assemble(alphabet.clone(), sites, kernels, mu) {
        Ok(m) => Some(m),
        Err(e) => {
            issues.push(format!("model: {e}"));
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{bernoulli_site, ising_ring3};
    use approx::assert_relative_eq;
    use serde_json::json;

    fn load(value: serde_json::Value) -> Result<LoadedConfig, ConfigError> {
        load_config_str(&value.to_string())
    }

    fn load_err(value: serde_json::Value) -> ConfigError {
        match load(value) {
            Err(e) => e,
            Ok(_) => panic!("config unexpectedly accepted"),
        }
    }

    fn bernoulli_json(p: f64) -> serde_json::Value {
        json!({
            "schema": 1,
            "alphabet": ["0", "1"],
            "sites": ["s0"],
            "kernel": {"heat_bath": {}},
            "measure": [1.0 - p, p],
        })
    }

    #[test]
    fn heat_bath_measure_config_matches_the_library_model() {
        let cfg = load(bernoulli_json(0.3)).unwrap();
        let reference = bernoulli_site(0.3).unwrap();
        assert_eq!(cfg.model.num_states(), 2);
        for eta in 0..2 {
            for a in 0..2 {
                assert_relative_eq!(
                    cfg.model.kernel(0)[(eta, a)],
                    reference.kernel(0)[(eta, a)],
                    epsilon = 1e-15
                );
            }
        }
        assert_eq!(cfg.tolerance.name, "default");
        assert!(cfg.events.is_empty() && cfg.family.is_none());
    }

    #[test]
    fn hamiltonian_config_reproduces_the_ring_model() {
        let cfg = load(json!({
            "schema": 1,
            "alphabet": ["down", "up"],
            "sites": ["r0", "r1", "r2"],
            "kernel": {"heat_bath": {"hamiltonian": {
                "beta": 0.5,
                "couplings": [[0, 1, 1.0], [1, 2, 1.0], [2, 0, 1.0]],
            }}},
        }))
        .unwrap();
        let reference = ising_ring3(0.5);
        for eta in 0..8 {
            assert_relative_eq!(
                cfg.model.mu().weight(eta),
                reference.mu().weight(eta),
                epsilon = 1e-14
            );
        }
        // Ring neighborhoods are derived from the kernels.
        assert_eq!(cfg.model.neighborhood_size(), 2);
    }

    #[test]
    fn table_config_without_measure_falls_back_to_stationarity() {
        let cfg = load(json!({
            "schema": 1,
            "alphabet": ["0", "1"],
            "sites": ["s0"],
            "kernel": {"table": {"rows": [[[0.7, 0.3], [0.7, 0.3]]]}},
        }))
        .unwrap();
        assert_relative_eq!(cfg.model.mu().weight(0), 0.7, epsilon = 1e-12);
        assert_relative_eq!(cfg.model.mu().weight(1), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn unknown_keys_and_wrong_schema_are_rejected() {
        let err = load_err(json!({
            "schema": 1,
            "alphabett": ["0", "1"],
            "sites": ["s0"],
            "kernel": {"heat_bath": {}},
            "measure": [0.5, 0.5],
        }));
        assert!(matches!(err, ConfigError::Parse(_)), "typo must fail parsing: {err}");
        assert!(err.to_string().contains("alphabett"), "{err}");

        let err = load_err(json!({
            "schema": 2,
            "alphabet": ["0", "1"],
            "sites": ["s0"],
            "kernel": {"heat_bath": {}},
            "measure": [0.5, 0.5],
        }));
        match err {
            ConfigError::Invalid(items) => {
                assert!(items.iter().any(|i| i.starts_with("schema:")), "{items:?}")
            }
            other => panic!("expected Invalid, got {other}"),
        }
    }

    #[test]
    fn measure_and_hamiltonian_conflicts_are_itemized() {
        let mut doc = bernoulli_json(0.3);
        doc["kernel"]["heat_bath"]["hamiltonian"] = json!({"beta": 1.0});
        let err = load_err(doc);
        match err {
            ConfigError::Invalid(items) => {
                assert!(items.iter().any(|i| i.contains("not both")), "{items:?}")
            }
            other => panic!("expected Invalid, got {other}"),
        }

        let err = load_err(json!({
            "schema": 1,
            "alphabet": ["0", "1"],
            "sites": ["s0"],
            "kernel": {"heat_bath": {}},
        }));
        assert!(err.to_string().contains("need a measure or a hamiltonian"), "{err}");
    }

    #[test]
    fn multiple_problems_surface_in_one_pass() {
        let err = load_err(json!({
            "schema": 3,
            "alphabet": ["0", "1"],
            "sites": ["a", "b"],
            "kernel": {"heat_bath": {}},
            "measure": [0.25, 0.25, 0.25, 0.25],
            "events": [
                {"name": "dup", "formula": {"op": "site", "x": 0}},
                {"name": "dup", "formula": {"op": "site", "x": 0}},
                {"name": "broken", "formula": {"op": "site", "x": 5}},
                {"name": "empty"},
            ],
            "tolerance": "loose",
        }));
        match err {
            ConfigError::Invalid(items) => {
                let text = items.join("\n");
                assert!(text.contains("schema:"), "{text}");
                assert!(text.contains("duplicate event name"), "{text}");
                assert!(text.contains("out of range"), "{text}");
                assert!(text.contains("needs a formula or an explicit state list"), "{text}");
                assert!(text.contains("unknown profile 'loose'"), "{text}");
                assert!(items.len() >= 5, "{items:?}");
            }
            other => panic!("expected Invalid, got {other}"),
        }
    }

    #[test]
    fn events_compile_and_carry_monotonicity_flags() {
        let cfg = load(json!({
            "schema": 1,
            "alphabet": ["0", "1"],
            "sites": ["a", "b"],
            "kernel": {"heat_bath": {}},
            "measure": [0.49, 0.21, 0.21, 0.09],
            "events": [
                {"name": "first_up", "formula": {"op": "site", "x": 0}},
                {"name": "both_up", "formula": {"op": "and", "args": [
                    {"op": "site", "x": 0}, {"op": "site", "x": 1}
                ]}},
                {"name": "exact_split", "states": [[0, 1], [1, 0]]},
            ],
        }))
        .unwrap();
        assert_eq!(cfg.events.len(), 3);
        assert!(cfg.events[0].increasing);
        assert!(cfg.events[1].increasing);
        assert!(!cfg.events[2].increasing, "a two-point slice is not upward closed");
        // μ is Bernoulli(0.3)⊗Bernoulli(0.3): check the compiled masks by
        // their measures.
        assert_relative_eq!(cfg.events[0].event.measure(cfg.model.mu()), 0.3, epsilon = 1e-12);
        assert_relative_eq!(
            cfg.events[1].event.measure(cfg.model.mu()),
            0.09,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            cfg.events[2].event.measure(cfg.model.mu()),
            0.42,
            epsilon = 1e-12
        );
    }

    #[test]
    fn families_validate_eagerly_and_threshold_ranges_must_nest() {
        let base = json!({
            "schema": 1,
            "alphabet": ["0", "1"],
            "sites": ["a", "b"],
            "kernel": {"heat_bath": {"hamiltonian": {"beta": 1.0, "couplings": [[0, 1, 0.15]]}}},
            "family": {
                "parameter": [0.25, 0.75],
                "hamiltonian": {"beta": 1.0, "couplings": [[0, 1, 0.15]], "field": {"type": "logit"}},
                "threshold_range": [0.4, 0.6],
            },
        });
        let cfg = load(base.clone()).unwrap();
        assert_eq!(cfg.family_interval, Some((0.25, 0.75)));
        assert_eq!(cfg.threshold_range, Some((0.4, 0.6)));
        let family = cfg.family.expect("family built");
        let member = family.model_at(0.5).unwrap();
        assert_eq!(member.num_states(), 4);

        let mut bad = base.clone();
        bad["family"]["threshold_range"] = json!([0.2, 0.6]);
        let err = load_err(bad);
        assert!(err.to_string().contains("threshold_range"), "{err}");

        let mut bad = base;
        bad["family"]["parameter"] = json!([0.0, 0.9]);
        let err = load_err(bad);
        assert!(err.to_string().contains("logit"), "{err}");
    }

    #[test]
    fn structural_model_errors_are_reported_with_context() {
        // Rows that do not sum to one.
        let err = load_err(json!({
            "schema": 1,
            "alphabet": ["0", "1"],
            "sites": ["s0"],
            "kernel": {"table": {"rows": [[[0.9, 0.3], [0.7, 0.3]]]}},
        }));
        assert!(err.to_string().contains("kernel.table"), "{err}");

        // Declared neighborhoods too small for genuinely interacting kernels.
        let err = load_err(json!({
            "schema": 1,
            "alphabet": ["0", "1"],
            "sites": ["a", "b"],
            "neighborhoods": [[], []],
            "kernel": {"heat_bath": {"hamiltonian": {"beta": 1.0, "couplings": [[0, 1, 0.8]]}}},
        }));
        assert!(err.to_string().contains("model:"), "{err}");

        // State cap too small to enumerate.
        let err = load_err(json!({
            "schema": 1,
            "alphabet": ["0", "1"],
            "sites": ["a", "b", "c"],
            "kernel": {"heat_bath": {}},
            "measure": [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            "state_cap": 4,
        }));
        assert!(err.to_string().contains("state space"), "{err}");
    }
}
