//! Finite configuration spaces Ω = E^𝒢, resampling kernels, and models.
//!
//! A configuration assigns to every site x ∈ 𝒢 a symbol from the finite
//! alphabet E. Configurations are enumerated lexicographically: the first
//! site is the most significant digit, symbols in alphabet order, so for
//! E = {0,1} and two sites the order is 00, 01, 10, 11.
//!
//! A kernel family gives, for every site x and configuration η, a probability
//! vector μ_{x,η} on E — the law used to resample the value at x. The family
//! is *finite range* when μ_{x,η} depends on η only through the declared
//! neighborhood 𝒩(x); we verify this exhaustively rather than assume it.
//! Heat-bath kernels μ_{x,ξ}(a) = μ(η(x) = a | η = ξ off x) are built
//! directly from a strictly positive measure μ and are reversible by
//! construction; table kernels are accepted only after passing the same
//! detailed-balance and finite-range checks.

use nalgebra::{DMatrix, DVector};
use petgraph::graph::DiGraph;
use thiserror::Error;

/// Hard cap on enumerated state-space size (|E|^|𝒢| ≤ 2^20 by default).
pub const DEFAULT_STATE_CAP: usize = 1 << 20;

/// Agreement threshold for the exhaustive finite-range test. Conditionals
/// computed from Gibbs weights agree mathematically off the neighborhood but
/// not bitwise, so "exact" means within the structural tolerance.
pub const RANGE_TOL: f64 = 1e-10;

/// Detailed-balance tolerance (structural identity).
pub const BALANCE_TOL: f64 = 1e-10;

/// Probability vectors must be normalized within this.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Residual tolerance for the stationarity equation μᵀL = 0.
pub const ERGODIC_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("alphabet needs at least two distinct symbols, got {0}")]
    AlphabetTooSmall(usize),
    #[error("duplicate symbol {0:?} in alphabet")]
    DuplicateSymbol(String),
    #[error("duplicate site name {0:?}")]
    SiteClash(String),
    #[error("unknown site {0:?}")]
    UnknownSite(String),
    #[error("site index {0} out of range ({1} sites)")]
    SiteIndexOutOfRange(usize, usize),
    #[error("state space would have {required} states, exceeding the cap {cap}")]
    CapExceeded { required: usize, cap: usize },
    #[error("site {site}: neighborhood self-membership ({contains}) disagrees with the declared include_self flag ({declared})")]
    SelfMembershipInconsistent { site: usize, contains: bool, declared: bool },
    #[error("measure has {got} weights, state space has {want}")]
    MeasureLength { got: usize, want: usize },
    #[error("measure weight at state {0} is negative ({1})")]
    NegativeWeight(usize, f64),
    #[error("measure weights sum to {0}, not 1 (tolerance {NORMALIZATION_TOL})")]
    NotNormalized(f64),
    #[error("measure must be strictly positive for this operation; state {0} has zero mass")]
    NotStrictlyPositive(usize),
    #[error("conditional at site {site}, state {state} has zero total mass")]
    ZeroMass { site: usize, state: usize },
    #[error("kernel row for site {site}, state {state} is not a probability vector (sum {sum})")]
    BadKernelRow { site: usize, state: usize, sum: f64 },
    #[error("kernel family has {got} site kernels, expected {want}")]
    KernelCount { got: usize, want: usize },
    #[error("kernel matrix for site {site} is {rows}×{cols}, expected {want_rows}×{want_cols}")]
    KernelShape { site: usize, rows: usize, cols: usize, want_rows: usize, want_cols: usize },
    #[error("finite-range violation at site {site}: states {a} and {b} agree on the declared neighborhood but their kernel rows differ by {diff:.3e}")]
    RangeViolation { site: usize, a: usize, b: usize, diff: f64 },
    #[error("detailed balance violated: worst residual {worst:.3e} at site {site}, state {state}, symbol {symbol}")]
    DetailedBalanceViolated { worst: f64, site: usize, state: usize, symbol: usize },
    #[error("kernel is not ergodic: {closed_classes} closed communicating classes (stationary kernel dimension > 1)")]
    NotErgodic { closed_classes: usize },
    #[error("stationary solve failed: singular bordered system")]
    SingularSolve,
    #[error("stationary residual ‖μᵀL‖∞ = {0:.3e} exceeds {ERGODIC_TOL}")]
    StationaryResidual(f64),
    #[error("product requires identical alphabets")]
    AlphabetMismatch,
    #[error("hamiltonian models require a two-symbol alphabet, got {0} symbols")]
    NotBinary(usize),
}

// ─── Alphabet ────────────────────────────────────────────────────────────────

/// Ordered finite alphabet E. Symbol identity is positional: ops that need
/// E = {0,1} accept any two-symbol alphabet and use index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new(symbols: Vec<String>) -> Result<Self, ModelError> {
        if symbols.len() < 2 {
            return Err(ModelError::AlphabetTooSmall(symbols.len()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(ModelError::DuplicateSymbol(s.clone()));
            }
        }
        Ok(Self { symbols })
    }

    /// The two-symbol alphabet {0, 1}.
    pub fn binary() -> Self {
        Self { symbols: vec!["0".into(), "1".into()] }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false // by construction ≥ 2 symbols
    }

    pub fn is_binary(&self) -> bool {
        self.symbols.len() == 2
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }
}

// ─── Sites and neighborhoods ─────────────────────────────────────────────────

/// Finite site set 𝒢 with a declared dependency neighborhood 𝒩(x) per site
/// (indices into the site list). Self-membership must be consistent across
/// sites and match the `include_self` flag: kernels that depend on the
/// current value at x must declare x ∈ 𝒩(x).
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet {
    names: Vec<String>,
    neighborhoods: Vec<Vec<usize>>,
    include_self: bool,
}

impl SiteSet {
    pub fn new(
        names: Vec<String>,
        neighborhoods: Vec<Vec<usize>>,
        include_self: bool,
    ) -> Result<Self, ModelError> {
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(ModelError::SiteClash(n.clone()));
            }
        }
        if neighborhoods.len() != names.len() {
            return Err(ModelError::KernelCount { got: neighborhoods.len(), want: names.len() });
        }
        let mut neighborhoods = neighborhoods;
        for (x, nbhd) in neighborhoods.iter_mut().enumerate() {
            nbhd.sort_unstable();
            nbhd.dedup();
            if let Some(&bad) = nbhd.iter().find(|&&y| y >= names.len()) {
                return Err(ModelError::SiteIndexOutOfRange(bad, names.len()));
            }
            let contains = nbhd.contains(&x);
            if contains != include_self {
                return Err(ModelError::SelfMembershipInconsistent {
                    site: x,
                    contains,
                    declared: include_self,
                });
            }
        }
        Ok(Self { names, neighborhoods, include_self })
    }

    /// Sites with no declared dependencies (beyond self, per the flag).
    pub fn isolated(names: Vec<String>) -> Result<Self, ModelError> {
        let n = names.len();
        Self::new(names, vec![Vec::new(); n], false)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn neighborhood(&self, x: usize) -> &[usize] {
        &self.neighborhoods[x]
    }

    pub fn include_self(&self) -> bool {
        self.include_self
    }

    /// Size of the largest declared neighborhood.
    pub fn max_neighborhood_size(&self) -> usize {
        self.neighborhoods.iter().map(Vec::len).max().unwrap_or(0)
    }
}

// ─── Configurations and enumeration ──────────────────────────────────────────

/// One point of Ω: a symbol index per site, in site order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    values: Vec<u8>,
}

impl Configuration {
    pub fn new(values: Vec<u8>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn value_at(&self, site: usize) -> u8 {
        self.values[site]
    }
}

/// Index arithmetic for Ω = E^𝒢 under the lexicographic enumeration
/// (site 0 most significant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    num_sites: usize,
    num_symbols: usize,
    num_states: usize,
    strides: Vec<usize>,
}

impl StateSpace {
    pub fn new(num_symbols: usize, num_sites: usize, cap: usize) -> Result<Self, ModelError> {
        let required = (num_symbols as u128).checked_pow(num_sites as u32);
        let num_states = match required {
            Some(n) if n <= cap as u128 => n as usize,
            _ => {
                return Err(ModelError::CapExceeded {
                    required: required.map_or(usize::MAX, |n| n.min(usize::MAX as u128) as usize),
                    cap,
                })
            }
        };
        let mut strides = vec![0usize; num_sites];
        let mut s = 1;
        for x in (0..num_sites).rev() {
            strides[x] = s;
            s *= num_symbols;
        }
        Ok(Self { num_sites, num_symbols, num_states, strides })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Symbol index at `site` of the state with index `idx`.
    #[inline]
    pub fn digit(&self, idx: usize, site: usize) -> usize {
        (idx / self.strides[site]) % self.num_symbols
    }

    /// Index of η_{x↦a}: the state `idx` with the value at `site` replaced.
    #[inline]
    pub fn with_digit(&self, idx: usize, site: usize, a: usize) -> usize {
        let old = self.digit(idx, site);
        idx - old * self.strides[site] + a * self.strides[site]
    }

    pub fn config_of(&self, idx: usize) -> Configuration {
        Configuration::new((0..self.num_sites).map(|x| self.digit(idx, x) as u8).collect())
    }

    pub fn index_of(&self, config: &Configuration) -> usize {
        config
            .values()
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| v as usize * s)
            .sum()
    }
}

/// Materialize the full lexicographic enumeration of Ω.
pub fn enumerate_states(
    alphabet: &Alphabet,
    sites: &SiteSet,
    cap: Option<usize>,
) -> Result<Vec<Configuration>, ModelError> {
    let space = StateSpace::new(alphabet.len(), sites.len(), cap.unwrap_or(DEFAULT_STATE_CAP))?;
    Ok((0..space.num_states()).map(|i| space.config_of(i)).collect())
}

// ─── Measures ────────────────────────────────────────────────────────────────

/// Probability measure on Ω as a dense weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    weights: DVector<f64>,
    strictly_positive: bool,
}

impl Measure {
    /// Weights must be nonnegative and sum to 1 within `NORMALIZATION_TOL`.
    pub fn new(weights: DVector<f64>) -> Result<Self, ModelError> {
        for (i, &w) in weights.iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                return Err(ModelError::NegativeWeight(i, w));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(ModelError::NotNormalized(sum));
        }
        let strictly_positive = weights.iter().all(|&w| w > 0.0);
        Ok(Self { weights, strictly_positive })
    }

    /// Normalize arbitrary nonnegative weights (config ingestion path).
    pub fn normalized(weights: DVector<f64>) -> Result<Self, ModelError> {
        for (i, &w) in weights.iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                return Err(ModelError::NegativeWeight(i, w));
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(ModelError::NotNormalized(sum));
        }
        Measure::new(weights / sum)
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: DVector::from_element(n, 1.0 / n as f64),
            strictly_positive: true,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.len() == 0
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.weights[idx]
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    /// ∫ f dμ.
    pub fn expect(&self, f: &DVector<f64>) -> f64 {
        self.weights.dot(f)
    }
}

// ─── Kernel families ─────────────────────────────────────────────────────────

/// Per-site resampling kernels: `per_site[x]` is an |Ω| × |E| matrix whose
/// row η is the probability vector μ_{x,η} on E.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily {
    per_site: Vec<DMatrix<f64>>,
}

impl KernelFamily {
    pub fn new(per_site: Vec<DMatrix<f64>>, space: &StateSpace) -> Result<Self, ModelError> {
        if per_site.len() != space.num_sites() {
            return Err(ModelError::KernelCount { got: per_site.len(), want: space.num_sites() });
        }
        for (x, k) in per_site.iter().enumerate() {
            if k.nrows() != space.num_states() || k.ncols() != space.num_symbols() {
                return Err(ModelError::KernelShape {
                    site: x,
                    rows: k.nrows(),
                    cols: k.ncols(),
                    want_rows: space.num_states(),
                    want_cols: space.num_symbols(),
                });
            }
            for eta in 0..k.nrows() {
                let mut sum = 0.0;
                for a in 0..k.ncols() {
                    let p = k[(eta, a)];
                    if p < 0.0 || !p.is_finite() {
                        return Err(ModelError::BadKernelRow { site: x, state: eta, sum: p });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(ModelError::BadKernelRow { site: x, state: eta, sum });
                }
            }
        }
        Ok(Self { per_site })
    }

    pub fn site(&self, x: usize) -> &DMatrix<f64> {
        &self.per_site[x]
    }

    pub fn num_sites(&self) -> usize {
        self.per_site.len()
    }

    /// α = inf over sites, states, symbols of μ_{x,η}(e).
    pub fn min_probability(&self) -> f64 {
        self.per_site
            .iter()
            .flat_map(|k| k.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Exhaustive finite-range verification: group states by their
    /// restriction to 𝒩(x) (and x itself when kernels may read it) and demand
    /// identical kernel rows within `RANGE_TOL` inside each group. Linear in
    /// |Ω| per site, equivalent to the all-pairs agreement test.
    pub fn verify_finite_range(
        &self,
        space: &StateSpace,
        sites: &SiteSet,
    ) -> Result<(), ModelError> {
        use std::collections::HashMap;
        for x in 0..sites.len() {
            let nbhd = sites.neighborhood(x);
            let mut seen: HashMap<Vec<u8>, usize> = HashMap::new();
            for eta in 0..space.num_states() {
                let key: Vec<u8> = nbhd.iter().map(|&y| space.digit(eta, y) as u8).collect();
                match seen.entry(key) {
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(eta);
                    }
                    std::collections::hash_map::Entry::Occupied(e) => {
                        let rep = *e.get();
                        let mut diff = 0.0f64;
                        for a in 0..space.num_symbols() {
                            diff = diff
                                .max((self.per_site[x][(eta, a)] - self.per_site[x][(rep, a)]).abs());
                        }
                        if diff > RANGE_TOL {
                            return Err(ModelError::RangeViolation { site: x, a: rep, b: eta, diff });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Minimal dependency neighborhoods, derived exhaustively: y ∈ 𝒩(x) iff
    /// some pair of states differing only at y has kernel rows differing by
    /// more than `RANGE_TOL` at x.
    pub fn derive_neighborhoods(&self, space: &StateSpace) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(space.num_sites());
        for x in 0..space.num_sites() {
            let k = &self.per_site[x];
            let mut nbhd = Vec::new();
            'site: for y in 0..space.num_sites() {
                for eta in 0..space.num_states() {
                    if space.digit(eta, y) != 0 {
                        continue;
                    }
                    for b in 1..space.num_symbols() {
                        let etab = space.with_digit(eta, y, b);
                        for a in 0..space.num_symbols() {
                            if (k[(eta, a)] - k[(etab, a)]).abs() > RANGE_TOL {
                                nbhd.push(y);
                                continue 'site;
                            }
                        }
                    }
                }
            }
            out.push(nbhd);
        }
        out
    }
}

/// Heat-bath kernels of a strictly positive measure:
/// μ_{x,ξ}(a) = μ(ξ_{x↦a}) / Σ_b μ(ξ_{x↦b}).
pub fn heat_bath_kernels(mu: &Measure, space: &StateSpace) -> Result<KernelFamily, ModelError> {
    let n = space.num_states();
    let e = space.num_symbols();
    let mut per_site = Vec::with_capacity(space.num_sites());
    for x in 0..space.num_sites() {
        let mut k = DMatrix::zeros(n, e);
        for eta in 0..n {
            let mut total = 0.0;
            for b in 0..e {
                total += mu.weight(space.with_digit(eta, x, b));
            }
            if total <= 0.0 {
                return Err(ModelError::ZeroMass { site: x, state: eta });
            }
            for a in 0..e {
                k[(eta, a)] = mu.weight(space.with_digit(eta, x, a)) / total;
            }
        }
        per_site.push(k);
    }
    KernelFamily::new(per_site, space)
}

// ─── Detailed balance ────────────────────────────────────────────────────────

/// Outcome of the exhaustive reversibility check
/// μ(η) μ_{x,η}(a) = μ(η_{x↦a}) μ_{x,η_{x↦a}}(η(x)).
#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub ok: bool,
    pub worst: f64,
    /// (site, state, symbol) achieving the worst residual.
    pub worst_at: (usize, usize, usize),
}

pub fn detailed_balance_report(
    kernels: &KernelFamily,
    mu: &Measure,
    space: &StateSpace,
) -> BalanceReport {
    let mut worst = 0.0f64;
    let mut worst_at = (0, 0, 0);
    for x in 0..space.num_sites() {
        let k = kernels.site(x);
        for eta in 0..space.num_states() {
            let cur = space.digit(eta, x);
            for a in 0..space.num_symbols() {
                let xi = space.with_digit(eta, x, a);
                let lhs = mu.weight(eta) * k[(eta, a)];
                let rhs = mu.weight(xi) * k[(xi, cur)];
                let diff = (lhs - rhs).abs();
                if diff > worst {
                    worst = diff;
                    worst_at = (x, eta, a);
                }
            }
        }
    }
    BalanceReport { ok: worst <= BALANCE_TOL, worst, worst_at }
}

// ─── Stationarity ────────────────────────────────────────────────────────────

/// Dense generator L = Σ_x (Ψ_x − I) built straight from the kernels.
pub fn generator_from_kernels(kernels: &KernelFamily, space: &StateSpace) -> DMatrix<f64> {
    let n = space.num_states();
    let mut l = DMatrix::zeros(n, n);
    for x in 0..space.num_sites() {
        let k = kernels.site(x);
        for eta in 0..n {
            for a in 0..space.num_symbols() {
                let xi = space.with_digit(eta, x, a);
                l[(eta, xi)] += k[(eta, a)];
            }
            l[(eta, eta)] -= 1.0;
        }
    }
    l
}

/// Unique stationary probability vector of the jump process, i.e. the solution
/// of μᵀL = 0. Ergodicity is detected combinatorially: the dimension of the
/// left kernel of L equals the number of closed communicating classes of the
/// positive-rate transition graph, so more than one closed class means the
/// stationary vector is not unique. The solve itself is one LU of a bordered
/// system; the residual is checked against `ERGODIC_TOL` and tiny negative
/// entries (≥ −1e−12) are clamped to zero before renormalizing.
pub fn stationary_measure(
    kernels: &KernelFamily,
    space: &StateSpace,
) -> Result<Measure, ModelError> {
    let n = space.num_states();
    let l = generator_from_kernels(kernels, space);

    // Closed communicating classes of the embedded transition graph.
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n * space.num_sites());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for eta in 0..n {
        for xi in 0..n {
            if eta != xi && l[(eta, xi)] > 0.0 {
                graph.add_edge(nodes[eta], nodes[xi], ());
            }
        }
    }
    let sccs = petgraph::algo::tarjan_scc(&graph);
    let mut scc_of = vec![0usize; n];
    for (c, scc) in sccs.iter().enumerate() {
        for &node in scc {
            scc_of[node.index()] = c;
        }
    }
    let mut closed = vec![true; sccs.len()];
    for eta in 0..n {
        for xi in 0..n {
            if eta != xi && l[(eta, xi)] > 0.0 && scc_of[eta] != scc_of[xi] {
                closed[scc_of[eta]] = false;
            }
        }
    }
    let closed_classes = closed.iter().filter(|&&c| c).count();
    if closed_classes != 1 {
        return Err(ModelError::NotErgodic { closed_classes });
    }

    // Solve the bordered system: Lᵀ with its last row replaced by 1ᵀ, rhs e_n.
    let mut a = l.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let mu = a.lu().solve(&b).ok_or(ModelError::SingularSolve)?;

    let residual = (l.transpose() * &mu).amax();
    if residual > ERGODIC_TOL {
        return Err(ModelError::StationaryResidual(residual));
    }
    let mut w = mu;
    for v in w.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-12 {
                return Err(ModelError::StationaryResidual(-*v));
            }
            *v = 0.0;
        }
    }
    let sum: f64 = w.iter().sum();
    Measure::new(w / sum)
}

// ─── Models ──────────────────────────────────────────────────────────────────

/// A fully validated system: alphabet, sites, kernels, reversible measure.
/// Assembly re-verifies the invariants (probability rows, finite range
/// against the declared neighborhoods, detailed balance, strict positivity)
/// instead of trusting the caller; α = inf μ_{x,η}(e) is cached.
#[derive(Debug, Clone)]
pub struct Model {
    alphabet: Alphabet,
    sites: SiteSet,
    space: StateSpace,
    kernels: KernelFamily,
    mu: Measure,
    alpha: f64,
}

impl Model {
    pub fn assemble(
        alphabet: Alphabet,
        sites: SiteSet,
        kernels: KernelFamily,
        mu: Measure,
    ) -> Result<Self, ModelError> {
        let space = StateSpace::new(alphabet.len(), sites.len(), DEFAULT_STATE_CAP)?;
        if mu.len() != space.num_states() {
            return Err(ModelError::MeasureLength { got: mu.len(), want: space.num_states() });
        }
        if let Some(zero) = mu.weights().iter().position(|&w| w <= 0.0) {
            return Err(ModelError::NotStrictlyPositive(zero));
        }
        // Re-validate kernel shape/rows against this space.
        let kernels = KernelFamily::new(
            (0..kernels.num_sites()).map(|x| kernels.site(x).clone()).collect(),
            &space,
        )?;
        kernels.verify_finite_range(&space, &sites)?;
        let balance = detailed_balance_report(&kernels, &mu, &space);
        if !balance.ok {
            let (site, state, symbol) = balance.worst_at;
            return Err(ModelError::DetailedBalanceViolated {
                worst: balance.worst,
                site,
                state,
                symbol,
            });
        }
        let alpha = kernels.min_probability();
        Ok(Self { alphabet, sites, space, kernels, mu, alpha })
    }

    /// Heat-bath model of a strictly positive measure; neighborhoods are
    /// derived from the kernels by the exhaustive agreement test.
    pub fn heat_bath(
        alphabet: Alphabet,
        site_names: Vec<String>,
        mu: Measure,
    ) -> Result<Self, ModelError> {
        let space = StateSpace::new(alphabet.len(), site_names.len(), DEFAULT_STATE_CAP)?;
        if mu.len() != space.num_states() {
            return Err(ModelError::MeasureLength { got: mu.len(), want: space.num_states() });
        }
        if let Some(zero) = mu.weights().iter().position(|&w| w <= 0.0) {
            return Err(ModelError::NotStrictlyPositive(zero));
        }
        let kernels = heat_bath_kernels(&mu, &space)?;
        let neighborhoods = kernels.derive_neighborhoods(&space);
        let sites = SiteSet::new(site_names, neighborhoods, false)?;
        Model::assemble(alphabet, sites, kernels, mu)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn kernels(&self) -> &KernelFamily {
        &self.kernels
    }

    pub fn kernel(&self, x: usize) -> &DMatrix<f64> {
        self.kernels.site(x)
    }

    pub fn mu(&self) -> &Measure {
        &self.mu
    }

    /// α = inf_{x,η,e} μ_{x,η}(e).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_states(&self) -> usize {
        self.space.num_states()
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    /// |𝒩| for use in the commutation/variance constants: the largest
    /// declared neighborhood, clamped to ≥ 1 (the constants are monotone in
    /// |𝒩|, so clamping an empty neighborhood up to 1 stays a valid bound).
    pub fn neighborhood_size(&self) -> usize {
        self.sites.max_neighborhood_size().max(1)
    }

    pub fn detailed_balance(&self) -> BalanceReport {
        detailed_balance_report(&self.kernels, &self.mu, &self.space)
    }
}

/// Product of two models on disjoint site sets with the same alphabet:
/// sites are concatenated, μ is the product measure, and each factor's
/// kernels act on their own coordinates.
pub fn product_model(m1: &Model, m2: &Model) -> Result<Model, ModelError> {
    if m1.alphabet() != m2.alphabet() {
        return Err(ModelError::AlphabetMismatch);
    }
    for name in m2.sites().names() {
        if m1.sites().index_of(name).is_some() {
            return Err(ModelError::SiteClash(name.clone()));
        }
    }
    let names: Vec<String> = m1
        .sites()
        .names()
        .iter()
        .chain(m2.sites().names())
        .cloned()
        .collect();
    let offset = m1.num_sites();
    let mut neighborhoods: Vec<Vec<usize>> =
        (0..m1.num_sites()).map(|x| m1.sites().neighborhood(x).to_vec()).collect();
    neighborhoods.extend(
        (0..m2.num_sites())
            .map(|x| m2.sites().neighborhood(x).iter().map(|&y| y + offset).collect()),
    );
    let include_self = m1.sites().include_self();
    if include_self != m2.sites().include_self() {
        return Err(ModelError::SelfMembershipInconsistent {
            site: offset,
            contains: m2.sites().include_self(),
            declared: include_self,
        });
    }
    let sites = SiteSet::new(names, neighborhoods, include_self)?;
    let space = StateSpace::new(m1.alphabet().len(), sites.len(), DEFAULT_STATE_CAP)?;

    let n1 = m1.num_states();
    let n2 = m2.num_states();
    let mut weights = DVector::zeros(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            weights[i * n2 + j] = m1.mu().weight(i) * m2.mu().weight(j);
        }
    }
    let mu = Measure::new(weights)?;

    let e = m1.alphabet().len();
    let mut per_site = Vec::with_capacity(sites.len());
    for x in 0..m1.num_sites() {
        let k1 = m1.kernel(x);
        let mut k = DMatrix::zeros(n1 * n2, e);
        for i in 0..n1 {
            for j in 0..n2 {
                for a in 0..e {
                    k[(i * n2 + j, a)] = k1[(i, a)];
                }
            }
        }
        per_site.push(k);
    }
    for x in 0..m2.num_sites() {
        let k2 = m2.kernel(x);
        let mut k = DMatrix::zeros(n1 * n2, e);
        for i in 0..n1 {
            for j in 0..n2 {
                for a in 0..e {
                    k[(i * n2 + j, a)] = k2[(j, a)];
                }
            }
        }
        per_site.push(k);
    }
    let kernels = KernelFamily::new(per_site, &space)?;
    Model::assemble(m1.alphabet().clone(), sites, kernels, mu)
}

// ─── Gibbs measures (binary spins) ───────────────────────────────────────────

/// Weights w(η) ∝ exp(β Σ_{(x,y,J)} J σ_x σ_y + h Σ_x σ_x) with spins
/// σ = ±1 mapped from the two symbol indices. Couplings use site indices.
pub fn gibbs_measure(
    space: &StateSpace,
    beta: f64,
    couplings: &[(usize, usize, f64)],
    field: f64,
) -> Result<Measure, ModelError> {
    if space.num_symbols() != 2 {
        return Err(ModelError::NotBinary(space.num_symbols()));
    }
    for &(x, y, _) in couplings {
        let n = space.num_sites();
        if x >= n {
            return Err(ModelError::SiteIndexOutOfRange(x, n));
        }
        if y >= n {
            return Err(ModelError::SiteIndexOutOfRange(y, n));
        }
    }
    let spin = |idx: usize, x: usize| 2.0 * space.digit(idx, x) as f64 - 1.0;
    let mut weights = DVector::zeros(space.num_states());
    for eta in 0..space.num_states() {
        let mut energy = 0.0;
        for &(x, y, j) in couplings {
            energy += j * spin(eta, x) * spin(eta, y);
        }
        let mag: f64 = (0..space.num_sites()).map(|x| spin(eta, x)).sum();
        weights[eta] = (beta * energy + field * mag).exp();
    }
    Measure::normalized(weights)
}

/// Heat-bath model of a binary Gibbs measure (named sites, ±1 spins).
pub fn gibbs_heat_bath(
    site_names: Vec<String>,
    beta: f64,
    couplings: &[(usize, usize, f64)],
    field: f64,
) -> Result<Model, ModelError> {
    let alphabet = Alphabet::binary();
    let space = StateSpace::new(2, site_names.len(), DEFAULT_STATE_CAP)?;
    let mu = gibbs_measure(&space, beta, couplings, field)?;
    Model::heat_bath(alphabet, site_names, mu)
}

/// 3-site ring at inverse temperature β, zero field: the dependent reference
/// model used throughout the test suites.
pub fn ising_ring3(beta: f64) -> Model {
    gibbs_heat_bath(
        vec!["r0".into(), "r1".into(), "r2".into()],
        beta,
        &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
        0.0,
    )
    .expect("ring model is well formed")
}

/// Single site with μ{1} = p.
pub fn bernoulli_site(p: f64) -> Result<Model, ModelError> {
    Model::heat_bath(
        Alphabet::binary(),
        vec!["s0".into()],
        Measure::new(DVector::from_vec(vec![1.0 - p, p]))?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_site_ising(beta: f64) -> Model {
        gibbs_heat_bath(vec!["a".into(), "b".into()], beta, &[(0, 1, 1.0)], 0.0).unwrap()
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let alphabet = Alphabet::binary();
        let sites = SiteSet::isolated(vec!["a".into(), "b".into()]).unwrap();
        let states = enumerate_states(&alphabet, &sites, None).unwrap();
        let digits: Vec<Vec<u8>> = states.iter().map(|c| c.values().to_vec()).collect();
        assert_eq!(digits, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn index_roundtrip_and_flip() {
        let space = StateSpace::new(3, 4, DEFAULT_STATE_CAP).unwrap();
        for idx in 0..space.num_states() {
            assert_eq!(space.index_of(&space.config_of(idx)), idx);
        }
        // f: flipping a digit changes exactly that digit.
        let idx = space.index_of(&Configuration::new(vec![2, 0, 1, 1]));
        let flipped = space.with_digit(idx, 1, 2);
        assert_eq!(space.config_of(flipped).values(), &[2, 2, 1, 1]);
    }

    #[test]
    fn cap_is_enforced() {
        let err = StateSpace::new(2, 21, 1 << 20).unwrap_err();
        assert!(matches!(err, ModelError::CapExceeded { .. }));
        assert!(StateSpace::new(2, 20, 1 << 20).is_ok());
    }

    #[test]
    fn heat_bath_rows_match_direct_conditioning() {
        // Oracle: compute μ(η(x)=a | η=ξ off x) by direct summation over the
        // two states agreeing with ξ off x.
        let m = two_site_ising(0.7);
        let space = m.space();
        for x in 0..2 {
            for eta in 0..4 {
                let mut total = 0.0;
                let mut per = [0.0f64; 2];
                for a in 0..2 {
                    let w = m.mu().weight(space.with_digit(eta, x, a));
                    per[a] = w;
                    total += w;
                }
                for a in 0..2 {
                    assert_relative_eq!(
                        m.kernel(x)[(eta, a)],
                        per[a] / total,
                        max_relative = 1e-14
                    );
                }
            }
        }
    }

    #[test]
    fn heat_bath_kernel_ignores_own_site() {
        let m = two_site_ising(0.7);
        let space = m.space();
        for x in 0..2 {
            for eta in 0..4 {
                let flipped = space.with_digit(eta, x, 1 - space.digit(eta, x));
                for a in 0..2 {
                    assert_eq!(m.kernel(x)[(eta, a)], m.kernel(x)[(flipped, a)]);
                }
            }
        }
    }

    #[test]
    fn derived_neighborhoods_match_coupling_graph() {
        let m = ising_ring3(0.5);
        for x in 0..3 {
            let mut expected: Vec<usize> = (0..3).filter(|&y| y != x).collect();
            expected.sort_unstable();
            assert_eq!(m.sites().neighborhood(x), &expected[..]);
        }
        // Product measure ⇒ empty neighborhoods.
        let b = bernoulli_site(0.3).unwrap();
        assert!(b.sites().neighborhood(0).is_empty());
        assert_eq!(b.neighborhood_size(), 1, "clamped to ≥ 1 for constants");
    }

    #[test]
    fn detailed_balance_holds_for_heat_bath_and_fails_for_mismatched_table() {
        let m = ising_ring3(0.5);
        let report = m.detailed_balance();
        assert!(report.ok, "worst residual {}", report.worst);

        // Table kernel resampling from the *wrong* conditional: uniform rows
        // against a non-uniform μ.
        let space = StateSpace::new(2, 1, DEFAULT_STATE_CAP).unwrap();
        let mu = Measure::new(DVector::from_vec(vec![0.7, 0.3])).unwrap();
        let k = KernelFamily::new(vec![DMatrix::from_element(2, 2, 0.5)], &space).unwrap();
        let report = detailed_balance_report(&k, &mu, &space);
        assert!(!report.ok);
        assert!(report.worst > 0.1);
    }

    #[test]
    fn alpha_is_min_kernel_entry() {
        let p = 0.3;
        let m = bernoulli_site(p).unwrap();
        assert_relative_eq!(m.alpha(), p, max_relative = 1e-15);
    }

    #[test]
    fn stationary_measure_recovers_inputs() {
        // Uniform single-site resampling → uniform.
        let space = StateSpace::new(2, 3, DEFAULT_STATE_CAP).unwrap();
        let uniform = Measure::uniform(8);
        let k = heat_bath_kernels(&uniform, &space).unwrap();
        let st = stationary_measure(&k, &space).unwrap();
        for i in 0..8 {
            assert_relative_eq!(st.weight(i), 0.125, epsilon = 1e-12);
        }

        // Heat-bath of a random strictly positive μ on 2^10 states → μ.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let space = StateSpace::new(2, 10, DEFAULT_STATE_CAP).unwrap();
        let raw =
            DVector::from_iterator(1024, (0..1024).map(|_| rng.random::<f64>() + 1e-3));
        let mu = Measure::normalized(raw).unwrap();
        let k = heat_bath_kernels(&mu, &space).unwrap();
        let st = stationary_measure(&k, &space).unwrap();
        let worst = (st.weights() - mu.weights()).amax();
        assert!(worst <= 1e-10, "stationary recovery off by {worst}");
    }

    #[test]
    fn stationary_measure_rejects_reducible_kernels() {
        // Two absorbing halves: site 0 never changes, site 1 resamples
        // uniformly. The left kernel of L is 2-dimensional.
        let space = StateSpace::new(2, 2, DEFAULT_STATE_CAP).unwrap();
        let mut keep = DMatrix::zeros(4, 2);
        for eta in 0..4 {
            keep[(eta, space.digit(eta, 0))] = 1.0;
        }
        let uniform = DMatrix::from_element(4, 2, 0.5);
        let k = KernelFamily::new(vec![keep, uniform], &space).unwrap();
        match stationary_measure(&k, &space) {
            Err(ModelError::NotErgodic { closed_classes }) => assert_eq!(closed_classes, 2),
            other => panic!("expected NotErgodic, got {other:?}"),
        }
    }

    #[test]
    fn closed_class_count_matches_svd_kernel_dimension() {
        // Cross-check the combinatorial ergodicity test against a numerical
        // null-space dimension on small kernels, reducible and not.
        let space = StateSpace::new(2, 2, DEFAULT_STATE_CAP).unwrap();
        let mut keep = DMatrix::zeros(4, 2);
        for eta in 0..4 {
            keep[(eta, space.digit(eta, 0))] = 1.0;
        }
        let uniform = DMatrix::from_element(4, 2, 0.5);
        let cases = vec![
            (KernelFamily::new(vec![keep, uniform.clone()], &space).unwrap(), 2usize),
            (KernelFamily::new(vec![uniform.clone(), uniform], &space).unwrap(), 1usize),
        ];
        for (k, expected_dim) in cases {
            let l = generator_from_kernels(&k, &space);
            let svd = l.transpose().svd(false, false);
            let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
            let dim = svd
                .singular_values
                .iter()
                .filter(|&&s| s <= 1e-9 * max_sv.max(1.0))
                .count();
            assert_eq!(dim, expected_dim);
            match stationary_measure(&k, &space) {
                Ok(_) => assert_eq!(expected_dim, 1),
                Err(ModelError::NotErgodic { closed_classes }) => {
                    assert_eq!(closed_classes, expected_dim)
                }
                Err(other) => panic!("unexpected error {other:?}"),
            }
        }
    }

    #[test]
    fn product_of_bernoulli_sites() {
        let m1 = bernoulli_site(0.3).unwrap();
        // Second factor needs a disjoint site name.
        let m2 = Model::heat_bath(
            Alphabet::binary(),
            vec!["t0".into()],
            Measure::new(DVector::from_vec(vec![0.4, 0.6])).unwrap(),
        )
        .unwrap();
        let prod = product_model(&m1, &m2).unwrap();
        assert_eq!(prod.num_states(), 4);
        // Product weights in lexicographic order 00, 01, 10, 11.
        let want = [0.7 * 0.4, 0.7 * 0.6, 0.3 * 0.4, 0.3 * 0.6];
        for (i, w) in want.iter().enumerate() {
            assert_relative_eq!(prod.mu().weight(i), *w, epsilon = 1e-15);
        }
        assert!(prod.detailed_balance().ok);

        // Site clash is rejected.
        let err = product_model(&m1, &m1).unwrap_err();
        assert!(matches!(err, ModelError::SiteClash(_)));
    }

    #[test]
    fn product_matches_single_gibbs_description() {
        // Two decoupled pairs described as one 4-site Hamiltonian equal the
        // product of the two pair models, state by state.
        let pair1 = two_site_ising(0.5);
        let pair2 = gibbs_heat_bath(vec!["c".into(), "d".into()], 0.8, &[(0, 1, 1.0)], 0.0)
            .unwrap();
        let prod = product_model(&pair1, &pair2).unwrap();
        let direct = gibbs_heat_bath(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            1.0,
            &[(0, 1, 0.5), (2, 3, 0.8)],
            0.0,
        )
        .unwrap();
        assert_eq!(prod.num_states(), direct.num_states());
        for i in 0..prod.num_states() {
            assert_relative_eq!(prod.mu().weight(i), direct.mu().weight(i), epsilon = 1e-12);
        }
        for x in 0..4 {
            let d = (prod.kernel(x) - direct.kernel(x)).amax();
            assert!(d <= 1e-12, "site {x} kernels differ by {d}");
        }
    }

    #[test]
    fn finite_range_check_catches_undeclared_dependence() {
        // Ring kernels, but declare empty neighborhoods: must fail.
        let m = ising_ring3(0.5);
        let sites = SiteSet::isolated(m.sites().names().to_vec()).unwrap();
        let err = m.kernels().verify_finite_range(m.space(), &sites).unwrap_err();
        assert!(matches!(err, ModelError::RangeViolation { .. }));
    }

    #[test]
    fn zero_mass_conditional_is_reported() {
        // The slice {η(0) = 0} carries no mass, so conditioning site 1 on it
        // divides by zero total mass.
        let space = StateSpace::new(2, 2, DEFAULT_STATE_CAP).unwrap();
        let mu = Measure::new(DVector::from_vec(vec![0.0, 0.0, 0.5, 0.5])).unwrap();
        let err = heat_bath_kernels(&mu, &space).unwrap_err();
        assert!(matches!(err, ModelError::ZeroMass { site: 1, .. }));
    }

    #[test]
    fn measure_validation() {
        assert!(Measure::new(DVector::from_vec(vec![0.5, 0.6])).is_err());
        assert!(Measure::new(DVector::from_vec(vec![-0.1, 1.1])).is_err());
        let m = Measure::normalized(DVector::from_vec(vec![2.0, 6.0])).unwrap();
        assert_relative_eq!(m.weight(0), 0.25);
        assert!(m.strictly_positive());
    }

    #[test]
    fn self_membership_flag_is_enforced() {
        let err = SiteSet::new(vec!["a".into(), "b".into()], vec![vec![0], vec![0]], false)
            .unwrap_err();
        assert!(matches!(err, ModelError::SelfMembershipInconsistent { .. }));
        assert!(SiteSet::new(vec!["a".into(), "b".into()], vec![vec![0], vec![0, 1]], true).is_ok());
    }
}
