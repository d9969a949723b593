//! Poisson graphical construction: each site carries a unit-rate Poisson
//! clock; a realization on [0, t] is the merged, time-sorted list of rings;
//! composing the per-site averaging operators Ψ_x over a realization and
//! averaging over realizations reproduces the semigroup P_t.
//!
//! Conventions. For ring times t₁ < … < t_n at sites x₁, …, x_n the composed
//! operator is the product Ψ_{x₁}Ψ_{x₂}⋯Ψ_{x_n}; applied to a function, the
//! *latest* ring acts first (the usual transition-operator reading: the first
//! jump's operator sits leftmost). Note the two reading orders have the same
//! *expectation* — reversing time preserves the law of the Poisson points —
//! so Monte Carlo agreement with the exact semigroup cannot distinguish them;
//! the factorization check below is what pins the convention.
//!
//! Determinism. Sample i is drawn from ChaCha8 stream i regardless of the
//! worker count, and the Monte Carlo sums are combined along a fixed binary
//! reduction tree keyed on index ranges, so estimates are bitwise identical
//! for any number of workers and across runs.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::operators::{psi_x, Observable, OperatorError};
use crate::statespace::Model;

/// Tolerance for the exact factorization identity.
pub const FACTORIZATION_TOL: f64 = 1e-12;

/// Smallest admissible Monte Carlo sample count.
pub const MIN_SAMPLES: usize = 100;

/// Below this many samples a reduction block is summed sequentially.
const REDUCTION_BLOCK: usize = 64;

#[derive(Debug, Error)]
pub enum GraphicalError {
    #[error("bad arguments: {0}")]
    BadArgs(String),
    #[error("first realization must end (t = {last_a}) before the second begins (t = {first_b})")]
    OrderViolated { last_a: f64, first_b: f64 },
    #[error("could not build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// A named (seed, stream) pair; identical pairs reproduce identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Finite realization of the per-site Poisson clocks on [0, horizon]:
/// (site, time) pairs with strictly increasing, pairwise distinct times.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonRealization {
    points: Vec<(usize, f64)>,
    horizon: f64,
}

impl PoissonRealization {
    /// Validating constructor (used by tests that build realizations by
    /// hand, e.g. time-shifted ones for the factorization lemma).
    pub fn new(points: Vec<(usize, f64)>, horizon: f64) -> Result<Self, GraphicalError> {
        if !(horizon >= 0.0) {
            return Err(GraphicalError::BadArgs(format!("horizon must be ≥ 0, got {horizon}")));
        }
        for w in points.windows(2) {
            if !(w[0].1 < w[1].1) {
                return Err(GraphicalError::BadArgs(format!(
                    "times must be strictly increasing: {} then {}",
                    w[0].1, w[1].1
                )));
            }
        }
        if let Some(&(_, t)) = points.first() {
            if !(t > 0.0) {
                return Err(GraphicalError::BadArgs(format!("times must be > 0, got {t}")));
            }
        }
        if let Some(&(_, t)) = points.last() {
            if t > horizon {
                return Err(GraphicalError::BadArgs(format!(
                    "time {t} exceeds horizon {horizon}"
                )));
            }
        }
        Ok(Self { points, horizon })
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Copy with all times shifted by `dt` (> 0) and the horizon extended.
    pub fn shifted(&self, dt: f64) -> Result<Self, GraphicalError> {
        Self::new(
            self.points.iter().map(|&(x, t)| (x, t + dt)).collect(),
            self.horizon + dt,
        )
    }
}

/// Sample the merged per-site clocks on [0, t]: unit-exponential
/// interarrivals per site, truncated at t, merged and time-sorted. Exact
/// float ties (probability zero, but floats) trigger a full re-draw.
pub fn sample_ppp(model: &Model, t: f64, rng: &mut ChaCha8Rng) -> PoissonRealization {
    assert!(t >= 0.0, "horizon must be ≥ 0, got {t}");
    for _attempt in 0..1000 {
        let mut points: Vec<(usize, f64)> = Vec::new();
        for x in 0..model.num_sites() {
            let mut clock = 0.0f64;
            loop {
                clock += rng.sample::<f64, _>(Exp1);
                if clock > t {
                    break;
                }
                points.push((x, clock));
            }
        }
        points.sort_by(|a, b| a.1.total_cmp(&b.1));
        let strict = points.windows(2).all(|w| w[0].1 < w[1].1);
        if strict {
            return PoissonRealization { points, horizon: t };
        }
    }
    unreachable!("a thousand consecutive exact float ties");
}

/// Exact application of the composed operator over a realization: for times
/// t₁ < … < t_n this computes Ψ_{x₁}⋯Ψ_{x_n} f, so the latest point is
/// applied to the function first. Empty realizations give back f.
pub fn apply_psi_set(
    model: &Model,
    realization: &PoissonRealization,
    f: &Observable,
) -> Result<Observable, GraphicalError> {
    let mut current = f.clone();
    for &(site, _) in realization.points().iter().rev() {
        current = psi_x(model, site, &current)?;
    }
    Ok(current)
}

/// Outcome of the factorization identity Ψ_{A∪B} f = Ψ_A Ψ_B f for
/// time-separated realizations.
#[derive(Debug, Clone)]
pub struct FactorizationReport {
    pub max_abs_diff: f64,
    pub pass: bool,
}

/// Verify Ψ_{A∪B} f = Ψ_A (Ψ_B f) when every time of A precedes every time
/// of B (the sufficient separation condition; A's operators end up leftmost
/// in the composed product either way).
pub fn check_factorization(
    model: &Model,
    a: &PoissonRealization,
    b: &PoissonRealization,
    f: &Observable,
) -> Result<FactorizationReport, GraphicalError> {
    if let (Some(&(_, last_a)), Some(&(_, first_b))) = (a.points().last(), b.points().first()) {
        if last_a >= first_b {
            return Err(GraphicalError::OrderViolated { last_a, first_b });
        }
    }
    let mut union: Vec<(usize, f64)> = a.points().to_vec();
    union.extend_from_slice(b.points());
    union.sort_by(|p, q| p.1.total_cmp(&q.1));
    let union = PoissonRealization::new(union, a.horizon().max(b.horizon()))?;

    let lhs = apply_psi_set(model, &union, f)?;
    let rhs = apply_psi_set(model, a, &apply_psi_set(model, b, f)?)?;
    let max_abs_diff = (lhs.values() - rhs.values()).amax();
    Ok(FactorizationReport { max_abs_diff, pass: max_abs_diff <= FACTORIZATION_TOL })
}

/// Monte Carlo estimate of P_t f with per-entry standard errors.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub estimate: Observable,
    pub std_err: DVector<f64>,
    pub samples: usize,
}

struct McTask<'a> {
    model: &'a Model,
    t: f64,
    f: &'a Observable,
    seed: u64,
}

impl McTask<'_> {
    fn one(&self, index: usize) -> DVector<f64> {
        let mut rng = RngStream { seed: self.seed, stream: index as u64 }.rng();
        let realization = sample_ppp(self.model, self.t, &mut rng);
        apply_psi_set(self.model, &realization, self.f)
            .expect("sites from the model are always valid")
            .into_values()
    }

    /// Sum of samples and of squared samples over [lo, hi), combined along a
    /// fixed binary tree: the split point depends only on the index range,
    /// so the float summation order is independent of scheduling.
    fn reduce(&self, lo: usize, hi: usize) -> (DVector<f64>, DVector<f64>) {
        if hi - lo <= REDUCTION_BLOCK {
            let n = self.f.len();
            let mut sum = DVector::zeros(n);
            let mut sumsq = DVector::zeros(n);
            for i in lo..hi {
                let v = self.one(i);
                for k in 0..n {
                    sum[k] += v[k];
                    sumsq[k] += v[k] * v[k];
                }
            }
            (sum, sumsq)
        } else {
            let mid = lo + (hi - lo) / 2;
            let ((s0, q0), (s1, q1)) =
                rayon::join(|| self.reduce(lo, mid), || self.reduce(mid, hi));
            (s0 + s1, q0 + q1)
        }
    }
}

/// Average `apply_psi_set` over independent realizations. Deterministic for a
/// fixed seed — bitwise identical across runs *and across worker counts*.
pub fn mc_semigroup(
    model: &Model,
    t: f64,
    f: &Observable,
    n_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<McEstimate, GraphicalError> {
    if n_samples < MIN_SAMPLES {
        return Err(GraphicalError::BadArgs(format!(
            "need at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    if workers == 0 {
        return Err(GraphicalError::BadArgs("need at least one worker".into()));
    }
    if !(t >= 0.0) {
        return Err(GraphicalError::BadArgs(format!("t must be ≥ 0, got {t}")));
    }
    if f.len() != model.num_states() {
        return Err(GraphicalError::Operator(OperatorError::DimensionMismatch {
            got: f.len(),
            want: model.num_states(),
        }));
    }
    let task = McTask { model, t, f, seed };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| GraphicalError::Pool(e.to_string()))?;
    let (sum, sumsq) = pool.install(|| task.reduce(0, n_samples));

    let n = n_samples as f64;
    let estimate = &sum / n;
    let std_err = DVector::from_iterator(
        f.len(),
        (0..f.len()).map(|k| {
            let var = (sumsq[k] - sum[k] * sum[k] / n).max(0.0) / (n - 1.0);
            (var / n).sqrt()
        }),
    );
    Ok(McEstimate { estimate: Observable::new(estimate), std_err, samples: n_samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Generator;
    use crate::statespace::{bernoulli_site, ising_ring3};
    use approx::assert_relative_eq;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_horizon_is_empty_and_seeds_reproduce() {
        let model = ising_ring3(0.5);
        assert!(sample_ppp(&model, 0.0, &mut rng(1)).is_empty());
        let a = sample_ppp(&model, 2.0, &mut rng(7));
        let b = sample_ppp(&model, 2.0, &mut rng(7));
        assert_eq!(a, b, "same seed must give the identical realization");
        let c = sample_ppp(&model, 2.0, &mut rng(8));
        assert_ne!(a, c);
        // Times strictly sorted, sites valid, horizon respected.
        for w in a.points().windows(2) {
            assert!(w[0].1 < w[1].1);
        }
        for &(x, t) in a.points() {
            assert!(x < model.num_sites() && t > 0.0 && t <= 2.0);
        }
    }

    #[test]
    fn point_count_matches_poisson_mean() {
        let model = ising_ring3(0.5);
        let t = 2.0;
        let lambda = model.num_sites() as f64 * t;
        let n = 10_000;
        let mut rng = rng(99);
        let mut total = 0usize;
        for _ in 0..n {
            total += sample_ppp(&model, t, &mut rng).len();
        }
        let mean = total as f64 / n as f64;
        let sigma = (lambda / n as f64).sqrt();
        assert!(
            (mean - lambda).abs() <= 3.0 * sigma,
            "sample mean {mean} vs Poisson mean {lambda} (3σ = {})",
            3.0 * sigma
        );
    }

    #[test]
    fn composition_basics() {
        let model = ising_ring3(0.5);
        let f = Observable::from_fn(8, |i| (i as f64 * 0.77).cos());
        // Empty realization: identity.
        let empty = PoissonRealization::new(vec![], 1.0).unwrap();
        assert_eq!(apply_psi_set(&model, &empty, &f).unwrap(), f);
        // Single point: one averaging step.
        let single = PoissonRealization::new(vec![(1, 0.4)], 1.0).unwrap();
        assert_eq!(
            apply_psi_set(&model, &single, &f).unwrap(),
            psi_x(&model, 1, &f).unwrap()
        );
        // Mean preservation and Markov-operator structure on random sets.
        let mut r = rng(3);
        for _ in 0..20 {
            let a = sample_ppp(&model, 1.5, &mut r);
            let g = apply_psi_set(&model, &a, &f).unwrap();
            assert_relative_eq!(
                model.mu().expect(g.values()),
                model.mu().expect(f.values()),
                epsilon = 1e-12
            );
            let ones = apply_psi_set(&model, &a, &Observable::constant(8, 1.0)).unwrap();
            assert!(ones.values().iter().all(|&v| (v - 1.0).abs() <= 1e-12));
            let nonneg = Observable::from_fn(8, |i| (i % 3) as f64);
            let image = apply_psi_set(&model, &a, &nonneg).unwrap();
            assert!(image.values().iter().all(|&v| v >= -1e-15));
        }
    }

    #[test]
    fn factorization_for_time_separated_sets() {
        let model = ising_ring3(0.5);
        let f = Observable::from_fn(8, |i| ((i * i) as f64).sin());
        let mut r = rng(17);
        for _ in 0..25 {
            let a = sample_ppp(&model, 1.0, &mut r);
            let b = sample_ppp(&model, 1.0, &mut r).shifted(1.0 + 1e-6).unwrap();
            let report = check_factorization(&model, &a, &b, &f).unwrap();
            assert!(report.pass, "diff {}", report.max_abs_diff);
        }
        // A empty: both sides are Ψ_B f.
        let empty = PoissonRealization::new(vec![], 1.0).unwrap();
        let b = sample_ppp(&model, 1.0, &mut r).shifted(2.0).unwrap();
        assert!(check_factorization(&model, &empty, &b, &f).unwrap().pass);
        // Violated order: B starting before A ends.
        let a = PoissonRealization::new(vec![(0, 0.5), (1, 0.9)], 1.0).unwrap();
        let b = PoissonRealization::new(vec![(2, 0.7)], 1.0).unwrap();
        assert!(matches!(
            check_factorization(&model, &a, &b, &f),
            Err(GraphicalError::OrderViolated { .. })
        ));
    }

    #[test]
    fn mc_at_time_zero_returns_f() {
        let model = bernoulli_site(0.3).unwrap();
        let f = Observable::from_fn(2, |i| 0.1 + i as f64);
        let est = mc_semigroup(&model, 0.0, &f, 500, 5, 2).unwrap();
        for k in 0..2 {
            assert!((est.estimate.values()[k] - f.values()[k]).abs() <= 1e-12);
            assert!(est.std_err[k] <= 1e-9);
        }
    }

    #[test]
    fn mc_matches_single_site_closed_form() {
        // P_t f = e^{−t} f + (1 − e^{−t}) ∫f dμ pins the sampler against the
        // one-site solvable case.
        let model = bernoulli_site(0.3).unwrap();
        let f = Observable::from_fn(2, |i| if i == 0 { -1.0 } else { 2.0 });
        let t = 0.7;
        let mean = model.mu().expect(f.values());
        let est = mc_semigroup(&model, t, &f, 20_000, 11, 2).unwrap();
        for k in 0..2 {
            let exact = (-t).exp() * f.values()[k] + (1.0 - (-t).exp()) * mean;
            let err = (est.estimate.values()[k] - exact).abs();
            assert!(
                err <= 4.0 * est.std_err[k],
                "entry {k}: err {err} vs 4σ = {}",
                4.0 * est.std_err[k]
            );
        }
    }

    #[test]
    fn mc_matches_exact_semigroup_on_the_ring() {
        let model = ising_ring3(0.5);
        let generator = Generator::build(&model).unwrap();
        let f = Observable::from_fn(8, |i| (i as f64 / 3.0).cos());
        let t = 1.0;
        let exact = generator.semigroup(t, &f).unwrap();
        let est = mc_semigroup(&model, t, &f, 10_000, 23, 3).unwrap();
        for k in 0..8 {
            let err = (est.estimate.values()[k] - exact.values()[k]).abs();
            assert!(est.std_err[k] > 0.0);
            assert!(
                err <= 4.0 * est.std_err[k],
                "entry {k}: err {err} vs 4σ = {}",
                4.0 * est.std_err[k]
            );
        }
    }

    #[test]
    fn mc_is_bitwise_deterministic_across_worker_counts() {
        let model = ising_ring3(0.5);
        let f = Observable::from_fn(8, |i| (i as f64).sqrt());
        let one = mc_semigroup(&model, 0.8, &f, 1_000, 7, 1).unwrap();
        let four = mc_semigroup(&model, 0.8, &f, 1_000, 7, 4).unwrap();
        assert_eq!(one.estimate.values(), four.estimate.values(), "estimates must be bitwise equal");
        assert_eq!(one.std_err, four.std_err);
        let again = mc_semigroup(&model, 0.8, &f, 1_000, 7, 4).unwrap();
        assert_eq!(four.estimate.values(), again.estimate.values());
        let other = mc_semigroup(&model, 0.8, &f, 1_000, 8, 4).unwrap();
        assert_ne!(one.estimate.values(), other.estimate.values());
    }

    #[test]
    fn mc_rejects_bad_arguments() {
        let model = bernoulli_site(0.5).unwrap();
        let f = Observable::constant(2, 1.0);
        assert!(matches!(
            mc_semigroup(&model, 1.0, &f, 99, 1, 1),
            Err(GraphicalError::BadArgs(_))
        ));
        assert!(matches!(
            mc_semigroup(&model, 1.0, &f, 100, 1, 0),
            Err(GraphicalError::BadArgs(_))
        ));
        assert!(matches!(
            mc_semigroup(&model, -0.5, &f, 100, 1, 1),
            Err(GraphicalError::BadArgs(_))
        ));
        let wrong = Observable::constant(3, 1.0);
        assert!(mc_semigroup(&model, 1.0, &wrong, 100, 1, 1).is_err());
    }
}
