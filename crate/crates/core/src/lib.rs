//! Verification laboratory for functional inequalities on finite interacting
//! particle systems.
//!
//! The objects live on a finite configuration space Ω = E^𝒢 (finite alphabet
//! E, finite site set 𝒢) equipped with a family of single-site resampling
//! kernels μ_{x,η} that is reversible with respect to a reference measure μ.
//! Everything downstream — the generator L, the semigroup P_t, Dirichlet
//! forms, Orlicz norms, the Poincaré / log-Sobolev / Talagrand-type
//! inequalities, Russo-type influence bounds, the Poisson graphical
//! construction, and the binary-tree combinatorics behind the commutation
//! estimate — is computed exactly (dense linear algebra, exact rationals) or
//! with explicitly budgeted numerics, and every inequality the crate claims
//! is re-verified at runtime rather than trusted.
//!
//! Module map:
//! - [`statespace`]: Ω, kernels, measures, models, products, stationarity.
//! - [`operators`]: Ψ_x, D_x, L, Dirichlet forms, eigensolve semigroup.
//! - [`functionals`]: L^p and Luxemburg (Orlicz) norms, variance, entropy.
//! - [`constants`]: spectral gap κ, audited log-Sobolev bound ρ,
//!   hypercontractivity exponents, the good-function constant check.
//! - [`talagrand`]: the assembled variance bound, its L²/L¹ corollary, the
//!   semigroup commutation bound, and the reverse (entropy) direction.
//! - [`graphical`]: Poisson point realizations, Ψ over realizations,
//!   factorization, deterministic Monte Carlo semigroup estimates.
//! - [`trees`]: full binary trees, in-order ℤ-embedding, enumeration,
//!   expansion/decomposition, exact mass polynomials.
//! - [`influence`]: events, pivotal sets, Russo derivatives, sharp-threshold
//!   and KKL-type displays for one-parameter kernel families.
//! - [`config`] / [`report`] / [`cli`]: JSON model configs, run manifests,
//!   tolerance profiles, and the command-line front end.

pub mod cli;
pub mod config;
pub mod constants;
pub mod families;
pub mod functionals;
pub mod graphical;
pub mod influence;
pub mod operators;
pub mod report;
pub mod statespace;
pub mod talagrand;
pub mod trees;
