//! Resampling operators, the generator, Dirichlet forms, and the semigroup.
//!
//! For a kernel family μ_{x,·} the single-site resampling operator is
//!
//!   Ψ_x f(η) = Σ_a μ_{x,η}(a) f(η_{x↦a}),     D_x f = Ψ_x f − f,
//!
//! and the generator of the jump process is L = Σ_x (Ψ_x − I). Reversibility
//! of μ makes S = D^{1/2} L D^{-1/2} symmetric (D = diag μ), so L is
//! diagonalized by a real orthogonal basis; the semigroup P_t = e^{tL} is
//! evaluated through that eigendecomposition. The Dirichlet form is
//! E(f,g) = −∫ f Lg dμ.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::statespace::Model;

/// How asymmetric the conjugated generator may be before we refuse to
/// symmetrize it away (assembly already verified detailed balance at 1e-10;
/// conjugation can amplify that by μ_min^{-1/2}).
const SYMMETRY_TOL: f64 = 1e-8;

/// The eigenvalue closest to 0 must be 0 within this.
const ZERO_EIGENVALUE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("site index {0} out of range ({1} sites)")]
    UnknownSite(usize, usize),
    #[error("function has {got} entries, state space has {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("eigensolve did not converge")]
    SpectrumFailure,
    #[error("conjugated generator is not symmetric (worst asymmetry {0:.3e}); measure is not reversible for these kernels")]
    NotSymmetrizable(f64),
    #[error("generator spectrum has no eigenvalue at 0 (closest is {0:.3e})")]
    MissingZeroMode(f64),
}

/// Real-valued observable on Ω, stored densely in state-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    values: DVector<f64>,
}

impl Observable {
    pub fn new(values: DVector<f64>) -> Self {
        Self { values }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self { values: DVector::from_iterator(n, (0..n).map(f)) }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: DVector::from_element(n, c) }
    }

    /// Indicator of a state subset given as a membership mask.
    pub fn indicator(mask: &[bool]) -> Self {
        Self {
            values: DVector::from_iterator(
                mask.len(),
                mask.iter().map(|&b| if b { 1.0 } else { 0.0 }),
            ),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }
}

fn check_dims(model: &Model, f: &Observable) -> Result<(), OperatorError> {
    let want = model.num_states();
    if f.len() != want {
        return Err(OperatorError::DimensionMismatch { got: f.len(), want });
    }
    Ok(())
}

fn check_site(model: &Model, x: usize) -> Result<(), OperatorError> {
    if x >= model.num_sites() {
        return Err(OperatorError::UnknownSite(x, model.num_sites()));
    }
    Ok(())
}

/// Ψ_x f(η) = Σ_a μ_{x,η}(a) f(η_{x↦a}).
pub fn psi_x(model: &Model, x: usize, f: &Observable) -> Result<Observable, OperatorError> {
    check_site(model, x)?;
    check_dims(model, f)?;
    let space = model.space();
    let k = model.kernel(x);
    let mut out = DVector::zeros(f.len());
    for eta in 0..f.len() {
        let mut acc = 0.0;
        for a in 0..space.num_symbols() {
            acc += k[(eta, a)] * f.values()[space.with_digit(eta, x, a)];
        }
        out[eta] = acc;
    }
    Ok(Observable::new(out))
}

/// D_x f = Ψ_x f − f.
pub fn d_x(model: &Model, x: usize, f: &Observable) -> Result<Observable, OperatorError> {
    let psi = psi_x(model, x, f)?;
    Ok(Observable::new(psi.into_values() - f.values()))
}

/// Dense generator matrix L = Σ_x (Ψ_x − I).
pub fn generator_matrix(model: &Model) -> DMatrix<f64> {
    crate::statespace::generator_from_kernels(model.kernels(), model.space())
}

/// E(f,g) = −∫ f Lg dμ, evaluated without materializing L.
pub fn dirichlet_form(model: &Model, f: &Observable, g: &Observable) -> Result<f64, OperatorError> {
    check_dims(model, f)?;
    check_dims(model, g)?;
    let space = model.space();
    let mut acc = 0.0;
    for x in 0..model.num_sites() {
        let k = model.kernel(x);
        for eta in 0..space.num_states() {
            let mut lg = 0.0;
            for a in 0..space.num_symbols() {
                lg += k[(eta, a)] * (g.values()[space.with_digit(eta, x, a)] - g.values()[eta]);
            }
            acc += model.mu().weight(eta) * f.values()[eta] * lg;
        }
    }
    Ok(-acc)
}

/// Eigendecomposed generator: holds L, the orthonormal eigenbasis of
/// S = D^{1/2} L D^{-1/2}, and the shared spectrum, sorted ascending.
#[derive(Debug, Clone)]
pub struct Generator {
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    /// Columns are the orthonormal eigenvectors of S.
    basis: DMatrix<f64>,
    sqrt_mu: DVector<f64>,
    inv_sqrt_mu: DVector<f64>,
}

impl Generator {
    /// Build and diagonalize. Validates that row sums vanish, that the
    /// conjugated matrix is symmetric (reversibility), and that the spectrum
    /// contains 0.
    pub fn build(model: &Model) -> Result<Self, OperatorError> {
        let n = model.num_states();
        let matrix = generator_matrix(model);

        let mut worst_row = 0.0f64;
        for eta in 0..n {
            worst_row = worst_row.max(matrix.row(eta).sum().abs());
        }
        debug_assert!(worst_row <= 1e-10, "generator row sums off by {worst_row}");

        let sqrt_mu = DVector::from_iterator(n, (0..n).map(|i| model.mu().weight(i).sqrt()));
        let inv_sqrt_mu = DVector::from_iterator(n, (0..n).map(|i| 1.0 / sqrt_mu[i]));
        let mut s = matrix.clone();
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] *= sqrt_mu[i] * inv_sqrt_mu[j];
            }
        }
        let asym = (&s - s.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(OperatorError::NotSymmetrizable(asym));
        }
        let s = (&s + s.transpose()) * 0.5;

        let eig = s.symmetric_eigen();
        // Sort ascending, carrying the basis columns along.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut basis = DMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            basis.set_column(col, &eig.eigenvectors.column(i));
        }

        let closest = eigenvalues.iter().cloned().fold(f64::INFINITY, |b, l| {
            if l.abs() < b.abs() {
                l
            } else {
                b
            }
        });
        if closest.abs() > ZERO_EIGENVALUE_TOL {
            return Err(OperatorError::MissingZeroMode(closest));
        }

        Ok(Self { matrix, eigenvalues, basis, sqrt_mu, inv_sqrt_mu })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Spectrum of the symmetrized generator, ascending (all ≤ 0 up to
    /// roundoff; the top one is 0).
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenfunction for the `col`-th eigenvalue (ascending order), mapped
    /// back to original coordinates: h = D^{-1/2} v satisfies L h = λ h.
    pub fn eigenfunction(&self, col: usize) -> Observable {
        Observable::new(DVector::from_iterator(
            self.dim(),
            self.basis
                .column(col)
                .iter()
                .zip(self.inv_sqrt_mu.iter())
                .map(|(&v, &s)| v * s),
        ))
    }

    /// L f.
    pub fn apply(&self, f: &Observable) -> Observable {
        Observable::new(&self.matrix * f.values())
    }

    /// P_t f = D^{-1/2} U e^{Λt} Uᵀ D^{1/2} f.
    pub fn semigroup(&self, t: f64, f: &Observable) -> Result<Observable, OperatorError> {
        if t < 0.0 {
            return Err(OperatorError::NegativeTime(t));
        }
        if f.len() != self.dim() {
            return Err(OperatorError::DimensionMismatch { got: f.len(), want: self.dim() });
        }
        let weighted = DVector::from_iterator(
            self.dim(),
            f.values().iter().zip(self.sqrt_mu.iter()).map(|(&v, &s)| v * s),
        );
        let mut coeffs = self.basis.transpose() * weighted;
        for (c, &lambda) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= (lambda * t).exp();
        }
        let back = &self.basis * coeffs;
        Ok(Observable::new(DVector::from_iterator(
            self.dim(),
            back.iter().zip(self.inv_sqrt_mu.iter()).map(|(&v, &s)| v * s),
        )))
    }

    /// E(f,g) through the cached matrix.
    pub fn dirichlet(&self, mu: &crate::statespace::Measure, f: &Observable, g: &Observable) -> f64 {
        let lg = &self.matrix * g.values();
        -f.values()
            .iter()
            .zip(lg.iter())
            .zip(mu.weights().iter())
            .map(|((&fv, &lgv), &w)| fv * lgv * w)
            .sum::<f64>()
    }
}
