//! Bipartite Gaussian states in the quadrature ordering
//! (X_m, P_m, X_l, P_l) with vacuum variance 1/2.

use nalgebra::{Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Admissibility tolerance on symplectic eigenvalues.
pub const UNCERTAINTY_TOL: f64 = 1e-9;

/// Block-diagonal symplectic form diag(J, J), J = [[0, 1], [−1, 0]].
pub fn symplectic_form() -> Matrix4<f64> {
    let mut o = Matrix4::zeros();
    o[(0, 1)] = 1.0;
    o[(1, 0)] = -1.0;
    o[(2, 3)] = 1.0;
    o[(3, 2)] = -1.0;
    o
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
}

impl GaussianState {
    /// Rejects covariances that are not symmetric to 1e-9 relative.
    pub fn new(mean: Vector4<f64>, cov: Matrix4<f64>) -> Result<Self> {
        let scale = cov.amax().max(1.0);
        let asym = (cov - cov.transpose()).amax();
        if !cov.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidState("non-finite covariance entry".into()));
        }
        if asym > 1e-9 * scale {
            return Err(Error::InvalidState(format!("covariance not symmetric (max asymmetry {asym:.3e})")));
        }
        Ok(GaussianState { mean, cov: (cov + cov.transpose()) * 0.5 })
    }

    pub fn from_cov(cov: Matrix4<f64>) -> Result<Self> {
        Self::new(Vector4::zeros(), cov)
    }

    /// Uncorrelated thermal states with occupations `n_m` (mechanics) and
    /// `n_l` (light).
    pub fn thermal_product(n_m: f64, n_l: f64) -> Self {
        let cov = Matrix4::from_diagonal(&Vector4::new(n_m + 0.5, n_m + 0.5, n_l + 0.5, n_l + 0.5));
        GaussianState { mean: Vector4::zeros(), cov }
    }

    pub fn vacuum() -> Self {
        Self::thermal_product(0.0, 0.0)
    }

    pub fn mech_block(&self) -> Matrix2<f64> {
        self.cov.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn light_block(&self) -> Matrix2<f64> {
        self.cov.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn cross_block(&self) -> Matrix2<f64> {
        self.cov.fixed_view::<2, 2>(0, 2).into_owned()
    }

    /// Symplectic eigenvalues (ν₋, ν₊).
    pub fn symplectic_eigenvalues(&self) -> [f64; 2] {
        symplectic_spectrum(&self.cov)
    }

    /// Symplectic eigenvalues of the partial transpose (P_l → −P_l).
    pub fn partial_transpose_eigenvalues(&self) -> [f64; 2] {
        let flip = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 1.0, -1.0));
        symplectic_spectrum(&(flip * self.cov * flip))
    }

    /// Checks σ > 0 and ν₋ ≥ 1/2 − `tol`.
    pub fn check_physical(&self, tol: f64) -> Result<()> {
        if self.cov.cholesky().is_none() {
            return Err(Error::InvalidState("covariance is not positive definite".into()));
        }
        let nu = self.symplectic_eigenvalues()[0];
        if nu < 0.5 - tol {
            return Err(Error::InvalidState(format!(
                "uncertainty relation violated: smallest symplectic eigenvalue {nu:.12} < 1/2"
            )));
        }
        Ok(())
    }

    /// Image under a linear quadrature map `S`: σ → SσSᵀ, x → Sx.
    pub fn transform(&self, s: &Matrix4<f64>) -> GaussianState {
        GaussianState { mean: s * self.mean, cov: s * self.cov * s.transpose() }
    }

    /// Adds variance `v` to both mechanical quadratures.
    pub fn add_mechanical_noise(&mut self, v: f64) {
        self.cov[(0, 0)] += v;
        self.cov[(1, 1)] += v;
    }
}

/// Symplectic spectrum as the singular values of the antisymmetric matrix
/// `K = σ^{1/2} Ω σ^{1/2}` (eigenvalues ±iν).
fn symplectic_spectrum(cov: &Matrix4<f64>) -> [f64; 2] {
    let eig = cov.symmetric_eigen();
    let root = eig.eigenvectors
        * Matrix4::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()))
        * eig.eigenvectors.transpose();
    let k = root * symplectic_form() * root;
    let mut nu: Vec<f64> = k.singular_values().iter().copied().collect();
    nu.sort_by(|a, b| a.total_cmp(b));
    // singular values come in pairs
    [0.5 * (nu[0] + nu[1]), 0.5 * (nu[2] + nu[3])]
}
