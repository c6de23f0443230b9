//! Figures of merit of a bipartite Gaussian state: EPR variance, logarithmic
//! negativity and coherent-state teleportation fidelity.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ideal::coherent_fidelity;
use crate::state::{GaussianState, UNCERTAINTY_TOL};

/// Var(X_m + P_l) + Var(P_m + X_l).
pub fn epr_variance(state: &GaussianState) -> f64 {
    let c = &state.cov;
    c[(0, 0)] + c[(3, 3)] + 2.0 * c[(0, 3)] + c[(1, 1)] + c[(2, 2)] + 2.0 * c[(1, 2)]
}

/// E_N = max(0, −ln 2ν̃₋) with ν̃₋ the smallest symplectic eigenvalue of
/// the partial transpose.
pub fn log_negativity(state: &GaussianState) -> Result<f64> {
    log_negativity_with_tolerance(state, UNCERTAINTY_TOL)
}

/// As [`log_negativity`] with an admissibility tolerance, loosened for
/// thermally augmented states.
pub fn log_negativity_with_tolerance(state: &GaussianState, tol: f64) -> Result<f64> {
    state.check_physical(tol)?;
    let nu = state.partial_transpose_eigenvalues()[0];
    Ok((-(2.0 * nu).ln()).max(0.0))
}

pub fn teleport_fidelity(state: &GaussianState) -> Result<f64> {
    coherent_fidelity(epr_variance(state))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub delta_epr: f64,
    pub log_negativity: f64,
    pub fidelity: f64,
    pub entangled: bool,
    /// Smallest symplectic eigenvalue of the state and of its partial
    /// transpose.
    pub symplectic_eigs: [f64; 2],
}

impl EntanglementReport {
    pub fn new(state: &GaussianState) -> Result<Self> {
        Self::with_tolerance(state, UNCERTAINTY_TOL)
    }

    pub fn with_tolerance(state: &GaussianState, tol: f64) -> Result<Self> {
        let delta_epr = epr_variance(state);
        Ok(EntanglementReport {
            delta_epr,
            log_negativity: log_negativity_with_tolerance(state, tol)?,
            fidelity: coherent_fidelity(delta_epr)?,
            entangled: delta_epr < 2.0,
            symplectic_eigs: [state.symplectic_eigenvalues()[0], state.partial_transpose_eigenvalues()[0]],
        })
    }
}
