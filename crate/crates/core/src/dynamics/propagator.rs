use nalgebra::{DMatrix, Matrix4};

use super::drift::{to_dyn, to_fixed, DriftModel};
use crate::linalg::{expm, Eigen};

/// Eigenvector condition number above which the eigendecomposition is
/// abandoned for the matrix exponential.
pub const CONDITION_LIMIT: f64 = 1e8;

/// `M(t) = e^{At}`, through the spectral decomposition of `A` when it is
/// well conditioned and through scaling and squaring otherwise.
#[derive(Debug, Clone)]
pub struct Propagator {
    a: DMatrix<f64>,
    eigen: Option<Eigen>,
}

impl Propagator {
    pub fn new(drift: &DriftModel) -> Self {
        Self::from_matrix(&drift.a)
    }

    pub fn from_matrix(a: &Matrix4<f64>) -> Self {
        let a = to_dyn(a);
        let eig = Eigen::new(&a);
        let eigen = if eig.condition.is_finite() && eig.condition <= CONDITION_LIMIT {
            Some(eig)
        } else {
            log::debug!(
                "eigenvector condition {:.3e} exceeds {CONDITION_LIMIT:.0e}; using matrix exponential",
                eig.condition
            );
            None
        };
        Propagator { a, eigen }
    }

    pub fn uses_eigenbasis(&self) -> bool {
        self.eigen.is_some()
    }

    pub fn evaluate(&self, t: f64) -> Matrix4<f64> {
        let m = match &self.eigen {
            Some(e) => e.exp(t),
            None => expm(&(&self.a * t)),
        };
        to_fixed(&m)
    }
}

pub fn propagate(drift: &DriftModel, t: f64) -> Matrix4<f64> {
    Propagator::new(drift).evaluate(t)
}
