use super::drift::{to_dyn, to_fixed, DriftModel};
use crate::error::{Error, Result};
use crate::linalg::lyapunov;
use crate::state::GaussianState;

/// Steady state of the continuously driven system (mechanics, intracavity
/// field), solving `Aσ + σAᵀ + N = 0`.
pub fn cw_steady_state(drift: &DriftModel) -> Result<GaussianState> {
    if let Some(z) = drift.eigenvalues().into_iter().find(|z| z.re >= 0.0) {
        return Err(Error::Unstable { re: z.re, im: z.im });
    }
    let sigma = lyapunov(&to_dyn(&drift.a), &to_dyn(&drift.n))?;
    GaussianState::from_cov(to_fixed(&sigma))
}
