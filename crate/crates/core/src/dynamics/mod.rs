//! Linearized cavity–mirror dynamics beyond the rotating-wave and adiabatic
//! limits.

mod drift;
mod io;
mod oracle;
mod propagator;
mod steady;

pub use drift::{build_drift, DriftModel};
pub use io::{
    default_grid_points, io_relation, output_state, pulse_state, simpson, IOCoefficients, ModeRelation, OutputMode,
    SampledEnvelopes, MAX_COVARIANCE,
};
pub use oracle::{covariance_ode_oracle, output_covariance_ode, propagator_ode};
pub use propagator::{propagate, Propagator, CONDITION_LIMIT};
pub use steady::cw_steady_state;

/// Symmetric (cosine and sine) components of the Brownian force over a
/// pulse; each adds `ε(n̄ + ½)` to one mechanical quadrature.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BrownianForceComponents {
    pub epsilon: f64,
    pub n_bar: f64,
}

impl BrownianForceComponents {
    /// Variance of each component, n̄ + ½.
    pub fn component_variance(&self) -> f64 {
        self.n_bar + 0.5
    }

    pub fn added_quadrature_variance(&self) -> f64 {
        self.epsilon * self.component_variance()
    }

    /// Contribution to Δ_EPR, (2n̄ + 1)ε.
    pub fn epr_contribution(&self) -> f64 {
        (2.0 * self.n_bar + 1.0) * self.epsilon
    }
}
