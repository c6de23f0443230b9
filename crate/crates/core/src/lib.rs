//! Pulsed optomechanical EPR entanglement.
//!
//! A blue-detuned drive pulse entangles a mechanical oscillator with the
//! reflected light; a red-detuned pulse reads the mirror out. This crate
//! evaluates the closed-form protocol, the full linearized dynamics with
//! thermal noise, and searches the operating point `(ε, η, ξ)` that
//! minimizes the EPR variance.
//!
//! ```
//! use pulsed_epr::ideal::{epr_variance_ideal, squeezing_threshold};
//!
//! let r0 = squeezing_threshold(50.0);
//! assert!((epr_variance_ideal(r0, 50.0).unwrap() - 2.0).abs() < 1e-9);
//! ```

pub mod amplitudes;
pub mod dynamics;
pub mod error;
pub mod ideal;
pub mod linalg;
pub mod metrics;
pub mod ode;
pub mod optimizer;
pub mod params;
pub mod state;
pub mod table;

pub use dynamics::{build_drift, io_relation, output_state, DriftModel, IOCoefficients, OutputMode};
pub use error::{Error, Result};
pub use metrics::{epr_variance, log_negativity, teleport_fidelity, EntanglementReport};
pub use params::{DimensionlessParams, FrequencyConvention, OperatingPoint, PhysicalParams};
pub use state::GaussianState;
