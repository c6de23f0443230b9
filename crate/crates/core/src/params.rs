//! Physical and dimensionless parameter sets, the coupling/photon-number
//! relation, thermal occupations and the parameter-hierarchy diagnostics.
//!
//! All frequencies and rates are angular (rad/s). Conversion from the Hz
//! values used in configuration files happens at the boundary via
//! [`hz`].

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Angular frequency for a frequency given in Hz.
pub fn hz(f: f64) -> f64 {
    2.0 * PI * f
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub omega_m: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub g0: f64,
    pub g: f64,
    /// Laser detuning Δ = ω_c − ω_l.
    pub detuning: f64,
    pub tau: f64,
    pub n_bar: f64,
    pub n0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_l: Option<f64>,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_m", self.omega_m),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("g0", self.g0),
            ("g", self.g),
            ("tau", self.tau),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !self.detuning.is_finite() {
            return Err(domain("detuning must be finite"));
        }
        for (name, v) in [("n_bar", self.n_bar), ("n0", self.n0)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if let Some(l) = self.lambda_l {
            if !(l.is_finite() && l > 0.0) {
                return Err(domain("lambda_l must be > 0"));
            }
        }
        if self.quality_factor() <= 1.0 {
            return Err(domain(format!("Q = omega_m/gamma must exceed 1, got {}", self.quality_factor())));
        }
        Ok(())
    }

    pub fn quality_factor(&self) -> f64 {
        self.omega_m / self.gamma
    }

    /// G = g²/κ.
    pub fn g_rate(&self) -> f64 {
        self.g * self.g / self.kappa
    }

    pub fn squeezing(&self) -> f64 {
        self.g_rate() * self.tau
    }

    pub fn to_dimensionless(&self) -> DimensionlessParams {
        DimensionlessParams {
            eta: self.kappa / self.omega_m,
            xi: self.g / self.kappa,
            epsilon: self.gamma * self.tau,
            n_bar: self.n_bar,
            n0: self.n0,
            q: self.quality_factor(),
        }
    }

    /// Same system expressed in units where ω_m = 1.
    pub fn scaled(&self) -> PhysicalParams {
        let w = self.omega_m;
        PhysicalParams {
            omega_m: 1.0,
            kappa: self.kappa / w,
            gamma: self.gamma / w,
            g0: self.g0 / w,
            g: self.g / w,
            detuning: self.detuning / w,
            tau: self.tau * w,
            ..*self
        }
    }

    pub fn photon_number(&self) -> Result<f64> {
        photons_for_coupling(self.g, self.g0, self.kappa, self.detuning, self.tau)
    }
}

/// The optimization coordinates plus the fixed environment (n̄, n₀, Q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    /// κ/ω_m, sideband resolution.
    pub eta: f64,
    /// g/κ, adiabaticity.
    pub xi: f64,
    /// γτ, pulse length over mechanical damping time.
    pub epsilon: f64,
    pub n_bar: f64,
    pub n0: f64,
    pub q: f64,
}

impl DimensionlessParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta", self.eta), ("xi", self.xi), ("epsilon", self.epsilon)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.q.is_finite() && self.q > 1.0) {
            return Err(domain(format!("Q must exceed 1, got {}", self.q)));
        }
        if !(self.n_bar >= 0.0 && self.n0 >= 0.0) {
            return Err(domain("occupations must be >= 0"));
        }
        Ok(())
    }

    /// Squeezing parameter r = Gτ = ξ² η ε Q.
    pub fn squeezing(&self) -> f64 {
        self.xi * self.xi * self.eta * self.epsilon * self.q
    }

    /// Pulse length in units of 1/ω_m.
    pub fn omega_tau(&self) -> f64 {
        self.epsilon * self.q
    }

    /// Dimensional parameters for a given mechanical frequency, single-photon
    /// coupling and detuning.
    pub fn to_physical(&self, omega_m: f64, g0: f64, detuning: f64, lambda_l: Option<f64>) -> PhysicalParams {
        let kappa = self.eta * omega_m;
        let gamma = omega_m / self.q;
        PhysicalParams {
            omega_m,
            kappa,
            gamma,
            g0,
            g: self.xi * kappa,
            detuning,
            tau: self.epsilon / gamma,
            n_bar: self.n_bar,
            n0: self.n0,
            lambda_l,
        }
    }

    /// Scaled physical parameters (ω_m = 1) at blue detuning Δ = −ω_m.
    pub fn scaled_blue(&self) -> PhysicalParams {
        self.to_physical(1.0, 1.0, -1.0, None)
    }
}

/// Coupling for a pulse of `n_ph` photons: g = g₀ √(2κ/(Δ²+κ²) · N/τ).
pub fn effective_coupling(g0: f64, kappa: f64, detuning: f64, n_ph: f64, tau: f64) -> Result<f64> {
    for (name, v) in [("g0", g0), ("kappa", kappa), ("n_ph", n_ph), ("tau", tau)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(domain(format!("{name} must be > 0, got {v}")));
        }
    }
    if !detuning.is_finite() {
        return Err(domain("detuning must be finite"));
    }
    Ok(g0 * (2.0 * kappa / (detuning * detuning + kappa * kappa) * n_ph / tau).sqrt())
}

/// Photon number needed for coupling `g`; inverse of [`effective_coupling`].
pub fn photons_for_coupling(g: f64, g0: f64, kappa: f64, detuning: f64, tau: f64) -> Result<f64> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(domain(format!("g must be >= 0, got {g}")));
    }
    for (name, v) in [("g0", g0), ("kappa", kappa), ("tau", tau)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(domain(format!("{name} must be > 0, got {v}")));
        }
    }
    if !detuning.is_finite() {
        return Err(domain("detuning must be finite"));
    }
    let ratio = g / g0;
    Ok(ratio * ratio * tau * (detuning * detuning + kappa * kappa) / (2.0 * kappa))
}

/// Mean optical power P = ħ ω_l N/τ; absent without a wavelength.
pub fn mean_power(n_ph: f64, tau: f64, lambda_l: Option<f64>) -> Option<f64> {
    lambda_l.map(|l| HBAR * 2.0 * PI * SPEED_OF_LIGHT / l * n_ph / tau)
}

/// Bose–Einstein occupation 1/(e^{ħω/k_BT} − 1).
pub fn occupation_from_temperature(omega_m: f64, temperature: f64) -> Result<f64> {
    if !(omega_m.is_finite() && omega_m > 0.0) {
        return Err(domain("omega_m must be > 0"));
    }
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(domain("temperature must be >= 0"));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega_m / (K_B * temperature);
    Ok(1.0 / x.exp_m1())
}

/// High-temperature limit k_BT/(ħω).
pub fn occupation_high_temperature(omega_m: f64, temperature: f64) -> f64 {
    K_B * temperature / (HBAR * omega_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Pass,
    Warn,
    Fail,
}

impl Flag {
    /// Warn above `warn`, fail above `fail`.
    pub fn from_ratio(value: f64, warn: f64, fail: f64) -> Flag {
        if value.is_nan() || value > fail {
            Flag::Fail
        } else if value > warn {
            Flag::Warn
        } else {
            Flag::Pass
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub name: String,
    pub value: f64,
    pub flag: Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub checks: Vec<RatioCheck>,
}

impl HierarchyReport {
    pub fn worst(&self) -> Flag {
        self.checks.iter().map(|c| c.flag).max().unwrap_or(Flag::Pass)
    }

    pub fn get(&self, name: &str) -> Option<&RatioCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const HIERARCHY_WARN: f64 = 0.5;
pub const HIERARCHY_FAIL: f64 = 1.0;

/// Ratios of the chain n̄γ ≪ 1/τ ≪ g ≪ κ ≪ ω_m.
pub fn validate_hierarchy(p: &PhysicalParams) -> HierarchyReport {
    let ratios = [
        ("n_bar_gamma_tau", p.n_bar * p.gamma * p.tau),
        ("inv_g_tau", 1.0 / (p.g * p.tau)),
        ("g_over_kappa", p.g / p.kappa),
        ("kappa_over_omega_m", p.kappa / p.omega_m),
    ];
    HierarchyReport {
        checks: ratios
            .iter()
            .map(|&(name, value)| RatioCheck {
                name: name.to_string(),
                value,
                flag: Flag::from_ratio(value, HIERARCHY_WARN, HIERARCHY_FAIL),
            })
            .collect(),
    }
}

/// How rates are turned into dimensional pulse lengths and photon numbers
/// when reporting an operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyConvention {
    /// Rates in rad/s: τ = εQ/ω_m. Consistent with the dynamics.
    #[default]
    Angular,
    /// Rates taken numerically equal to the cyclic frequencies (Hz):
    /// τ = εQ/f_m, and the photon number evaluated with g, g₀, κ, Δ in Hz.
    /// This is the convention behind the published operating-point table.
    Cyclic,
}

/// Dimensional operating point derived from an optimum (ε, η, ξ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub convention: FrequencyConvention,
    /// κ/2π in Hz.
    pub kappa_hz: f64,
    /// g/2π in Hz.
    pub g_hz: f64,
    /// Pulse length (s).
    pub tau: f64,
    pub n_ph: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
}

impl OperatingPoint {
    /// `omega_m` and `g0` are angular; Δ = −ω_m is assumed for the photon
    /// number.
    pub fn derive(
        d: &DimensionlessParams,
        omega_m: f64,
        g0: f64,
        lambda_l: Option<f64>,
        convention: FrequencyConvention,
    ) -> Result<Self> {
        d.validate()?;
        let unit = match convention {
            FrequencyConvention::Angular => 1.0,
            FrequencyConvention::Cyclic => 1.0 / (2.0 * PI),
        };
        let w = omega_m * unit;
        let kappa = d.eta * w;
        let g = d.xi * kappa;
        let tau = d.epsilon * d.q / w;
        let n_ph = photons_for_coupling(g, g0 * unit, kappa, -w, tau)?;
        Ok(OperatingPoint {
            convention,
            kappa_hz: d.eta * omega_m / (2.0 * PI),
            g_hz: d.xi * d.eta * omega_m / (2.0 * PI),
            tau,
            n_ph,
            power: mean_power(n_ph, tau, lambda_l),
        })
    }
}
