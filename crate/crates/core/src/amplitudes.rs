//! Classical intracavity and mechanical amplitudes under a pulsed drive,
//! their adiabatic approximation, and the checks that justify a constant
//! effective coupling in the linearized model.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::linalg::C64;
use crate::ode::{Integrator, Tolerance};
use crate::params::{Flag, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeShape {
    /// Flat top with sin² ramps.
    RaisedCosine,
    /// Rectangular pulse.
    Step,
}

/// Normalized drive envelope ε(t) on `[0, τ]`, `∫|ε|² dt = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub tau: f64,
    pub shape: EnvelopeShape,
    /// Fraction of τ taken by each ramp.
    pub ramp_fraction: f64,
    pub grid: Vec<f64>,
    pub values: Vec<C64>,
}

impl PulseEnvelope {
    /// Flat top with raised-cosine ramps of `ramp_fraction · τ` on each
    /// side, sampled at `points` uniform times.
    pub fn flat_top(tau: f64, ramp_fraction: f64, points: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(domain(format!("pulse length must be > 0, got {tau}")));
        }
        if !(ramp_fraction > 0.0 && ramp_fraction <= 0.5) {
            return Err(domain(format!("ramp fraction must lie in (0, 0.5], got {ramp_fraction}")));
        }
        Ok(Self::sampled(tau, EnvelopeShape::RaisedCosine, ramp_fraction, points))
    }

    pub fn step(tau: f64, points: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(domain(format!("pulse length must be > 0, got {tau}")));
        }
        Ok(Self::sampled(tau, EnvelopeShape::Step, 0.0, points))
    }

    fn sampled(tau: f64, shape: EnvelopeShape, ramp_fraction: f64, points: usize) -> Self {
        let points = points.max(3);
        let mut env = PulseEnvelope { tau, shape, ramp_fraction, grid: Vec::new(), values: Vec::new() };
        env.grid = (0..points).map(|k| tau * k as f64 / (points - 1) as f64).collect();
        env.values = env.grid.iter().map(|&t| C64::new(env.value(t), 0.0)).collect();
        env
    }

    pub fn ramp_time(&self) -> f64 {
        self.ramp_fraction * self.tau
    }

    /// Plateau amplitude 1/√(τ − 5t_r/4).
    pub fn plateau(&self) -> f64 {
        match self.shape {
            EnvelopeShape::Step => 1.0 / self.tau.sqrt(),
            EnvelopeShape::RaisedCosine => 1.0 / (self.tau - 1.25 * self.ramp_time()).sqrt(),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        if !(0.0..=self.tau).contains(&t) {
            return 0.0;
        }
        let a = self.plateau();
        match self.shape {
            EnvelopeShape::Step => a,
            EnvelopeShape::RaisedCosine => {
                let tr = self.ramp_time();
                let edge = t.min(self.tau - t);
                if edge >= tr {
                    a
                } else {
                    a * (0.5 * PI * edge / tr).sin().powi(2)
                }
            }
        }
    }

    /// dε/dt; unbounded at the edges of a step.
    pub fn derivative(&self, t: f64) -> f64 {
        match self.shape {
            EnvelopeShape::Step => 0.0,
            EnvelopeShape::RaisedCosine => {
                let tr = self.ramp_time();
                let a = self.plateau();
                let slope = |s: f64| a * 0.5 * PI / tr * (PI * s / tr).sin();
                if t < tr {
                    slope(t)
                } else if t > self.tau - tr {
                    -slope(self.tau - t)
                } else {
                    0.0
                }
            }
        }
    }

    /// Whether `t` lies on the flat part.
    pub fn on_plateau(&self, t: f64) -> bool {
        let tr = self.ramp_time();
        t >= tr && t <= self.tau - tr
    }

    /// `∫|ε|²` by the composite trapezoid rule on the sample grid.
    pub fn sampled_norm(&self) -> f64 {
        let mut s = 0.0;
        for k in 1..self.grid.len() {
            let h = self.grid[k] - self.grid[k - 1];
            s += 0.5 * h * (self.values[k].norm_sqr() + self.values[k - 1].norm_sqr());
        }
        s
    }

    /// `sup|ε̇| / (κ ε_plateau)`, infinite for a step.
    pub fn delta_bound(&self, kappa: f64) -> f64 {
        match self.shape {
            EnvelopeShape::Step => f64::INFINITY,
            EnvelopeShape::RaisedCosine => PI / (2.0 * self.ramp_time() * kappa),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSolution {
    pub times: Vec<f64>,
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
    pub delta_eff: Vec<f64>,
    pub delta_bound: f64,
}

impl AmplitudeSolution {
    /// Smallest |α| on the plateau.
    pub fn min_plateau_alpha(&self, env: &PulseEnvelope) -> f64 {
        self.times
            .iter()
            .zip(&self.alpha)
            .filter(|(t, _)| env.on_plateau(**t))
            .map(|(_, a)| a.norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// How the detuning in the cavity equation is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DetuningMode {
    /// The laser tracks the shifted cavity: the cavity equation sees the
    /// constant effective detuning Δ.
    #[default]
    Locked,
    /// Fixed bare detuning Δ₀ = Δ + 2g₀²|α_plateau|²/ω_m, so that the
    /// effective detuning reaches Δ on the plateau.
    Free,
}

fn drive_scale(p: &PhysicalParams) -> Result<f64> {
    let n_ph = p.photon_number()?;
    Ok((2.0 * p.kappa * n_ph).sqrt())
}

fn bare_detuning(p: &PhysicalParams, env: &PulseEnvelope, e0: f64, mode: DetuningMode) -> f64 {
    match mode {
        DetuningMode::Locked => p.detuning,
        DetuningMode::Free => {
            let a2 = (e0 * env.plateau()).powi(2) / (p.detuning * p.detuning + p.kappa * p.kappa);
            p.detuning + 2.0 * p.g0 * p.g0 * a2 / p.omega_m
        }
    }
}

/// Integrates
/// `α̇ = −[i(Δ₀ + g₀(β + β*)) + κ] α + E(t)`, `β̇ = iω_m β + i g₀ |α|²`
/// from `α(0) = β(0) = 0` with `E = √(2κN_ph) ε(t)`, sampled on the
/// envelope grid.
pub fn solve_amplitudes(p: &PhysicalParams, env: &PulseEnvelope, mode: DetuningMode) -> Result<AmplitudeSolution> {
    p.validate()?;
    // integrate in units of 1/ω_m
    let w = p.omega_m;
    let e0 = drive_scale(p)?;
    let d0 = bare_detuning(p, env, e0, mode) / w;
    let (k, g0, delta) = (p.kappa / w, p.g0 / w, p.detuning / w);
    let drive = e0 / w.sqrt();
    let env_scaled = env.clone();
    let scaled_env = move |s: f64| drive * env_scaled.value(s / w) / w.sqrt();
    let locked = mode == DetuningMode::Locked;
    let rhs = move |s: f64, y: &[f64], dy: &mut [f64]| {
        let a = C64::new(y[0], y[1]);
        let b = C64::new(y[2], y[3]);
        let det = if locked { delta } else { d0 + 2.0 * g0 * b.re };
        let da = -(C64::new(k, det)) * a + scaled_env(s);
        let db = C64::new(0.0, 1.0) * b + C64::new(0.0, g0 * a.norm_sqr());
        dy[0] = da.re;
        dy[1] = da.im;
        dy[2] = db.re;
        dy[3] = db.im;
    };
    let mut it = Integrator::new(rhs, 0.0, vec![0.0; 4], Tolerance { rtol: 1e-10, atol: 1e-12 });
    let mut alpha = Vec::with_capacity(env.grid.len());
    let mut beta = Vec::with_capacity(env.grid.len());
    let mut delta_eff = Vec::with_capacity(env.grid.len());
    for &t in &env.grid {
        it.advance(t * w).map_err(|e| match e {
            Error::Integration { t, reason } => Error::Integration { t: t / w, reason },
            other => other,
        })?;
        let a = C64::new(it.y[0], it.y[1]);
        let b = C64::new(it.y[2], it.y[3]);
        alpha.push(a);
        beta.push(b);
        delta_eff.push(if locked { p.detuning } else { (d0 + 2.0 * g0 * b.re) * w });
    }
    Ok(AmplitudeSolution { times: env.grid.clone(), alpha, beta, delta_eff, delta_bound: env.delta_bound(p.kappa) })
}

/// `α = E/(iΔ + κ)`, `β = −(g₀/ω_m)|α|²`, `Δ_eff = Δ₀ − 2g₀²|α|²/ω_m`.
pub fn adiabatic_amplitudes(p: &PhysicalParams, env: &PulseEnvelope, mode: DetuningMode) -> Result<AmplitudeSolution> {
    p.validate()?;
    let e0 = drive_scale(p)?;
    let d0 = bare_detuning(p, env, e0, mode);
    let den = C64::new(p.kappa, p.detuning);
    let mut alpha = Vec::with_capacity(env.grid.len());
    let mut beta = Vec::with_capacity(env.grid.len());
    let mut delta_eff = Vec::with_capacity(env.grid.len());
    for &t in &env.grid {
        let a = C64::new(e0 * env.value(t), 0.0) / den;
        let a2 = a.norm_sqr();
        alpha.push(a);
        beta.push(C64::new(-p.g0 / p.omega_m * a2, 0.0));
        delta_eff.push(d0 - 2.0 * p.g0 * p.g0 * a2 / p.omega_m);
    }
    Ok(AmplitudeSolution { times: env.grid.clone(), alpha, beta, delta_eff, delta_bound: env.delta_bound(p.kappa) })
}

pub const ENVELOPE_WARN: f64 = 0.1;
pub const ENVELOPE_FAIL: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub value: f64,
    pub flag: Flag,
}

impl Diagnostic {
    fn new(value: f64) -> Self {
        Diagnostic { value, flag: Flag::from_ratio(value, ENVELOPE_WARN, ENVELOPE_FAIL) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    /// Slope bound on the deviation from the adiabatic amplitude.
    pub delta_bound: Diagnostic,
    /// `max|d|α|²/dt| / (ω_m max|α|²)` for the adiabatic amplitude.
    pub slow_variation: Diagnostic,
    /// `1/(κτ)`.
    pub inverse_kappa_tau: Diagnostic,
    /// Adiabatic plateau |α|; the linearization needs |α| ≫ 1.
    pub plateau_alpha: f64,
}

impl EnvelopeReport {
    pub fn worst(&self) -> Flag {
        [self.delta_bound.flag, self.slow_variation.flag, self.inverse_kappa_tau.flag]
            .into_iter()
            .max()
            .unwrap_or(Flag::Pass)
    }
}

pub fn validate_envelope(p: &PhysicalParams, env: &PulseEnvelope) -> Result<EnvelopeReport> {
    p.validate()?;
    let e0 = drive_scale(p)?;
    // |α|² ∝ ε², so d|α|²/dt / max|α|² = 2εε̇ / ε_plateau²
    let slope = match env.shape {
        EnvelopeShape::Step => f64::INFINITY,
        EnvelopeShape::RaisedCosine => {
            let n = 2001;
            let tr = env.ramp_time();
            (0..n)
                .map(|k| tr * k as f64 / (n - 1) as f64)
                .map(|t| (2.0 * env.value(t) * env.derivative(t)).abs())
                .fold(0.0, f64::max)
                / env.plateau().powi(2)
        }
    };
    let den = (p.detuning * p.detuning + p.kappa * p.kappa).sqrt();
    Ok(EnvelopeReport {
        delta_bound: Diagnostic::new(env.delta_bound(p.kappa)),
        slow_variation: Diagnostic::new(slope / p.omega_m),
        inverse_kappa_tau: Diagnostic::new(1.0 / (p.kappa * env.tau)),
        plateau_alpha: e0 * env.plateau() / den,
    })
}
