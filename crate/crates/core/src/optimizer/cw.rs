//! Continuous-drive comparison: logarithmic negativity of the steady state
//! over detuning and coupling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_drift, cw_steady_state};
use crate::error::{domain, Result};
use crate::metrics::log_negativity;
use crate::params::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CwPoint {
    /// Detuning in units of ω_m.
    pub detuning: f64,
    /// Coupling in units of ω_m.
    pub g: f64,
    pub log_negativity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwScan {
    pub best: CwPoint,
    pub stable_points: usize,
    pub total_points: usize,
}

/// Scans the stable region of the (Δ, g) grid for the largest steady-state
/// negativity. Rates are in units of ω_m; `q` sets γ = 1/Q.
pub fn cw_scan(kappa: f64, q: f64, n_bar: f64, detunings: &[f64], couplings: &[f64]) -> Result<CwScan> {
    if !(kappa > 0.0 && q > 1.0 && n_bar >= 0.0) {
        return Err(domain("cw_scan needs kappa > 0, Q > 1, n_bar >= 0"));
    }
    let pairs: Vec<(f64, f64)> = detunings.iter().flat_map(|&d| couplings.iter().map(move |&g| (d, g))).collect();
    let points: Vec<Option<CwPoint>> = pairs
        .par_iter()
        .map(|&(d, g)| {
            let p = PhysicalParams {
                omega_m: 1.0,
                kappa,
                gamma: 1.0 / q,
                g0: 1.0,
                g,
                detuning: d,
                tau: 1.0,
                n_bar,
                n0: n_bar,
                lambda_l: None,
            };
            let st = cw_steady_state(&build_drift(&p, true)).ok()?;
            let e = log_negativity(&st).ok()?;
            Some(CwPoint { detuning: d, g, log_negativity: e })
        })
        .collect();
    let stable: Vec<CwPoint> = points.into_iter().flatten().collect();
    let best = stable
        .iter()
        .copied()
        .fold(None, |acc: Option<CwPoint>, p| match acc {
            Some(b) if b.log_negativity >= p.log_negativity => Some(b),
            _ => Some(p),
        })
        .ok_or_else(|| domain("no stable point in the scanned grid"))?;
    Ok(CwScan { best, stable_points: stable.len(), total_points: pairs.len() })
}
