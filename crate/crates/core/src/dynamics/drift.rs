use nalgebra::{DMatrix, Matrix4};
use serde::{Deserialize, Serialize};

use crate::params::PhysicalParams;

/// Linear Langevin system `ṙ = A r + noise` over (x_m, p_m, x_c, p_c) with
/// symmetrized diffusion `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    pub a: Matrix4<f64>,
    pub n: Matrix4<f64>,
    pub gamma_included: bool,
    pub omega_m: f64,
    pub kappa: f64,
    pub g: f64,
    pub detuning: f64,
    pub gamma: f64,
    pub n_bar: f64,
}

/// Drift and diffusion for the linearized cavity–mirror system. With
/// `include_gamma` the mechanical damping and the thermal force on p_m are
/// kept; otherwise only the optical vacuum channel remains.
pub fn build_drift(p: &PhysicalParams, include_gamma: bool) -> DriftModel {
    let (w, k, g, d) = (p.omega_m, p.kappa, p.g, p.detuning);
    let gamma = if include_gamma { p.gamma } else { 0.0 };
    #[rustfmt::skip]
    let a = Matrix4::new(
        0.0,      w,      0.0,      0.0,
        -w,       -gamma, -2.0 * g, 0.0,
        0.0,      0.0,    -k,       d,
        -2.0 * g, 0.0,    -d,       -k,
    );
    let mut n = Matrix4::zeros();
    n[(1, 1)] = gamma * (2.0 * p.n_bar + 1.0);
    n[(2, 2)] = k;
    n[(3, 3)] = k;
    DriftModel {
        a,
        n,
        gamma_included: include_gamma,
        omega_m: w,
        kappa: k,
        g,
        detuning: d,
        gamma: p.gamma,
        n_bar: p.n_bar,
    }
}

impl DriftModel {
    pub fn eigenvalues(&self) -> Vec<crate::linalg::C64> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }

    /// Largest real part of the spectrum of `A`.
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn to_dyn(m: &Matrix4<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(4, 4, m.as_slice())
}

pub(crate) fn to_fixed(m: &DMatrix<f64>) -> Matrix4<f64> {
    Matrix4::from_column_slice(m.as_slice())
}
