//! Adaptive-integration reference solutions, independent of the matrix
//! exponential path.

use nalgebra::{Matrix4, SMatrix};

use super::drift::DriftModel;
use super::io::OutputMode;
use crate::error::Result;
use crate::ode::{Integrator, Tolerance};
use crate::state::GaussianState;

fn oracle_tolerance() -> Tolerance {
    Tolerance { rtol: 1e-11, atol: 1e-13 }
}

/// `M(t)` by integrating `Ṁ = A M`, `M(0) = I`.
pub fn propagator_ode(drift: &DriftModel, t: f64) -> Result<Matrix4<f64>> {
    let a = drift.a;
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        let m = Matrix4::from_column_slice(y);
        dy.copy_from_slice((a * m).as_slice());
    };
    let mut it = Integrator::new(rhs, 0.0, Matrix4::<f64>::identity().as_slice().to_vec(), oracle_tolerance());
    it.advance(t)?;
    Ok(Matrix4::from_column_slice(&it.y))
}

/// Intracavity covariance from `σ̇ = Aσ + σAᵀ + N`.
pub fn covariance_ode_oracle(drift: &DriftModel, state0: &GaussianState, t: f64) -> Result<GaussianState> {
    let (a, n) = (drift.a, drift.n);
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        let s = Matrix4::from_column_slice(y);
        dy.copy_from_slice((a * s + s * a.transpose() + n).as_slice());
    };
    let mut it = Integrator::new(rhs, 0.0, state0.cov.as_slice().to_vec(), Tolerance { rtol: 1e-10, atol: 1e-12 });
    it.advance(t)?;
    GaussianState::from_cov(Matrix4::from_column_slice(&it.y))
}

/// Output-mode covariance by integrating the mode quadratures directly,
/// `X_l = ∫ (Re α · x_out + Im α · p_out)`, `P_l = ∫ (Re α · p_out − Im α · x_out)`,
/// as time-dependent rows of a six-dimensional Lyapunov equation. Damping
/// and thermal noise enter whenever the drift includes them.
pub fn output_covariance_ode(drift: &DriftModel, mode: &OutputMode, n0: f64, tau: f64) -> Result<GaussianState> {
    type M6 = SMatrix<f64, 6, 6>;
    type M62 = SMatrix<f64, 6, 2>;
    let sq = (2.0 * drift.kappa).sqrt();
    let (a4, n4) = (drift.a, drift.n);
    let mode = *mode;
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| {
        let s = M6::from_column_slice(y);
        let f = mode.value(t, tau);
        let (fr, fi) = (f.re, f.im);
        let mut a = M6::zeros();
        a.fixed_view_mut::<4, 4>(0, 0).copy_from(&a4);
        a[(4, 2)] = fr * sq;
        a[(4, 3)] = fi * sq;
        a[(5, 3)] = fr * sq;
        a[(5, 2)] = -fi * sq;
        let mut b = M62::zeros();
        b[(2, 0)] = -sq;
        b[(3, 1)] = -sq;
        b[(4, 0)] = fr;
        b[(4, 1)] = fi;
        b[(5, 0)] = -fi;
        b[(5, 1)] = fr;
        let mut d = b * b.transpose() * 0.5;
        d[(1, 1)] += n4[(1, 1)];
        dy.copy_from_slice((a * s + s * a.transpose() + d).as_slice());
    };
    let mut s0 = M6::zeros();
    s0.fixed_view_mut::<4, 4>(0, 0).copy_from(&GaussianState::thermal_product(n0, 0.0).cov);
    let mut it = Integrator::new(rhs, 0.0, s0.as_slice().to_vec(), oracle_tolerance());
    it.advance(tau)?;
    let s = M6::from_column_slice(&it.y);
    let idx = [0usize, 1, 4, 5];
    let c = Matrix4::from_fn(|i, j| s[(idx[i], idx[j])]);
    let (sn, cs) = (drift.omega_m * tau).sin_cos();
    let mut r = Matrix4::identity();
    r[(0, 0)] = cs;
    r[(0, 1)] = -sn;
    r[(1, 0)] = sn;
    r[(1, 1)] = cs;
    GaussianState::from_cov(r * c * r.transpose())
}
