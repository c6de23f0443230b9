//! Closed-form protocol in the rotating-wave and adiabatic limits: the
//! two-mode-squeezing map of the blue pulse, the beam-splitter map of the
//! red readout pulse, the EPR variance and teleportation relations.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::state::GaussianState;

/// `e^r − √(e^{2r} − 1)` evaluated as `e^{−r} / (1 + √(1 − e^{−2r}))`.
fn contraction(r: f64) -> f64 {
    let x = (-r).exp();
    x / (1.0 + (-(-2.0 * r).exp_m1()).sqrt())
}

/// Δ_EPR = 2(n₀+1)(e^r − √(e^{2r}−1))².
pub fn epr_variance_ideal(r: f64, n0: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(domain(format!("r must be >= 0, got {r}")));
    }
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(domain(format!("n0 must be >= 0, got {n0}")));
    }
    let c = contraction(r);
    Ok(2.0 * (n0 + 1.0) * c * c)
}

/// Smallest squeezing that entangles: r₀ = ½ ln((n₀+2)²/(4(n₀+1))).
pub fn squeezing_threshold(n0: f64) -> f64 {
    // (n+2)²/(4(n+1)) = 1 + n²/(4(n+1))
    0.5 * (n0 * n0 / (4.0 * (n0 + 1.0))).ln_1p()
}

/// Coefficients of A_out = −e^r A_in − i√(e^{2r}−1) B_in†,
/// B_out = e^r B_in + i√(e^{2r}−1) A_in†.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeSqueezeMap {
    pub r: f64,
    pub cosh_like: f64,
    pub sinh_like: f64,
}

pub fn entangle_map(r: f64) -> Result<TwoModeSqueezeMap> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(domain(format!("r must be >= 0, got {r}")));
    }
    Ok(TwoModeSqueezeMap { r, cosh_like: r.exp(), sinh_like: (2.0 * r).exp_m1().sqrt() })
}

impl TwoModeSqueezeMap {
    /// Quadrature transfer matrix: rows (X_m, P_m, X_l, P_l)^out, columns
    /// (X_m, P_m, X_l, P_l)^in.
    pub fn quadrature_matrix(&self) -> Matrix4<f64> {
        let (e, s) = (self.cosh_like, self.sinh_like);
        Matrix4::new(
            e, 0.0, 0.0, s, //
            0.0, e, s, 0.0, //
            0.0, -s, -e, 0.0, //
            -s, 0.0, 0.0, -e,
        )
    }

    /// Output state for a thermal mirror (`n0`) and vacuum light.
    pub fn output_state(&self, n0: f64) -> GaussianState {
        GaussianState::thermal_product(n0, 0.0).transform(&self.quadrature_matrix())
    }
}

/// Coefficients of A′_out = −e^{−Gτ} A′_in + i√(1−e^{−2Gτ}) B_in,
/// B_out = e^{−Gτ} B_in − i√(1−e^{−2Gτ}) A′_in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapMap {
    pub transmit: f64,
    pub swap: f64,
}

pub fn swap_map(g_tau: f64) -> Result<SwapMap> {
    if g_tau.is_nan() || g_tau < 0.0 {
        return Err(domain(format!("G·tau must be >= 0, got {g_tau}")));
    }
    Ok(SwapMap { transmit: (-g_tau).exp(), swap: (-(-2.0 * g_tau).exp_m1()).sqrt() })
}

impl SwapMap {
    /// Quadrature transfer matrix in the (X_m, P_m, X_l, P_l) ordering.
    pub fn quadrature_matrix(&self) -> Matrix4<f64> {
        let (t, s) = (self.transmit, self.swap);
        Matrix4::new(
            t, 0.0, 0.0, s, //
            0.0, t, -s, 0.0, //
            0.0, -s, -t, 0.0, //
            s, 0.0, 0.0, -t,
        )
    }

    /// Fraction of the mechanical state carried by the outgoing light
    /// (|swap|², unity for a perfect transfer).
    pub fn transfer_fidelity(&self) -> f64 {
        self.swap * self.swap
    }
}

/// Under a perfect swap the measured light quadrature X′_l(θ) carries the
/// mechanical quadrature at angle θ − π/2, i.e. X′_l(θ) = −X_m(θ + π/2).
pub fn readout_mechanical_angle(theta: f64) -> f64 {
    theta - std::f64::consts::FRAC_PI_2
}

/// Noise added to each mirror quadrature by teleportation, (ΔX², ΔP²).
pub fn teleport_added_noise(r: f64, n0: f64) -> Result<(f64, f64)> {
    let d = epr_variance_ideal(r, n0)?;
    Ok((0.5 * d, 0.5 * d))
}

/// Coherent-state teleportation fidelity F = 1/(1 + Δ_EPR/2).
pub fn coherent_fidelity(delta_epr: f64) -> Result<f64> {
    if delta_epr.is_nan() || delta_epr < 0.0 {
        return Err(domain(format!("delta_epr must be >= 0, got {delta_epr}")));
    }
    Ok(1.0 / (1.0 + 0.5 * delta_epr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::symplectic_form;
    use proptest::prelude::*;

    /// Independent oracle: propagate the covariance through the operator
    /// relations written out coefficient by coefficient.
    fn oracle_epr(r: f64, n0: f64) -> f64 {
        let e = r.exp();
        let s = (e * e - 1.0).sqrt();
        // X_m + P_l = (e − s)(X_B − P_A), P_m + X_l = (e − s)(P_B − X_A)
        let v = (e - s) * (e - s) * ((n0 + 0.5) + 0.5);
        2.0 * v
    }

    #[test]
    fn separable_boundary() {
        assert!((epr_variance_ideal(0.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((epr_variance_ideal(0.0, 7.0).unwrap() - 16.0).abs() < 1e-13);
    }

    #[test]
    fn fixture_r2_n50() {
        let v = epr_variance_ideal(2.0, 50.0).unwrap();
        assert!((v - 0.471_375_538_344_938_2).abs() < 1e-14, "{v}");
    }

    #[test]
    fn asymptotic_form() {
        let mut last = f64::INFINITY;
        for r in [2.0, 5.0, 10.0, 20.0, 40.0] {
            let v = epr_variance_ideal(r, 3.0).unwrap();
            let ratio = v / (4.0 * (-2.0 * r).exp() / 2.0);
            let dev = (ratio - 1.0).abs();
            assert!(dev < last || dev < 1e-14);
            last = dev;
        }
        assert!(last < 1e-12);
        // no cancellation at large r
        assert!(epr_variance_ideal(300.0, 0.0).unwrap() > 0.0);
    }

    #[test]
    fn rejects_negative_inputs() {
        assert!(epr_variance_ideal(-0.1, 0.0).is_err());
        assert!(epr_variance_ideal(0.1, -1.0).is_err());
        assert!(coherent_fidelity(-1.0).is_err());
        assert!(entangle_map(-1.0).is_err());
    }

    #[test]
    fn threshold_values() {
        assert_eq!(squeezing_threshold(0.0), 0.0);
        for n in [0.0, 1.0, 10.0, 1e3, 1e6] {
            let v = epr_variance_ideal(squeezing_threshold(n), n).unwrap();
            assert!((v - 2.0).abs() < 1e-9, "n0={n}: {v}");
        }
        let mut prev = f64::INFINITY;
        for n in [1e4, 1e8, 1e12, 1e16] {
            let dev = (squeezing_threshold(n) / (0.5 * f64::ln(n)) - 1.0).abs();
            assert!(dev < prev);
            prev = dev;
        }
        assert!(prev < 0.05);
    }

    #[test]
    fn map_at_zero_is_phase_flip_on_light() {
        let m = entangle_map(0.0).unwrap();
        assert_eq!(m.sinh_like, 0.0);
        let q = m.quadrature_matrix();
        assert_eq!(q, Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, -1.0, -1.0)));
    }

    #[test]
    fn propagated_covariance_matches_closed_form() {
        for &(r, n0) in &[(0.3, 0.0), (1.0, 2.0), (2.0, 50.0), (4.5, 0.7)] {
            let st = entangle_map(r).unwrap().output_state(n0);
            let c = st.cov;
            let d = c[(0, 0)] + c[(3, 3)] + 2.0 * c[(0, 3)] + c[(1, 1)] + c[(2, 2)] + 2.0 * c[(1, 2)];
            let expect = oracle_epr(r, n0);
            assert!((d - expect).abs() < 1e-10 * expect.max(1.0), "r={r}: {d} vs {expect}");
        }
    }

    #[test]
    fn quadrature_maps_are_symplectic() {
        let o = symplectic_form();
        for r in [0.0, 0.5, 3.0] {
            let t = entangle_map(r).unwrap().quadrature_matrix();
            assert!((t * o * t.transpose() - o).amax() < 1e-12 * r.exp().powi(2));
        }
        for gt in [0.0, 0.5, 3.0, 50.0] {
            let t = swap_map(gt).unwrap().quadrature_matrix();
            assert!((t * o * t.transpose() - o).amax() < 1e-14);
        }
    }

    #[test]
    fn perfect_swap_reads_rotated_mechanical_quadrature() {
        let sw = swap_map(60.0).unwrap();
        assert!((sw.transfer_fidelity() - 1.0).abs() < 1e-15);
        let t = sw.quadrature_matrix();
        for k in 0..8 {
            let theta = k as f64 * 0.4;
            // X'_l(θ) = cos θ · row X_l + sin θ · row P_l
            let row: Vec<f64> = (0..4).map(|j| theta.cos() * t[(2, j)] + theta.sin() * t[(3, j)]).collect();
            let phi = readout_mechanical_angle(theta);
            let expect = [phi.cos(), phi.sin(), 0.0, 0.0];
            for j in 0..4 {
                assert!((row[j] - expect[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_swap_leaves_mirror_untouched() {
        let t = swap_map(0.0).unwrap().quadrature_matrix();
        assert_eq!(t, Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, -1.0, -1.0)));
    }

    #[test]
    fn teleportation_limits() {
        let (x, p) = teleport_added_noise(0.0, 0.0).unwrap();
        assert!((x + p - 2.0).abs() < 1e-15);
        let (x, _) = teleport_added_noise(30.0, 0.0).unwrap();
        assert!(x < 1e-25);
        assert!((coherent_fidelity(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(coherent_fidelity(0.0).unwrap(), 1.0);
        assert!((coherent_fidelity(0.7).unwrap() - 0.740_740_740_740_740_7).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn bogoliubov_and_unitarity(r in 0.0f64..15.0, gt in 0.0f64..30.0) {
            let m = entangle_map(r).unwrap();
            let lhs = m.cosh_like * m.cosh_like - m.sinh_like * m.sinh_like;
            prop_assert!((lhs - 1.0).abs() < 1e-12 * m.cosh_like * m.cosh_like);
            let s = swap_map(gt).unwrap();
            prop_assert!((s.transmit * s.transmit + s.swap * s.swap - 1.0).abs() < 1e-12);
        }

        #[test]
        fn monotone_in_r_and_n0(r in 0.0f64..10.0, dr in 1e-3f64..1.0, n0 in 0.0f64..1e6, dn in 1e-3f64..10.0) {
            let v = epr_variance_ideal(r, n0).unwrap();
            prop_assert!(epr_variance_ideal(r + dr, n0).unwrap() < v);
            prop_assert!(epr_variance_ideal(r, n0 + dn).unwrap() > v);
        }

        #[test]
        fn entanglement_iff_above_threshold(r in 0.0f64..10.0, n0 in 0.0f64..1e6) {
            let r0 = squeezing_threshold(n0);
            prop_assume!((r - r0).abs() > 1e-9);
            prop_assert_eq!(epr_variance_ideal(r, n0).unwrap() < 2.0, r > r0);
        }

        #[test]
        fn added_noise_is_half_epr_per_quadrature(r in 0.0f64..10.0, n0 in 0.0f64..1e4) {
            let (x, p) = teleport_added_noise(r, n0).unwrap();
            let d = epr_variance_ideal(r, n0).unwrap();
            prop_assert!((x - 0.5 * d).abs() <= 1e-15 * d && (x + p - d).abs() <= 1e-15 * d);
        }

        #[test]
        fn fidelity_beats_classical_iff_entangled(d in 0.0f64..10.0) {
            prop_assume!((d - 2.0).abs() > 1e-12);
            prop_assert_eq!(coherent_fidelity(d).unwrap() > 0.5, d < 2.0);
        }
    }
}
