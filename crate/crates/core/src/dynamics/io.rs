//! Projection of the pulse dynamics onto the output temporal modes.
//!
//! The light mode `A_out = ∫ α_out*(t) a_out(t) dt` with an exponential
//! envelope `α_out ∝ e^{ρt} e^{iω_c t}` is generated by an auxiliary
//! amplitude `ẇ = −(ρ − iω_c) w + a_out`, so that `A_out ∝ w(τ)`. The
//! augmented six-dimensional linear system is then discretized exactly
//! (matrix exponential plus Van Loan noise integrals) with no time grid.

use nalgebra::{DMatrix, Matrix2, Matrix4, SMatrix};
use serde::{Deserialize, Serialize};

use super::drift::{to_dyn, to_fixed, DriftModel};
use crate::error::{domain, Error, Result};
use crate::linalg::{discretize, expm, C64};
use crate::state::{symplectic_form, GaussianState};

/// Covariance entries beyond this magnitude no longer resolve Δ_EPR = O(1).
pub const MAX_COVARIANCE: f64 = 1e9;

/// Normalized exponential output envelope `α(t) = N e^{ρt} e^{iω_c t}` on
/// `[0, τ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputMode {
    pub rate: f64,
    pub carrier: f64,
}

impl OutputMode {
    /// Default mode for a drift: carrier at the mechanical sideband (−Δ)
    /// and rate +G for blue detuning, −G for red.
    pub fn for_drift(d: &DriftModel) -> Self {
        let big_g = d.g * d.g / d.kappa;
        let rate = if d.detuning <= 0.0 { big_g } else { -big_g };
        OutputMode { rate, carrier: -d.detuning }
    }

    /// Same carrier, rate multiplied by `factor`.
    pub fn with_rate_scale(self, factor: f64) -> Self {
        OutputMode { rate: self.rate * factor, ..self }
    }

    /// `N e^{ρτ}`, the weight of `w(τ)` in `A_out`.
    pub fn end_weight(&self, tau: f64) -> f64 {
        let x = 2.0 * self.rate * tau;
        if x.abs() < 1e-12 {
            (1.0 / tau).sqrt()
        } else {
            (2.0 * self.rate / -(-x).exp_m1()).sqrt()
        }
    }

    /// Envelope value at `t ∈ [0, τ]`.
    pub fn value(&self, t: f64, tau: f64) -> C64 {
        let amp = self.end_weight(tau) * (self.rate * (t - tau)).exp();
        C64::from_polar(amp, self.carrier * t)
    }
}

/// Input–output relation of one output mode:
/// `O = c₁ B_in + c₂ B_in† + c₃ a_c(0) + c₄ a_c†(0) + c₅ ∫α₁ a_in + c₆ ∫α₂* a_in†`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRelation {
    pub c: [C64; 6],
    /// Gram matrix `∫ α_i α_j*` of the two noise envelopes.
    pub overlap: [[C64; 2]; 2],
}

impl ModeRelation {
    /// `[O, O†]`; unity for a bosonic output mode.
    pub fn commutator(&self) -> f64 {
        let c = &self.c;
        c[0].norm_sqr() - c[1].norm_sqr() + c[2].norm_sqr() - c[3].norm_sqr() + c[4].norm_sqr() - c[5].norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IOCoefficients {
    pub mode: OutputMode,
    pub tau: f64,
    pub mechanics: ModeRelation,
    pub light: ModeRelation,
    /// Rows (X_m, P_m, X_l, P_l) at τ, columns (x_m, p_m, x_c, p_c) at 0.
    pub transfer: Matrix4<f64>,
    /// Symmetrized covariance contributed by the input noise.
    pub noise_cov: Matrix4<f64>,
    /// `[O_i, O_j] = i K_ij`.
    pub commutator: Matrix4<f64>,
    /// Gram matrix of (α₁, α₂) for mechanics followed by (α₁, α₂) for light.
    pub gram: [[C64; 4]; 4],
    pub gamma_included: bool,
    #[serde(skip)]
    drift: Option<DriftModel>,
    #[serde(skip)]
    kernel_gram: Option<SMatrix<f64, 8, 8>>,
}

fn augmented(d: &DriftModel, mode: &OutputMode) -> (DMatrix<f64>, DMatrix<f64>) {
    let sq = (2.0 * d.kappa).sqrt();
    let mut a = DMatrix::<f64>::zeros(6, 6);
    a.view_mut((0, 0), (4, 4)).copy_from(&to_dyn(&d.a));
    a[(4, 2)] = sq;
    a[(5, 3)] = sq;
    a[(4, 4)] = -mode.rate;
    a[(4, 5)] = -mode.carrier;
    a[(5, 4)] = mode.carrier;
    a[(5, 5)] = -mode.rate;
    let mut b = DMatrix::<f64>::zeros(6, 2);
    b[(2, 0)] = -sq;
    b[(3, 1)] = -sq;
    b[(4, 0)] = 1.0;
    b[(5, 1)] = 1.0;
    (a, b)
}

/// Readout map from the augmented state at τ to (X_m, P_m, X_l, P_l): the
/// mechanics in the frame rotating at ω_m, the light mode weighted and
/// rotated back by the carrier phase.
fn readout(d: &DriftModel, mode: &OutputMode, tau: f64) -> DMatrix<f64> {
    let mut l = DMatrix::<f64>::zeros(4, 6);
    let (sm, cm) = (d.omega_m * tau).sin_cos();
    l[(0, 0)] = cm;
    l[(0, 1)] = -sm;
    l[(1, 0)] = sm;
    l[(1, 1)] = cm;
    let w = mode.end_weight(tau);
    let (sl, cl) = (mode.carrier * tau).sin_cos();
    l[(2, 4)] = w * cl;
    l[(2, 5)] = w * sl;
    l[(3, 4)] = -w * sl;
    l[(3, 5)] = w * cl;
    l
}

fn block_coefficients(m: &Matrix2<f64>) -> (C64, C64) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    (C64::new(0.5 * (a + d), 0.5 * (c - b)), C64::new(0.5 * (a - d), 0.5 * (c + b)))
}

/// Coefficients of the annihilation (φ) and creation (ψ) parts of the noise
/// kernel of output rows (i, j) over the basis (u₀..u₃, v₀..v₃), where u and
/// v are the responses to x_in and p_in.
fn kernel_vectors(i: usize, j: usize) -> ([C64; 8], [C64; 8]) {
    let h = 0.5;
    let mut phi = [C64::new(0.0, 0.0); 8];
    let mut psi = [C64::new(0.0, 0.0); 8];
    // φ = (u_X + v_P + i(u_P − v_X))/2, ψ = (u_X − v_P + i(u_P + v_X))/2
    phi[i] += h;
    phi[4 + j] += h;
    phi[j] += C64::new(0.0, h);
    phi[4 + i] -= C64::new(0.0, h);
    psi[i] += h;
    psi[4 + j] -= h;
    psi[j] += C64::new(0.0, h);
    psi[4 + i] += C64::new(0.0, h);
    (phi, psi)
}

fn bilinear(a: &[C64; 8], g: &SMatrix<f64, 8, 8>, b: &[C64; 8]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for p in 0..8 {
        for q in 0..8 {
            s += a[p] * g[(p, q)] * b[q].conj();
        }
    }
    s
}

/// Input–output coefficients for a pulse of length `tau` projected onto
/// `mode`.
pub fn io_relation(drift: &DriftModel, mode: &OutputMode, tau: f64) -> Result<IOCoefficients> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(domain(format!("pulse length must be > 0, got {tau}")));
    }
    let w = mode.end_weight(tau);
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::NotNormalized(w));
    }
    let (a6, b6) = augmented(drift, mode);
    let d = |p: usize, q: usize| {
        let mut e = DMatrix::<f64>::zeros(2, 2);
        e[(p, q)] = 1.0;
        &b6 * e * b6.transpose()
    };
    let mut ds = vec![d(0, 0), d(1, 1), d(0, 1)];
    if drift.gamma_included {
        let mut th = DMatrix::<f64>::zeros(6, 6);
        th[(1, 1)] = drift.n[(1, 1)];
        ds.push(th);
    }
    let (phi, f) = discretize(&a6, &ds, tau);
    let l = readout(drift, mode, tau);
    let lp = &l * &phi;
    let gxx = to_fixed(&(&l * &f[0] * l.transpose()));
    let gpp = to_fixed(&(&l * &f[1] * l.transpose()));
    let gxp = to_fixed(&(&l * &f[2] * l.transpose()));

    let transfer = to_fixed(&lp.view((0, 0), (4, 4)).clone_owned());
    let mut noise_cov = (gxx + gpp) * 0.5;
    if drift.gamma_included {
        noise_cov += to_fixed(&(&l * &f[3] * l.transpose()));
    }
    let omega = symplectic_form();
    let commutator = transfer * omega * transfer.transpose() + gxp - gxp.transpose();

    let mut g8 = SMatrix::<f64, 8, 8>::zeros();
    g8.fixed_view_mut::<4, 4>(0, 0).copy_from(&gxx);
    g8.fixed_view_mut::<4, 4>(0, 4).copy_from(&gxp);
    g8.fixed_view_mut::<4, 4>(4, 0).copy_from(&gxp.transpose());
    g8.fixed_view_mut::<4, 4>(4, 4).copy_from(&gpp);

    let mut envelopes = Vec::with_capacity(4);
    let mut relations = Vec::with_capacity(2);
    for (i, j) in [(0usize, 1usize), (2, 3)] {
        let (phi_k, psi_k) = kernel_vectors(i, j);
        let c5 = bilinear(&phi_k, &g8, &phi_k).re.max(0.0).sqrt();
        let c6 = bilinear(&psi_k, &g8, &psi_k).re.max(0.0).sqrt();
        let scale = |v: &[C64; 8], n: f64, conj: bool| {
            let mut out = [C64::new(0.0, 0.0); 8];
            for k in 0..8 {
                let z = if conj { v[k].conj() } else { v[k] };
                out[k] = if n > 0.0 { z / n } else { C64::new(0.0, 0.0) };
            }
            out
        };
        let a1 = scale(&phi_k, c5, false);
        let a2 = scale(&psi_k, c6, true);
        let row = transfer.fixed_view::<2, 4>(i, 0).into_owned();
        let (c1, c2) = block_coefficients(&row.fixed_view::<2, 2>(0, 0).into_owned());
        let (c3, c4) = block_coefficients(&row.fixed_view::<2, 2>(0, 2).into_owned());
        let overlap =
            [[bilinear(&a1, &g8, &a1), bilinear(&a1, &g8, &a2)], [bilinear(&a2, &g8, &a1), bilinear(&a2, &g8, &a2)]];
        relations.push(ModeRelation { c: [c1, c2, c3, c4, C64::new(c5, 0.0), C64::new(c6, 0.0)], overlap });
        envelopes.push(a1);
        envelopes.push(a2);
    }
    let mut gram = [[C64::new(0.0, 0.0); 4]; 4];
    for p in 0..4 {
        for q in 0..4 {
            gram[p][q] = bilinear(&envelopes[p], &g8, &envelopes[q]);
        }
    }
    Ok(IOCoefficients {
        mode: *mode,
        tau,
        mechanics: relations[0],
        light: relations[1],
        transfer,
        noise_cov,
        commutator,
        gram,
        gamma_included: drift.gamma_included,
        drift: Some(*drift),
        kernel_gram: Some(g8),
    })
}

/// Envelopes of [`IOCoefficients`] sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledEnvelopes {
    pub times: Vec<f64>,
    pub alpha_out: Vec<C64>,
    /// Mechanics (α₁, α₂) then light (α₁, α₂).
    pub alpha_in: [Vec<C64>; 4],
    /// Composite-Simpson Gram matrix of `alpha_in`.
    pub overlap: [[C64; 4]; 4],
}

/// Smallest odd sample count giving at least `per_scale` samples per
/// mechanical period 2π/ω_m and per cavity time 1/κ.
pub fn default_grid_points(drift: &DriftModel, tau: f64, per_scale: usize) -> usize {
    let rate = (drift.omega_m / std::f64::consts::TAU).max(drift.kappa);
    let n = (tau * rate * per_scale as f64).ceil() as usize + 1;
    n.max(2 * per_scale + 1) | 1
}

/// Composite Simpson rule on an odd number of uniform samples.
pub fn simpson(values: &[C64], h: f64) -> C64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd sample count >= 3");
    let mut s = values[0] + values[n - 1];
    for (k, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += v * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

impl IOCoefficients {
    /// Samples the output envelope and the four noise envelopes on `points`
    /// uniform samples; rejects grids on which the output envelope does not
    /// integrate to one within 1e-6.
    pub fn sample_envelopes(&self, points: usize) -> Result<SampledEnvelopes> {
        let drift =
            self.drift.ok_or_else(|| Error::Contract("coefficients were deserialized without their drift".into()))?;
        let points = points.max(3) | 1;
        let h = self.tau / (points - 1) as f64;
        let times: Vec<f64> = (0..points).map(|k| k as f64 * h).collect();
        let alpha_out: Vec<C64> = times.iter().map(|&t| self.mode.value(t, self.tau)).collect();
        let norm = simpson(&alpha_out.iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect::<Vec<_>>(), h).re;
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized(norm));
        }

        let (a6, b6) = augmented(&drift, &self.mode);
        let step = expm(&(&a6 * h));
        let mut left = readout(&drift, &self.mode, self.tau);
        let mut kernels = vec![DMatrix::<f64>::zeros(4, 2); points];
        for k in (0..points).rev() {
            kernels[k] = &left * &b6;
            left = &left * &step;
        }

        let mut alpha_in: [Vec<C64>; 4] = Default::default();
        for (m, (i, j)) in [(0usize, 1usize), (2, 3)].into_iter().enumerate() {
            let rel = if m == 0 { &self.mechanics } else { &self.light };
            let (c5, c6) = (rel.c[4].re, rel.c[5].re);
            for kern in &kernels {
                let (ux, up, vx, vp) = (kern[(i, 0)], kern[(j, 0)], kern[(i, 1)], kern[(j, 1)]);
                let phi = C64::new(ux + vp, up - vx) * 0.5;
                let psi = C64::new(ux - vp, up + vx) * 0.5;
                alpha_in[2 * m].push(if c5 > 0.0 { phi / c5 } else { C64::new(0.0, 0.0) });
                alpha_in[2 * m + 1].push(if c6 > 0.0 { psi.conj() / c6 } else { C64::new(0.0, 0.0) });
            }
        }
        let mut overlap = [[C64::new(0.0, 0.0); 4]; 4];
        for p in 0..4 {
            for q in 0..4 {
                let prod: Vec<C64> = alpha_in[p].iter().zip(&alpha_in[q]).map(|(a, b)| a * b.conj()).collect();
                overlap[p][q] = simpson(&prod, h);
            }
        }
        Ok(SampledEnvelopes { times, alpha_out, alpha_in, overlap })
    }

    pub fn max_commutator_error(&self) -> f64 {
        (self.commutator - symplectic_form()).amax()
    }

    /// Gram matrix of the eight noise-response functions (u₀..u₃, v₀..v₃).
    pub fn kernel_gram(&self) -> Option<&SMatrix<f64, 8, 8>> {
        self.kernel_gram.as_ref()
    }
}

/// Output covariance from the pulse map alone: initial thermal mirror with
/// occupation `n0`, vacuum cavity and vacuum input.
pub fn pulse_state(io: &IOCoefficients, n0: f64) -> Result<GaussianState> {
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(domain(format!("n0 must be >= 0, got {n0}")));
    }
    let s0 = GaussianState::thermal_product(n0, 0.0).cov;
    let cov = io.transfer * s0 * io.transfer.transpose() + io.noise_cov;
    let magnitude = cov.amax();
    if !magnitude.is_finite() || magnitude > MAX_COVARIANCE {
        return Err(Error::PrecisionLoss { magnitude });
    }
    GaussianState::from_cov(cov)
}

/// Output state with the mechanical thermal noise added perturbatively:
/// each mechanical quadrature gains ε(n̄ + ½).
pub fn output_state(io: &IOCoefficients, n0: f64, n_bar: f64, epsilon: f64) -> Result<GaussianState> {
    if io.gamma_included {
        return Err(Error::Contract(
            "output_state adds the thermal noise itself; build the coefficients without damping".into(),
        ));
    }
    if !(n_bar >= 0.0 && epsilon >= 0.0) {
        return Err(domain("n_bar and epsilon must be >= 0"));
    }
    let mut st = pulse_state(io, n0)?;
    st.add_mechanical_noise(epsilon * (n_bar + 0.5));
    Ok(st)
}
