//! Minimization of the EPR variance over (ε, η, ξ) at fixed bath occupation,
//! initial occupation and quality factor.

mod cw;
mod simplex;

pub use cw::{cw_scan, CwPoint, CwScan};
pub use simplex::{minimize, SimplexOptions, SimplexResult};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_drift, io_relation, output_state, OutputMode};
use crate::error::{domain, Error, Result};
use crate::metrics::epr_variance;
use crate::params::{DimensionlessParams, FrequencyConvention, OperatingPoint};
use crate::state::GaussianState;

/// Squeezing beyond this makes the covariance too large to resolve
/// Δ_EPR = O(1) in double precision.
pub const MAX_SQUEEZING: f64 = 10.0;

/// Search box in (ε, η, ξ).
pub const ETA_RANGE: (f64, f64) = (1e-3, 2.0);
pub const XI_RANGE: (f64, f64) = (1e-3, 1.0);
pub const EPS_MIN: f64 = 1e-8;

/// Upper bound on ε: min(1, 1/n̄).
pub fn eps_max(n_bar: f64) -> f64 {
    if n_bar > 1.0 {
        1.0 / n_bar
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveOptions {
    /// Scale applied to the default output-mode rate G.
    pub rate_scale: f64,
    /// Minimize additionally over the rate scale in [0.5, 1.5].
    pub rate_search: bool,
}

impl Default for ObjectiveOptions {
    fn default() -> Self {
        ObjectiveOptions { rate_scale: 1.0, rate_search: false }
    }
}

/// Output state of a blue-detuned pulse (Δ = −ω_m) at the dimensionless
/// point `d`, thermal noise included.
pub fn pulse_output(d: &DimensionlessParams, rate_scale: f64) -> Result<GaussianState> {
    d.validate()?;
    let p = d.scaled_blue();
    let drift = build_drift(&p, false);
    let mode = OutputMode::for_drift(&drift).with_rate_scale(rate_scale);
    let io = io_relation(&drift, &mode, p.tau)?;
    output_state(&io, d.n0, d.n_bar, d.epsilon)
}

fn wrap(eps: f64, eta: f64, xi: f64) -> impl Fn(Error) -> Error {
    move |e| Error::Objective { eps, eta, xi, source: Box::new(e) }
}

/// Δ_EPR at (ε, η, ξ) with the default output mode.
pub fn objective(eps: f64, eta: f64, xi: f64, n_bar: f64, n0: f64, q: f64) -> Result<f64> {
    objective_with(eps, eta, xi, n_bar, n0, q, &ObjectiveOptions::default())
}

pub fn objective_with(
    eps: f64,
    eta: f64,
    xi: f64,
    n_bar: f64,
    n0: f64,
    q: f64,
    opts: &ObjectiveOptions,
) -> Result<f64> {
    let d = DimensionlessParams { eta, xi, epsilon: eps, n_bar, n0, q };
    let eval = |s: f64| pulse_output(&d, s).map(|st| epr_variance(&st)).map_err(wrap(eps, eta, xi));
    if !opts.rate_search {
        return eval(opts.rate_scale);
    }
    // golden-section search on the rate scale
    let (mut a, mut b) = (0.5f64, 1.5f64);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut e = a + phi * (b - a);
    let mut fc = eval(c)?;
    let mut fe = eval(e)?;
    while b - a > 1e-4 {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + phi * (b - a);
            fe = eval(e)?;
        }
    }
    Ok(fc.min(fe).min(eval(1.0)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub points_per_decade: usize,
    /// Number of best grid points refined by the simplex search.
    pub refine: usize,
    pub objective: ObjectiveOptions,
    /// Additional starting points (ε, η, ξ), e.g. a neighbouring optimum.
    pub extra_seeds: Vec<[f64; 3]>,
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_iter: usize,
    pub max_restarts: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            points_per_decade: 8,
            refine: 5,
            objective: ObjectiveOptions::default(),
            extra_seeds: Vec::new(),
            f_tol: 1e-7,
            x_tol: 1e-5,
            max_iter: 4000,
            max_restarts: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub grid_points: usize,
    pub feasible_points: usize,
    pub evaluations: usize,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub n_bar: f64,
    pub n0: f64,
    pub q: f64,
    pub eps_opt: f64,
    pub eta_opt: f64,
    pub xi_opt: f64,
    pub delta_epr_min: f64,
    /// (2n̄ + 1) ε_opt.
    pub thermal_share: f64,
    /// ε_opt / Δ_EPR.
    pub eps_prime: f64,
    pub squeezing: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derived: Option<OperatingPoint>,
    pub diagnostics: Diagnostics,
}

impl OptimizationResult {
    pub fn params(&self) -> DimensionlessParams {
        DimensionlessParams {
            eta: self.eta_opt,
            xi: self.xi_opt,
            epsilon: self.eps_opt,
            n_bar: self.n_bar,
            n0: self.n0,
            q: self.q,
        }
    }

    /// Attaches the dimensional operating point for angular `omega_m` and
    /// `g0`.
    pub fn with_operating_point(
        mut self,
        omega_m: f64,
        g0: f64,
        lambda_l: Option<f64>,
        convention: FrequencyConvention,
    ) -> Result<Self> {
        self.derived = Some(OperatingPoint::derive(&self.params(), omega_m, g0, lambda_l, convention)?);
        Ok(self)
    }
}

fn log_axis(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=n).map(|k| lo * (hi / lo).powf(k as f64 / n as f64)).collect()
}

/// The coarse seed grid over (ε, η, ξ).
pub fn seed_grid(n_bar: f64, per_decade: usize) -> Vec<[f64; 3]> {
    let eps = log_axis(EPS_MIN, eps_max(n_bar), per_decade);
    let eta = log_axis(ETA_RANGE.0, ETA_RANGE.1, per_decade);
    let xi = log_axis(XI_RANGE.0, XI_RANGE.1, per_decade);
    let mut out = Vec::with_capacity(eps.len() * eta.len() * xi.len());
    for &e in &eps {
        for &h in &eta {
            for &x in &xi {
                out.push([e, h, x]);
            }
        }
    }
    out
}

/// Global minimum of Δ_EPR over (ε, η, ξ) with default options.
pub fn optimize(n_bar: f64, n0: f64, q: f64) -> Result<OptimizationResult> {
    optimize_with(n_bar, n0, q, &OptimizerOptions::default())
}

pub fn optimize_with(n_bar: f64, n0: f64, q: f64, opts: &OptimizerOptions) -> Result<OptimizationResult> {
    if !(n_bar >= 0.0 && n_bar.is_finite()) {
        return Err(domain(format!("n_bar must be >= 0, got {n_bar}")));
    }
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(domain(format!("n0 must be >= 0, got {n0}")));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(domain(format!("Q must exceed 1, got {q}")));
    }
    let obj = opts.objective;
    let f = |x: &[f64; 3]| -> f64 {
        if x[2] * x[2] * x[1] * x[0] * q > MAX_SQUEEZING {
            return f64::INFINITY;
        }
        objective_with(x[0], x[1], x[2], n_bar, n0, q, &obj).unwrap_or(f64::INFINITY)
    };

    let grid = seed_grid(n_bar, opts.points_per_decade);
    let values: Vec<f64> = grid.par_iter().map(f).collect();
    let feasible = values.iter().filter(|v| v.is_finite()).count();

    let mut order: Vec<usize> = (0..grid.len()).filter(|&k| values[k].is_finite()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut starts: Vec<[f64; 3]> = order.iter().take(opts.refine).map(|&k| grid[k]).collect();
    starts.extend(opts.extra_seeds.iter().copied().filter(|s| f(s).is_finite()));
    if starts.is_empty() {
        let best = order.first().map(|&k| grid[k]).unwrap_or(grid[0]);
        return Err(Error::OptimizationFailed { best, value: f64::INFINITY });
    }

    let hi_eps = eps_max(n_bar);
    let lo = [EPS_MIN.ln(), ETA_RANGE.0.ln(), XI_RANGE.0.ln()];
    let hi = [hi_eps.ln(), ETA_RANGE.1.ln(), XI_RANGE.1.ln()];
    let simplex = SimplexOptions {
        step: std::f64::consts::LN_10 / opts.points_per_decade as f64,
        f_tol: opts.f_tol,
        x_tol: opts.x_tol,
        max_iter: opts.max_iter,
    };
    let log_f = |y: &[f64; 3]| f(&[y[0].exp(), y[1].exp(), y[2].exp()]);

    let refined: Vec<(SimplexResult<3>, usize)> = starts
        .par_iter()
        .map(|s| {
            let mut y = [s[0].ln(), s[1].ln(), s[2].ln()];
            let mut total = SimplexResult { x: y, f: f64::INFINITY, iterations: 0, evaluations: 0, converged: false };
            let mut restarts = 0;
            loop {
                let r = minimize(log_f, y, lo, hi, &simplex);
                let improved = total.f - r.f;
                total = SimplexResult {
                    x: r.x,
                    f: r.f,
                    iterations: total.iterations + r.iterations,
                    evaluations: total.evaluations + r.evaluations,
                    converged: r.converged,
                };
                y = r.x;
                // restart from the best vertex until it stops improving
                if improved.is_nan() || improved <= opts.f_tol || restarts >= opts.max_restarts {
                    break;
                }
                restarts += 1;
            }
            (total, restarts)
        })
        .collect();

    let (best, restarts) =
        refined.iter().filter(|(r, _)| r.f.is_finite()).min_by(|a, b| a.0.f.total_cmp(&b.0.f)).cloned().ok_or_else(
            || Error::OptimizationFailed {
                best: starts[0],
                value: order.first().map(|&k| values[k]).unwrap_or(f64::INFINITY),
            },
        )?;

    let x = [best.x[0].exp(), best.x[1].exp(), best.x[2].exp()];
    let delta = objective_with(x[0], x[1], x[2], n_bar, n0, q, &obj)?;
    let thermal_share = (2.0 * n_bar + 1.0) * x[0];
    Ok(OptimizationResult {
        n_bar,
        n0,
        q,
        eps_opt: x[0],
        eta_opt: x[1],
        xi_opt: x[2],
        delta_epr_min: delta,
        thermal_share,
        eps_prime: x[0] / delta,
        squeezing: x[2] * x[2] * x[1] * x[0] * q,
        derived: None,
        diagnostics: Diagnostics {
            grid_points: grid.len(),
            feasible_points: feasible,
            evaluations: grid.len() + refined.iter().map(|(r, _)| r.evaluations).sum::<usize>(),
            iterations: refined.iter().map(|(r, _)| r.iterations).sum(),
            restarts: refined.iter().map(|(_, k)| *k).sum::<usize>().max(restarts),
            converged: best.converged,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub n_bar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<OptimizationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Optimizes each n̄ in order, seeding every point with the previous
/// optimum. Failures are recorded and the sweep continues.
pub fn sweep(n_bar_list: &[f64], n0: f64, q: f64) -> Result<Vec<SweepEntry>> {
    sweep_with(n_bar_list, n0, q, &OptimizerOptions::default())
}

pub fn sweep_with(n_bar_list: &[f64], n0: f64, q: f64, opts: &OptimizerOptions) -> Result<Vec<SweepEntry>> {
    if n_bar_list.windows(2).any(|w| w[0].is_nan() || w[1].is_nan() || w[0] >= w[1]) {
        return Err(domain("n_bar grid must be strictly increasing"));
    }
    let mut out = Vec::with_capacity(n_bar_list.len());
    let mut warm: Option<[f64; 3]> = None;
    for &n_bar in n_bar_list {
        let mut o = opts.clone();
        if let Some(w) = warm {
            o.extra_seeds.push([w[0].min(eps_max(n_bar)), w[1], w[2]]);
        }
        match optimize_with(n_bar, n0, q, &o) {
            Ok(r) => {
                warm = Some([r.eps_opt, r.eta_opt, r.xi_opt]);
                out.push(SweepEntry { n_bar, result: Some(r), error: None });
            }
            Err(e) => {
                log::warn!("sweep point n_bar = {n_bar} failed: {e}");
                out.push(SweepEntry { n_bar, result: None, error: Some(e.to_string()) });
            }
        }
    }
    Ok(out)
}

/// `count` logarithmically spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    (0..count).map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64)).collect()
}

/// The two published sweep scenarios: (Q, n₀).
pub const FIGURE2_SCENARIOS: [(f64, f64); 2] = [(1e7, 50.0), (1e5, 0.0)];
