//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, Matrix4};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use pulsed_epr::amplitudes::{adiabatic_amplitudes, solve_amplitudes, validate_envelope, DetuningMode, PulseEnvelope};
use pulsed_epr::dynamics::{
    build_drift, covariance_ode_oracle, io_relation, output_state, propagate, propagator_ode, OutputMode,
};
use pulsed_epr::ideal::{
    coherent_fidelity, entangle_map, epr_variance_ideal, squeezing_threshold, swap_map, teleport_added_noise,
};
use pulsed_epr::linalg::{discretize, C64};
use pulsed_epr::metrics::{epr_variance, log_negativity, teleport_fidelity};
use pulsed_epr::optimizer::{cw_scan, log_grid, optimize, pulse_output, sweep, FIGURE2_SCENARIOS};
use pulsed_epr::params::{hz, PhysicalParams};
use pulsed_epr::state::{symplectic_form, GaussianState};
use pulsed_epr::table::{evaluate_row, REFERENCE_WAVELENGTH, TABLE_ROWS};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn within_rel(value: f64, target: f64, rel: f64) -> bool {
    (value / target - 1.0).abs() <= rel
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn row1_optimum() -> Outcome {
    let row = &TABLE_ROWS[0];
    let start = Instant::now();
    let cmp = evaluate_row(row, &Default::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let op = cmp.result.derived.expect("operating point attached");
    let ok = within(cmp.result.delta_epr_min, row.delta_epr, 0.1)
        && within_rel(op.kappa_hz, row.kappa_hz, 0.2)
        && within_rel(op.g_hz, row.g_hz, 0.2)
        && within_rel(op.tau, row.tau, 0.2)
        && elapsed < Duration::from_secs(300);
    verdict(
        ok,
        format!(
            "Δ_EPR={:.4} (ε,η,ξ)=({:.4e},{:.4},{:.4}) κ/2π={:.3} MHz g/2π={:.3} MHz τ={:.3} µs P={:.1} mW \
             [angular: τ={:.3} µs P={:.3} mW] in {:.1?}",
            cmp.result.delta_epr_min,
            cmp.result.eps_opt,
            cmp.result.eta_opt,
            cmp.result.xi_opt,
            op.kappa_hz * 1e-6,
            op.g_hz * 1e-6,
            op.tau * 1e6,
            op.power.unwrap_or(f64::NAN) * 1e3,
            cmp.angular.tau * 1e6,
            cmp.angular.power.unwrap_or(f64::NAN) * 1e3,
            elapsed
        ),
    )
}

fn crystal_rows() -> Outcome {
    let targets = [(0.1, 0.05), (0.5, 0.1)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (row, (target, tol)) in TABLE_ROWS[1..].iter().zip(targets) {
        let cmp = evaluate_row(row, &Default::default()).map_err(|e| e.to_string())?;
        let d = cmp.result.delta_epr_min;
        let pass = within(d, target, tol);
        ok &= pass;
        parts.push(format!(
            "n̄={}: Δ_EPR={:.4} (target {target}±{tol}, {}; at published point {:.4}; Bose–Einstein n̄={:.3})",
            row.n_bar,
            d,
            if pass { "ok" } else { "out of range" },
            cmp.delta_epr_at_reference,
            cmp.bose_einstein_n_bar,
        ));
    }
    verdict(ok, parts.join("; "))
}

fn figure2_sweeps() -> Outcome {
    let row1 = optimize(1100.0, 0.0, 1e5).map_err(|e| e.to_string())?;
    let mut grid = log_grid(1.0, 1e6, 13);
    grid.push(1100.0);
    grid.sort_by(f64::total_cmp);
    let mut ok = true;
    let mut parts = Vec::new();
    for (q, n0) in FIGURE2_SCENARIOS {
        let entries = sweep(&grid, n0, q).map_err(|e| e.to_string())?;
        let curve: Vec<(f64, f64, f64)> = entries
            .iter()
            .filter_map(|e| e.result.as_ref())
            .map(|r| (r.n_bar, r.delta_epr_min, r.thermal_share / r.delta_epr_min))
            .collect();
        let complete = curve.len() == grid.len();
        let monotone = curve.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-9);
        let crossing = curve.windows(2).find(|w| w[0].1 < 2.0 && w[1].1 >= 2.0).map(|w| (w[0].0, w[1].0));
        let shares: Vec<f64> = curve.iter().filter(|c| c.1 < 2.0).map(|c| c.2).collect();
        let spread = shares.iter().cloned().fold(0.0, f64::max) / shares.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut pass = complete && monotone && crossing.is_some() && spread < 3.0;
        let mut extra = String::new();
        if q == 1e5 && n0 == 0.0 {
            let at = curve.iter().find(|c| c.0 == 1100.0).map(|c| c.1).unwrap_or(f64::NAN);
            let through = (at - row1.delta_epr_min).abs() < 1e-6 && within(at, 0.7, 0.1);
            pass &= through;
            extra = format!(", Δ_EPR(1100)={at:.4}");
        }
        ok &= pass;
        parts.push(format!(
            "Q={q:e} n0={n0}: monotone={monotone} crosses 2 in {crossing:?}, thermal fraction spread ×{spread:.2}{extra}"
        ));
    }
    verdict(ok, parts.join("; "))
}

fn negativity_comparison() -> Outcome {
    let r = optimize(1100.0, 0.0, 1e5).map_err(|e| e.to_string())?;
    let st = pulse_output(&r.params(), 1.0).map_err(|e| e.to_string())?;
    let pulsed = log_negativity(&st).map_err(|e| e.to_string())?;
    let kappa = 3.2 / 3.8;
    let det: Vec<f64> = (0..69).map(|k| 0.3 + 1.7 * k as f64 / 68.0).collect();
    let g: Vec<f64> = (0..500).map(|k| 0.001 + 1.499 * k as f64 / 499.0).collect();
    let scan = cw_scan(kappa, 1e5, 1100.0, &det, &g).map_err(|e| e.to_string())?;
    let ok = within(pulsed, 1.2, 0.15) && within(scan.best.log_negativity, 0.4, 0.1) && scan.best.detuning > 0.0;
    verdict(
        ok,
        format!(
            "pulsed E_N={pulsed:.4}; CW max E_N={:.4} at Δ={:.3} ω_m, g={:.3} ω_m ({} of {} points stable)",
            scan.best.log_negativity, scan.best.detuning, scan.best.g, scan.stable_points, scan.total_points
        ),
    )
}

fn closed_forms() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(5);
    let (mut worst_ideal, mut worst_unit, mut worst_slope) = (0.0f64, 0.0f64, 0.0f64);
    let mut threshold_ok = true;
    let omega = symplectic_form();
    for _ in 0..2000 {
        let r = rng.random_range(0.0..10.0);
        let n0 = 10f64.powf(rng.random_range(-3.0..6.0));
        let ideal = epr_variance_ideal(r, n0).unwrap();
        let map = entangle_map(r).unwrap();
        threshold_ok &= (ideal < 2.0) == (r > squeezing_threshold(n0)) || (ideal - 2.0).abs() < 1e-9;
        let (ax, ap) = teleport_added_noise(r, n0).unwrap();
        let f = coherent_fidelity(ax + ap).unwrap();
        worst_ideal = worst_ideal.max((f - 1.0 / (1.0 + 0.5 * ideal)).abs());
        // the covariance route loses e^{4r} ulps to cancellation
        let (r_cov, n_cov) = (r.min(3.0), n0.min(1e3));
        let cov_state = entangle_map(r_cov).unwrap().output_state(n_cov);
        let cov_ideal = epr_variance_ideal(r_cov, n_cov).unwrap();
        worst_ideal = worst_ideal.max((epr_variance(&cov_state) - cov_ideal).abs() / cov_ideal);
        let cov_f = coherent_fidelity(cov_ideal).unwrap();
        worst_ideal = worst_ideal.max((teleport_fidelity(&cov_state).unwrap() - cov_f).abs());

        let e = map.cosh_like;
        worst_unit = worst_unit.max(((e * e - map.sinh_like * map.sinh_like) - 1.0).abs() / (e * e));
        let t = map.quadrature_matrix();
        worst_unit = worst_unit.max((t * omega * t.transpose() - omega).amax() / (e * e));
        let sw = swap_map(rng.random_range(0.0..20.0)).unwrap();
        worst_unit = worst_unit.max((sw.transmit.powi(2) + sw.swap.powi(2) - 1.0).abs());
        let b = sw.quadrature_matrix();
        worst_unit = worst_unit.max((b * omega * b.transpose() - omega).amax());
    }
    for _ in 0..50 {
        let d = pulsed_epr::params::DimensionlessParams {
            eta: rng.random_range(0.05..1.0),
            xi: rng.random_range(0.05..0.4),
            epsilon: 10f64.powf(rng.random_range(-5.0..-3.0)),
            n_bar: 10f64.powf(rng.random_range(0.0..3.0)),
            n0: 0.0,
            q: 1e5,
        };
        if d.squeezing() > 5.0 {
            continue;
        }
        let p = d.scaled_blue();
        let drift = build_drift(&p, false);
        let io = io_relation(&drift, &OutputMode::for_drift(&drift), p.tau).unwrap();
        let base = epr_variance(&output_state(&io, 0.0, d.n_bar, 0.0).unwrap());
        let with = epr_variance(&output_state(&io, 0.0, d.n_bar, d.epsilon).unwrap());
        worst_slope = worst_slope.max((with - base - (2.0 * d.n_bar + 1.0) * d.epsilon).abs());
    }
    let elapsed = start.elapsed();
    let ok =
        worst_ideal < 1e-9 && threshold_ok && worst_unit < 1e-12 && worst_slope < 1e-12 && elapsed.as_secs_f64() < 10.0;
    verdict(
        ok,
        format!(
            "ideal/threshold/fidelity max dev {worst_ideal:.1e} (iff holds: {threshold_ok}); unitarity {worst_unit:.1e}; \
             thermal slope {worst_slope:.1e}; {elapsed:.2?}"
        ),
    )
}

fn dyn4(m: &Matrix4<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(4, 4, m.as_slice())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(6);
    let (mut worst, mut unstable) = (0.0f64, 0);
    for k in 0..100 {
        let blue = k % 2 == 0;
        let p = PhysicalParams {
            omega_m: 1.0,
            kappa: rng.random_range(0.05..2.0),
            gamma: 10f64.powf(rng.random_range(-5.0..-2.0)),
            g0: 1.0,
            g: rng.random_range(0.0..0.5),
            detuning: if blue { -rng.random_range(0.2..2.0) } else { rng.random_range(0.0..2.0) },
            tau: 1.0,
            n_bar: rng.random_range(0.0..100.0),
            n0: 0.0,
            lambda_l: None,
        };
        let drift = build_drift(&p, k % 3 != 0);
        if drift.spectral_abscissa() > 0.0 {
            unstable += 1;
        }
        let t = rng.random_range(0.5..15.0);
        let m = propagate(&drift, t);
        let m_ode = propagator_ode(&drift, t).map_err(|e| e.to_string())?;
        worst = worst.max((m - m_ode).amax() / m.amax().max(1.0));

        let s0 = GaussianState::thermal_product(rng.random_range(0.0..5.0), 0.0);
        let (phi, qs) = discretize(&dyn4(&drift.a), &[dyn4(&drift.n)], t);
        let cov = &phi * dyn4(&s0.cov) * phi.transpose() + &qs[0];
        let oracle = covariance_ode_oracle(&drift, &s0, t).map_err(|e| e.to_string())?;
        worst = worst.max((cov - dyn4(&oracle.cov)).amax() / oracle.cov.amax().max(1.0));
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-8 && unstable > 0 && elapsed < Duration::from_secs(60);
    verdict(ok, format!("max scaled deviation {worst:.2e} over 100 draws ({unstable} unstable) in {elapsed:.2?}"))
}

fn limit_convergence() -> Outcome {
    let r = 2.0;
    let ideal = epr_variance_ideal(r, 0.0).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    for s in [1e-1, 1e-2, 1e-3] {
        let p = PhysicalParams {
            omega_m: 1.0,
            kappa: s,
            gamma: 1e-12,
            g0: 1.0,
            g: s * s,
            detuning: -1.0,
            tau: r / (s * s * s),
            n_bar: 0.0,
            n0: 0.0,
            lambda_l: None,
        };
        let drift = build_drift(&p, false);
        let io = io_relation(&drift, &OutputMode::for_drift(&drift), p.tau).map_err(|e| e.to_string())?;
        let d = epr_variance(&output_state(&io, 0.0, 0.0, 0.0).map_err(|e| e.to_string())?);
        points.push((s, (d - ideal).abs()));
    }
    let orders: Vec<f64> = points.windows(2).map(|w| (w[0].1 / w[1].1).log10() / (w[0].0 / w[1].0).log10()).collect();
    let ok = orders.iter().all(|&o| o >= 1.0);
    verdict(
        ok,
        format!(
            "|Δ−Δ_ideal| = {:.3e}, {:.3e}, {:.3e}; observed order {:.2}, {:.2}",
            points[0].1, points[1].1, points[2].1, orders[0], orders[1]
        ),
    )
}

fn appendix_validation() -> Outcome {
    let row = &TABLE_ROWS[0];
    let w = hz(row.f_m);
    let p = PhysicalParams {
        omega_m: w,
        kappa: hz(row.kappa_hz),
        gamma: w / row.q,
        g0: hz(row.g0_hz),
        g: hz(row.g_hz),
        detuning: -w,
        tau: row.tau,
        n_bar: row.n_bar,
        n0: row.n0,
        lambda_l: Some(REFERENCE_WAVELENGTH),
    };
    let env = PulseEnvelope::flat_top(p.tau, 0.1, 2001).map_err(|e| e.to_string())?;
    let exact = solve_amplitudes(&p, &env, DetuningMode::Locked).map_err(|e| e.to_string())?;
    let ad = adiabatic_amplitudes(&p, &env, DetuningMode::Locked).map_err(|e| e.to_string())?;
    let report = validate_envelope(&p, &env).map_err(|e| e.to_string())?;
    let plateau = report.plateau_alpha;
    let deviation = env
        .grid
        .iter()
        .enumerate()
        .filter(|(_, t)| env.on_plateau(**t))
        .map(|(k, _)| (exact.alpha[k] - ad.alpha[k]).norm())
        .fold(0.0, f64::max)
        / plateau;

    // cavity as a linear filter of the drive: Simpson on a fine grid
    let e0 = (2.0 * p.kappa * p.photon_number().map_err(|e| e.to_string())?).sqrt();
    let z = C64::new(p.kappa, p.detuning);
    let filter = |t: f64| {
        let tr = env.ramp_time();
        let mut knots: Vec<f64> = [0.0, tr, p.tau - tr, t].into_iter().filter(|&k| k <= t).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let f = |s: f64| (-(z * (t - s))).exp() * (e0 * env.value(s));
        let mut total = C64::new(0.0, 0.0);
        for kn in knots.windows(2) {
            let n = 20000;
            let h = (kn[1] - kn[0]) / n as f64;
            let mut s = f(kn[0]) + f(kn[1]);
            for j in 1..n {
                s += f(kn[0] + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
            }
            total += s * (h / 3.0);
        }
        total
    };
    let filter_dev =
        env.grid.iter().enumerate().step_by(50).map(|(k, &t)| (exact.alpha[k] - filter(t)).norm()).fold(0.0, f64::max)
            / plateau;
    let ok = deviation <= exact.delta_bound && filter_dev < 1e-8;
    verdict(
        ok,
        format!(
            "plateau deviation {deviation:.3e} ≤ δ_bound {:.3} ({:?}); slow variation {:.3} ({:?}); 1/κτ {:.3} ({:?}); \
             |α| plateau {plateau:.3e}; filter check {filter_dev:.1e}",
            report.delta_bound.value,
            report.delta_bound.flag,
            report.slow_variation.value,
            report.slow_variation.flag,
            report.inverse_kappa_tau.value,
            report.inverse_kappa_tau.flag,
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("row-1 optimum and operating point", row1_optimum),
        ("crystal rows", crystal_rows),
        ("occupation sweeps", figure2_sweeps),
        ("pulsed vs steady-state negativity", negativity_comparison),
        ("closed-form identities", closed_forms),
        ("propagator and covariance oracles", oracle_equivalence),
        ("weak-coupling limit", limit_convergence),
        ("envelope validation", appendix_validation),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
