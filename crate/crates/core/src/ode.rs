//! Adaptive Dormand–Prince 5(4) integrator for real vector ODEs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-10, atol: 1e-12 }
    }
}

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error weights b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Stateful integrator; keeps its step size between successive calls to
/// [`Integrator::advance`] so that dense sampling stays cheap.
pub struct Integrator<F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    rhs: F,
    tol: Tolerance,
    pub t: f64,
    pub y: Vec<f64>,
    h: f64,
    k1: Vec<f64>,
    pub steps: usize,
}

impl<F> Integrator<F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    pub fn new(mut rhs: F, t0: f64, y0: Vec<f64>, tol: Tolerance) -> Self {
        let mut k1 = vec![0.0; y0.len()];
        rhs(t0, &y0, &mut k1);
        Integrator { rhs, tol, t: t0, y: y0, h: 0.0, k1, steps: 0 }
    }

    fn error_norm(&self, y: &[f64], ynew: &[f64], err: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..y.len() {
            let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(ynew[i].abs());
            acc += (err[i] / sc).powi(2);
        }
        (acc / y.len() as f64).sqrt()
    }

    /// Integrate up to `t_end` (which must not precede the current time).
    pub fn advance(&mut self, t_end: f64) -> Result<()> {
        let n = self.y.len();
        let span = t_end - self.t;
        if span <= 0.0 {
            return Ok(());
        }
        if self.h == 0.0 {
            let ynorm = self.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let fnorm = self.k1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            self.h = if fnorm > 0.0 { (0.01 * (ynorm.max(self.tol.atol)) / fnorm).min(span) } else { span };
            self.h = self.h.max(span * 1e-12);
        }
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut k5 = vec![0.0; n];
        let mut k6 = vec![0.0; n];
        let mut k7 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut err = vec![0.0; n];
        while self.t < t_end {
            let last = self.t + self.h >= t_end;
            let h = if last { t_end - self.t } else { self.h };
            if h.abs() < 1e-14 * self.t.abs().max(span) {
                return Err(Error::Integration { t: self.t, reason: "step size underflow".into() });
            }
            let t = self.t;
            let y = &self.y;
            let k1 = &self.k1;
            for i in 0..n {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            (self.rhs)(t + C2 * h, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            (self.rhs)(t + C3 * h, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            (self.rhs)(t + C4 * h, &tmp, &mut k4);
            for i in 0..n {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            (self.rhs)(t + C5 * h, &tmp, &mut k5);
            for i in 0..n {
                tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            (self.rhs)(t + h, &tmp, &mut k6);
            for i in 0..n {
                ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            (self.rhs)(t + h, &ynew, &mut k7);
            for i in 0..n {
                err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let en = self.error_norm(y, &ynew, &err);
            if !en.is_finite() {
                return Err(Error::Integration { t, reason: "non-finite state".into() });
            }
            if en <= 1.0 {
                self.t = if last { t_end } else { t + h };
                self.y.copy_from_slice(&ynew);
                self.k1.copy_from_slice(&k7);
                self.steps += 1;
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || h >= self.h {
                    self.h = h * fac;
                }
            } else {
                let fac = (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
                self.h = h * fac;
            }
        }
        Ok(())
    }
}

/// One-shot integration from `t0` to `t1`.
pub fn integrate<F>(rhs: F, t0: f64, y0: Vec<f64>, t1: f64, tol: Tolerance) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut it = Integrator::new(rhs, t0, y0, tol);
    it.advance(t1)?;
    Ok(it.y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_long_time() {
        let y = integrate(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            vec![1.0, 0.0],
            50.0,
            Tolerance { rtol: 1e-12, atol: 1e-14 },
        )
        .unwrap();
        assert!((y[0] - 50f64.cos()).abs() < 1e-9);
        assert!((y[1] + 50f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn exponential_growth_relative_accuracy() {
        let y = integrate(|_t, y, dy| dy[0] = 3.0 * y[0], 0.0, vec![1.0], 5.0, Tolerance::default()).unwrap();
        assert!((y[0] / 15f64.exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn resumable_advance_is_consistent() {
        let mut it = Integrator::new(|t, _y, dy| dy[0] = t.cos(), 0.0, vec![0.0], Tolerance::default());
        for k in 1..=20 {
            it.advance(k as f64 * 0.5).unwrap();
            assert!((it.y[0] - (k as f64 * 0.5).sin()).abs() < 1e-9);
        }
    }
}
