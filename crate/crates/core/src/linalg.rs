//! Small dense linear-algebra kernels: Padé matrix exponential, eigenvector
//! recovery for real non-symmetric matrices, Van Loan noise integrals and a
//! Kronecker-form Lyapunov solver. Matrices here are at most 12×12.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{domain, Result};

pub type C64 = Complex<f64>;

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a diagonal [6/6] Padé
/// approximant; the scaled argument has 1-norm at most 1/2.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    let norm = norm1(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / 2f64.powi(squarings);

    // Padé [6/6] coefficients c_k = (12-k)! 6! / (12! k! (6-k)!)
    const C: [f64; 7] = [1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0];
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let even = &id * C[0] + &a2 * C[2] + &a4 * C[4] + &a6 * C[6];
    let odd = &scaled * (&id * C[1] + &a2 * C[3] + &a4 * C[5]);
    let num = &even + &odd;
    let den = &even - &odd;
    let mut r = den.lu().solve(&num).expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Eigendecomposition `A = V diag(λ) V⁻¹` of a real square matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    pub vectors: DMatrix<C64>,
    pub inverse: DMatrix<C64>,
    /// `‖V‖₂ ‖V⁻¹‖₂`; infinite when V is numerically singular.
    pub condition: f64,
}

impl Eigen {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let values: Vec<C64> = a.clone().complex_eigenvalues().iter().copied().collect();
        let ac = a.map(|x| C64::new(x, 0.0));
        let scale = norm1(a).max(1.0);
        let mut vectors = DMatrix::<C64>::zeros(n, n);
        for (k, &lam) in values.iter().enumerate() {
            let mut shifted = ac.clone();
            for i in 0..n {
                shifted[(i, i)] -= lam;
            }
            let v = null_vector(&shifted, scale);
            vectors.set_column(k, &v);
        }
        let svd = vectors.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        let inverse =
            vectors.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(n, n, C64::new(f64::NAN, f64::NAN)));
        Eigen { values, vectors, inverse, condition: if condition.is_finite() { condition } else { f64::INFINITY } }
    }

    /// `V diag(exp(λ t)) V⁻¹`, real part.
    pub fn exp(&self, t: f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let f = (self.values[k] * t).exp();
            for i in 0..n {
                scaled[(i, k)] *= f;
            }
        }
        (scaled * &self.inverse).map(|z| z.re)
    }
}

/// Unit vector spanning the (numerical) null space of a nearly singular
/// complex matrix, refined by two steps of inverse iteration.
fn null_vector(m: &DMatrix<C64>, scale: f64) -> DVector<C64> {
    let n = m.nrows();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let (kmin, _) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let mut v = DVector::<C64>::from_iterator(n, vt.row(kmin).iter().map(|z| z.conj()));
    // Inverse iteration with a tiny shift sharpens the vector when the
    // eigenvalue carries rounding error from the Schur form.
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] += C64::new(scale * 1e-13, 0.0);
    }
    let lu = shifted.lu();
    for _ in 0..2 {
        match lu.solve(&v) {
            Some(w) if w.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                let norm = w.norm();
                if norm > 0.0 {
                    v = w / C64::new(norm, 0.0);
                }
            }
            _ => break,
        }
    }
    // fix the phase: largest component real and positive
    let (imax, _) =
        v.iter().enumerate().fold((0, 0.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
    let phase = v[imax] / C64::new(v[imax].norm(), 0.0);
    v / phase
}

/// `∫₀ʰ e^{As} D e^{Aᵀs} ds` by the Van Loan block exponential. `D` need
/// not be symmetric.
pub fn van_loan(a: &DMatrix<f64>, d: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut block = DMatrix::<f64>::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-a * h));
    block.view_mut((0, n), (n, n)).copy_from(&(d * h));
    block.view_mut((n, n), (n, n)).copy_from(&(a.transpose() * h));
    let e = expm(&block);
    let f12 = e.view((0, n), (n, n)).clone_owned();
    let f22 = e.view((n, n), (n, n)).clone_owned();
    f22.transpose() * f12
}

/// Exact discretization of `ẏ = A y + noise` over `[0, t]`: the propagator
/// `e^{At}` and `∫₀ᵗ e^{As} D_k e^{Aᵀs} ds` for each supplied `D_k`.
///
/// The step `h = t/2^k` is chosen with `‖A‖₁ h ≤ 1/2`; the interval is then
/// covered by `k` doublings `Q ← Φ Q Φᵀ + Q`, `Φ ← Φ²`.
pub fn discretize(a: &DMatrix<f64>, ds: &[DMatrix<f64>], t: f64) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    let n = a.nrows();
    if t == 0.0 {
        return (DMatrix::identity(n, n), ds.iter().map(|_| DMatrix::zeros(n, n)).collect());
    }
    let norm = norm1(a) * t;
    let doublings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let h = t / 2f64.powi(doublings);
    let mut phi = expm(&(a * h));
    let mut qs: Vec<DMatrix<f64>> = ds.iter().map(|d| van_loan(a, d, h)).collect();
    for _ in 0..doublings {
        for q in qs.iter_mut() {
            *q = &phi * &*q * phi.transpose() + &*q;
        }
        phi = &phi * &phi;
    }
    (phi, qs)
}

/// Solve `A X + X Aᵀ + N = 0` through the Kronecker form
/// `(I ⊗ A + A ⊗ I) vec X = −vec N`.
pub fn lyapunov(a: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = a.nrows();
    let id = DMatrix::<f64>::identity(dim, dim);
    let op = id.kronecker(a) + a.kronecker(&id);
    let rhs = DVector::from_iterator(dim * dim, n.iter().map(|x| -x));
    let sol = op.lu().solve(&rhs).ok_or_else(|| domain("singular Lyapunov operator"))?;
    let x = DMatrix::from_column_slice(dim, dim, sol.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}
