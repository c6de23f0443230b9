//! Nelder–Mead simplex search inside a box.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Initial edge length along each coordinate.
    pub step: f64,
    /// Stop when the spread of function values falls below this.
    pub f_tol: f64,
    /// Stop when every vertex lies within this distance of the best one.
    pub x_tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct SimplexResult<const N: usize> {
    pub x: [f64; N],
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn clamp<const N: usize>(mut x: [f64; N], lo: &[f64; N], hi: &[f64; N]) -> [f64; N] {
    for i in 0..N {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
    x
}

fn affine<const N: usize>(a: &[f64; N], b: &[f64; N], t: f64) -> [f64; N] {
    // a + t (b − a)
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = a[i] + t * (b[i] - a[i]);
    }
    out
}

/// Minimizes `f` from `x0`; candidate points are clamped to `[lo, hi]`.
/// Non-finite values count as +∞.
pub fn minimize<const N: usize, F>(
    mut f: F,
    x0: [f64; N],
    lo: [f64; N],
    hi: [f64; N],
    opts: &SimplexOptions,
) -> SimplexResult<N>
where
    F: FnMut(&[f64; N]) -> f64,
{
    let mut evals = 0usize;
    let mut eval = |x: &[f64; N]| {
        evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let x0 = clamp(x0, &lo, &hi);
    let mut pts: Vec<[f64; N]> = vec![x0];
    for i in 0..N {
        let mut x = x0;
        // step inward when the start sits on the upper bound
        x[i] = if x0[i] + opts.step <= hi[i] { x0[i] + opts.step } else { x0[i] - opts.step };
        pts.push(clamp(x, &lo, &hi));
    }
    let mut vals: Vec<f64> = pts.iter().map(&mut eval).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut order: Vec<usize> = (0..=N).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&k| pts[k]).collect();
        vals = order.iter().map(|&k| vals[k]).collect();

        let spread_f = vals[N] - vals[0];
        let spread_x =
            pts[1..].iter().flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
        if spread_f.abs() <= opts.f_tol && spread_x <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for p in &pts[..N] {
            for i in 0..N {
                centroid[i] += p[i] / N as f64;
            }
        }
        let worst = pts[N];
        let xr = clamp(affine(&centroid, &worst, -1.0), &lo, &hi);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = clamp(affine(&centroid, &worst, -2.0), &lo, &hi);
            let fe = eval(&xe);
            if fe < fr {
                pts[N] = xe;
                vals[N] = fe;
            } else {
                pts[N] = xr;
                vals[N] = fr;
            }
            continue;
        }
        if fr < vals[N - 1] {
            pts[N] = xr;
            vals[N] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[N] {
            let x = clamp(affine(&centroid, &worst, -0.5), &lo, &hi);
            let v = eval(&x);
            (x, v)
        } else {
            let x = affine(&centroid, &worst, 0.5);
            let v = eval(&x);
            (x, v)
        };
        if fc < vals[N].min(fr) {
            pts[N] = xc;
            vals[N] = fc;
            continue;
        }
        let best = pts[0];
        for k in 1..=N {
            pts[k] = affine(&best, &pts[k], 0.5);
            vals[k] = eval(&pts[k]);
        }
    }
    let (k, _) = vals.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    SimplexResult { x: pts[k], f: vals[k], iterations, evaluations: evals, converged }
}
