//! Quadrature on uniform parameter grids.

/// Cumulative integral of nodal samples `f` on a uniform grid with spacing
/// `h`, using the 4-point Lagrange rule per cell (exact for cubics).
/// Returns `F` with `F[0] = 0` and `F[k] = ∫_{x_0}^{x_k} f`.
pub fn cumulative4(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for k in 1..n {
            out[k] = out[k - 1] + 0.5 * h * (f[k - 1] + f[k]);
        }
        return out;
    }
    let c = h / 24.0;
    for k in 0..n - 1 {
        let cell = if k == 0 {
            c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if k == n - 2 {
            c * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1])
        } else {
            c * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2])
        };
        out[k + 1] = out[k] + cell;
    }
    out
}

/// Composite trapezoid weights for arbitrary sorted nodes.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let d = 0.5 * (x[k + 1] - x[k]);
        w[k] += d;
        w[k + 1] += d;
    }
    w
}

/// Gauss–Legendre nodes and weights on [-1,1] (Golub–Welsch-free Newton
/// iteration on the Legendre recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Adaptive Gauss–Kronrod-free quadrature: recursive bisection comparing a
/// 10-point Gauss rule against its two halves. Intended for smooth integrands
/// after any endpoint singularity has been mapped away.
pub fn adaptive_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (x, w) = gauss_legendre(10);
    let rule = |a: f64, b: f64| {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        x.iter().zip(&w).map(|(xi, wi)| wi * f(m + r * xi)).sum::<f64>() * r
    };
    fn rec<R: Fn(f64, f64) -> f64>(rule: &R, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (rule(a, m), rule(m, b));
        if depth == 0 || (l + r - whole).abs() <= tol {
            l + r
        } else {
            rec(rule, a, m, l, 0.5 * tol, depth - 1) + rec(rule, m, b, r, 0.5 * tol, depth - 1)
        }
    }
    rec(&rule, a, b, rule(a, b), tol, 40)
}
