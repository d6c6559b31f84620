//! Fourier operations on 1-periodic uniform grids.

use rustfft::{num_complex::Complex64, FftPlanner};

/// Signed integer wavenumber of FFT bin `k` on an `n`-point grid.
#[inline]
pub fn wavenumber(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Apply a real, even Fourier multiplier `m(κ)` (κ the integer wavenumber)
/// to a real periodic row.
pub fn apply_multiplier<M: Fn(f64) -> f64>(row: &[f64], m: M) -> Vec<f64> {
    let n = row.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= m(wavenumber(k, n));
    }
    inv.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Spectral derivative of order `order` of a real 1-periodic row. For odd
/// orders the Nyquist mode is dropped (its derivative is not real).
pub fn derivative(row: &[f64], order: u32) -> Vec<f64> {
    let n = row.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let tau = 2.0 * std::f64::consts::PI;
    for (k, c) in buf.iter_mut().enumerate() {
        let kk = wavenumber(k, n);
        if order % 2 == 1 && n % 2 == 0 && k == n / 2 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let ik = Complex64::new(0.0, tau * kk);
        *c *= ik.powu(order);
    }
    inv.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Inverse of `(1 - ∂_q²)` on a periodic row: multiplier `1/(1+(2πκ)²)`.
pub fn inverse_helmholtz(row: &[f64]) -> Vec<f64> {
    let tau = 2.0 * std::f64::consts::PI;
    apply_multiplier(row, |k| 1.0 / (1.0 + (tau * k).powi(2)))
}

/// Dense matrix (row-major, `n*n`) of a linear periodic operator obtained by
/// applying it to unit vectors.
pub fn operator_matrix<F: Fn(&[f64]) -> Vec<f64>>(n: usize, op: F) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = op(&e);
        for i in 0..n {
            m[i * n + j] = col[i];
        }
        e[j] = 0.0;
    }
    m
}

/// Evaluate the trigonometric interpolant of an even-length real row (and
/// its first two derivatives) at an arbitrary `q`. The Nyquist mode uses the
/// cosine convention so the interpolant is real.
pub fn trig_eval(coef: &TrigCoeffs, q: f64) -> (f64, f64, f64) {
    let tau = 2.0 * std::f64::consts::PI;
    let mut v = coef.a0;
    let (mut d1, mut d2) = (0.0, 0.0);
    for (k, (a, b)) in coef.a.iter().zip(&coef.b).enumerate() {
        let w = tau * (k + 1) as f64;
        let (s, c) = (w * q).sin_cos();
        v += a * c + b * s;
        d1 += w * (-a * s + b * c);
        d2 -= w * w * (a * c + b * s);
    }
    (v, d1, d2)
}

/// Real Fourier coefficients: `f(q) = a0 + Σ a_k cos(2πkq) + b_k sin(2πkq)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigCoeffs {
    pub a0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

pub fn trig_coeffs(row: &[f64]) -> TrigCoeffs {
    let n = row.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let nf = n as f64;
    let a0 = buf[0].re / nf;
    let kmax = n / 2;
    let mut a = Vec::with_capacity(kmax);
    let mut b = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        if n % 2 == 0 && k == kmax {
            a.push(buf[k].re / nf);
            b.push(0.0);
        } else {
            a.push(2.0 * buf[k].re / nf);
            b.push(-2.0 * buf[k].im / nf);
        }
    }
    TrigCoeffs { a0, a, b }
}
