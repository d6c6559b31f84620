//! Piecewise cubic interpolation and finite-difference weights.

/// Locate `k` with `x[k] <= t <= x[k+1]`, clamped to the table.
pub fn locate(x: &[f64], t: f64) -> usize {
    let n = x.len();
    if t <= x[0] {
        return 0;
    }
    if t >= x[n - 1] {
        return n - 2;
    }
    match x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
        Ok(k) => k.min(n - 2),
        Err(k) => k - 1,
    }
}

/// Value and first derivative of the cubic Hermite segment through
/// `(x0,y0,d0)` and `(x1,y1,d1)` at `t`.
#[inline]
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> (f64, f64) {
    let h = x1 - x0;
    let s = (t - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * s2 - 6.0 * s) / h;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s2 + 6.0 * s) / h;
    let dh11 = 3.0 * s2 - 2.0 * s;
    let dv = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (v, dv)
}

/// Second derivative of the same Hermite segment.
#[inline]
pub fn hermite_dd(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = x1 - x0;
    let s = (t - x0) / h;
    let a = (12.0 * s - 6.0) / (h * h);
    let b = (6.0 * s - 4.0) / h;
    let c = (-12.0 * s + 6.0) / (h * h);
    let d = (6.0 * s - 2.0) / h;
    a * y0 + b * d0 + c * y1 + d * d1
}

/// Cubic Hermite interpolant with given nodal slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermite {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d: Vec<f64>,
}

impl Hermite {
    pub fn new(x: Vec<f64>, y: Vec<f64>, d: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len() && y.len() == d.len());
        Self { x, y, d }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_d(t).0
    }

    pub fn eval_d(&self, t: f64) -> (f64, f64) {
        let k = locate(&self.x, t);
        hermite(self.x[k], self.x[k + 1], self.y[k], self.y[k + 1], self.d[k], self.d[k + 1], t)
    }
}

/// Monotone piecewise cubic (Fritsch–Carlson slopes, as in PCHIP).
pub fn pchip(x: Vec<f64>, y: Vec<f64>) -> Hermite {
    let n = x.len();
    assert!(n >= 2);
    let h: Vec<f64> = (0..n - 1).map(|k| x[k + 1] - x[k]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = del[0];
        d[1] = del[0];
        return Hermite::new(x, y, d);
    }
    for k in 1..n - 1 {
        if del[k - 1] * del[k] <= 0.0 {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut v = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if v * d0 <= 0.0 {
            v = 0.0;
        } else if d0 * d1 <= 0.0 && v.abs() > 3.0 * d0.abs() {
            v = 3.0 * d0;
        }
        v
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    Hermite::new(x, y, d)
}

/// Fornberg's algorithm: weights for the `m`-th derivative at `z` from
/// values at nodes `x`.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Nodal first derivatives of samples on sorted nodes using `width`-point
/// one-sided/centred stencils (width 5 gives 4th order).
pub fn nodal_derivatives(x: &[f64], y: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let w = width.min(n);
    (0..n)
        .map(|k| {
            let start = k.saturating_sub(w / 2).min(n - w);
            let nodes = &x[start..start + w];
            let wts = fornberg(x[k], nodes, 1);
            wts.iter().zip(&y[start..start + w]).map(|(a, b)| a * b).sum()
        })
        .collect()
}
