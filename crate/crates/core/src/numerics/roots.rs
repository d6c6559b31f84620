//! Scalar bracketing.

/// Plain bisection on a sign-changing bracket. Stops when the bracket width
/// drops below `xtol` (absolute) or after 200 halvings.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// The positive root of `e^x - x = 5`.
pub fn x_star() -> f64 {
    // bracket [1,3]: f(1) < 0 < f(3); bisection to the last bit, then one
    // Newton polish.
    let f = |x: f64| x.exp() - x - 5.0;
    let x = bisect(f, 1.0, 3.0, 1e-15);
    x - f(x) / (x.exp() - 1.0)
}
