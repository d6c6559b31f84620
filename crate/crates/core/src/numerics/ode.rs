//! Dormand–Prince 5(4) with Hairer's continuous extension.
//!
//! The integrator is specialised to small fixed-size systems (`N` components)
//! because every system solved here is a 2x2 linear ODE. States may be
//! renormalised between steps through [`Dopri5::integrate_with`], which is how
//! the Wronskian code survives exponential growth at large spectral parameter.

use crate::error::NumericalError;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// error estimate: 5th minus 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Tolerances and step controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { atol: 1e-11, rtol: 1e-10, h_init: None, h_max: f64::INFINITY, max_steps: 200_000 }
    }
}

/// One accepted step, enough to evaluate the continuous extension.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rc: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Evaluate the interpolant at `t` (assumed inside the step).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut y = [0.0; N];
        for i in 0..N {
            let r = &self.rc;
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

/// Solution of one integration: accepted step endpoints, dense segments and
/// accumulated log-scale (nonzero only when renormalisation happened).
#[derive(Debug, Clone)]
pub struct OdeSolution<const N: usize> {
    pub steps: Vec<DenseStep<N>>,
    pub t_end: f64,
    pub y_end: [f64; N],
    /// Natural log of the factor the stored values must be multiplied by,
    /// per step (cumulative).
    pub log_scale: Vec<f64>,
    /// Log-scale of `y_end`.
    pub log_scale_end: f64,
    pub n_rejected: usize,
}

impl<const N: usize> OdeSolution<N> {
    /// Step mesh (including both endpoints) for replaying with fixed steps.
    pub fn mesh(&self) -> Vec<f64> {
        let mut m = Vec::with_capacity(self.steps.len() + 1);
        if let Some(s) = self.steps.first() {
            m.push(s.t0);
        }
        for s in &self.steps {
            m.push(s.t1());
        }
        m
    }

    /// Evaluate at `t`, returning the value in the scale of the final state
    /// together with the log of the factor relating it to the true solution.
    pub fn eval_scaled(&self, t: f64) -> ([f64; N], f64) {
        let idx = self.locate(t);
        let y = self.steps[idx].eval(t);
        (y, self.log_scale[idx])
    }

    /// Evaluate in true (unrenormalised) scale. Overflows if the trajectory
    /// grew beyond f64 range.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let (mut y, ls) = self.eval_scaled(t);
        let f = ls.exp();
        for v in y.iter_mut() {
            *v *= f;
        }
        y
    }

    fn locate(&self, t: f64) -> usize {
        let fwd = self.steps[0].h > 0.0;
        // binary search on step start
        let n = self.steps.len();
        let (mut lo, mut hi) = (0usize, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let past = if fwd { t >= self.steps[mid].t0 } else { t <= self.steps[mid].t0 };
            if past {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Optional renormalisation hook: called after each accepted step with the
/// current state; returns a positive factor to multiply the state by (1.0 for
/// none).
pub type Renorm<'a, const N: usize> = &'a dyn Fn(&[f64; N]) -> f64;

pub struct Dopri5;

impl Dopri5 {
    /// Adaptive integration from `t0` to `t1` (either direction).
    pub fn integrate<const N: usize, F>(
        f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        opts: &OdeOptions,
    ) -> Result<OdeSolution<N>, NumericalError>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        Self::integrate_with(f, t0, y0, t1, opts, None)
    }

    pub fn integrate_with<const N: usize, F>(
        f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        opts: &OdeOptions,
        renorm: Option<Renorm<'_, N>>,
    ) -> Result<OdeSolution<N>, NumericalError>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let span = t1 - t0;
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = match opts.h_init {
            Some(h) => h.abs(),
            None => initial_step(&f, t, &y, &k1, opts, span.abs()),
        }
        .min(opts.h_max)
        .min(span.abs());
        let mut steps = Vec::new();
        let mut log_scale = Vec::new();
        let mut cum = 0.0f64;
        let mut n_rej = 0usize;
        let mut fac_old = 1e-4f64;
        let mut last_rejected = false;

        while (t1 - t) * dir > 0.0 {
            if steps.len() + n_rej > opts.max_steps {
                return Err(NumericalError::StepLimit { at: t });
            }
            if h < 1e-14 * (t.abs() + span.abs()) {
                return Err(NumericalError::StepUnderflow { at: t });
            }
            let hs = if (t + dir * h - t1) * dir > 0.0 { (t1 - t).abs() } else { h };
            let step = rk_step(&f, t, &y, &k1, dir * hs);
            let err = error_norm(&y, &step.y_new, &step.err, opts);
            if err <= 1.0 {
                // Lund stabilisation as in Hairer's dopri5
                let fac11 = err.powf(0.2 - 0.04 * 0.75);
                let mut fac = fac11 / fac_old.powf(0.04);
                fac = (fac / 0.9).clamp(0.1, 5.0);
                fac_old = err.max(1e-4);
                let mut h_new = hs / fac;
                if last_rejected {
                    h_new = h_new.min(hs);
                }
                let ds = step.dense;
                t = if (t + dir * hs - t1) * dir >= 0.0 { t1 } else { t + dir * hs };
                y = step.y_new;
                k1 = step.k7;
                log_scale.push(cum);
                if let Some(r) = renorm {
                    let s = r(&y);
                    if s != 1.0 {
                        for v in y.iter_mut() {
                            *v *= s;
                        }
                        for v in k1.iter_mut() {
                            *v *= s;
                        }
                        // stored segments stay in their own scale; later ones
                        // pick up the new cumulative factor
                        cum -= s.ln();
                    }
                }
                steps.push(ds);
                h = h_new.min(opts.h_max);
                last_rejected = false;
            } else {
                n_rej += 1;
                let fac11 = err.powf(0.2 - 0.04 * 0.75);
                h = hs / (fac11 / 0.9).min(10.0);
                last_rejected = true;
            }
        }
        Ok(OdeSolution { steps, t_end: t, y_end: y, log_scale, log_scale_end: cum, n_rejected: n_rej })
    }

    /// Fixed-step replay over a prescribed mesh. Used for finite differences
    /// in parameters, where adaptive step selection would add noise.
    pub fn integrate_mesh<const N: usize, F>(
        f: F,
        mesh: &[f64],
        y0: [f64; N],
        renorm: Option<Renorm<'_, N>>,
    ) -> OdeSolution<N>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let mut y = y0;
        let mut t = mesh[0];
        let mut k1 = f(t, &y);
        let mut steps = Vec::with_capacity(mesh.len());
        let mut log_scale = Vec::with_capacity(mesh.len());
        let mut cum = 0.0f64;
        for &tn in &mesh[1..] {
            let st = rk_step(&f, t, &y, &k1, tn - t);
            t = tn;
            y = st.y_new;
            k1 = st.k7;
            log_scale.push(cum);
            steps.push(st.dense);
            if let Some(r) = renorm {
                let s = r(&y);
                if s != 1.0 {
                    for v in y.iter_mut() {
                        *v *= s;
                    }
                    for v in k1.iter_mut() {
                        *v *= s;
                    }
                    cum -= s.ln();
                }
            }
        }
        OdeSolution { steps, t_end: t, y_end: y, log_scale, log_scale_end: cum, n_rejected: 0 }
    }
}

struct StepOut<const N: usize> {
    y_new: [f64; N],
    k7: [f64; N],
    err: [f64; N],
    dense: DenseStep<N>,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn rk_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> StepOut<N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y_new);
    let mut err = [0.0; N];
    let mut rc = [[0.0; N]; 5];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let ydiff = y_new[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        rc[0][i] = y[i];
        rc[1][i] = ydiff;
        rc[2][i] = bspl;
        rc[3][i] = ydiff - h * k7[i] - bspl;
        rc[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    StepOut { y_new, k7, err, dense: DenseStep { t0: t, h, rc } }
}

fn error_norm<const N: usize>(y: &[f64; N], y_new: &[f64; N], err: &[f64; N], o: &OdeOptions) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * y[i].abs().max(y_new[i].abs());
        s += (err[i] / sc).powi(2);
    }
    (s / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], k1: &[f64; N], o: &OdeOptions, span: f64) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (k1[i] / sc).powi(2);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let dir = 1.0; // probe direction does not matter for the magnitude estimate
    let y1 = axpy(y, dir * h0, &[(1.0, k1)]);
    let k2 = f(t + dir * h0, &y1);
    let mut d2 = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * y[i].abs();
        d2 += ((k2[i] - k1[i]) / sc).powi(2);
    }
    d2 = (d2 / N as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn harmonic_oscillator_end_value() {
        let sol = Dopri5::integrate(harmonic, 0.0, [0.0, 1.0], 10.0, &OdeOptions::default()).unwrap();
        assert!((sol.y_end[0] - 10f64.sin()).abs() < 1e-9);
        assert!((sol.y_end[1] - 10f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn backward_integration() {
        let sol = Dopri5::integrate(harmonic, 3.0, [3f64.sin(), 3f64.cos()], -1.0, &OdeOptions::default()).unwrap();
        assert!((sol.y_end[0] - (-1f64).sin()).abs() < 1e-9);
        let mid = sol.eval(1.234);
        assert!((mid[0] - 1.234f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn dense_output_is_fourth_order() {
        // fixed meshes with halving spacing; the max interpolation error at
        // off-node points must drop by about 2^5 (local order 5) per halving.
        let errs: Vec<f64> = [20usize, 40, 80]
            .iter()
            .map(|&n| {
                let mesh: Vec<f64> = (0..=n).map(|i| 4.0 * i as f64 / n as f64).collect();
                let sol = Dopri5::integrate_mesh(harmonic, &mesh, [0.0, 1.0], None);
                let mut e: f64 = 0.0;
                for k in 0..997 {
                    let t = 4.0 * (k as f64 + 0.37) / 997.5;
                    let y = sol.eval(t);
                    // subtract the nodal error so only interpolation error is left
                    e = e.max((y[0] - t.sin()).abs());
                }
                e
            })
            .collect();
        let r1 = errs[0] / errs[1];
        let r2 = errs[1] / errs[2];
        assert!(r1 > 14.0 && r2 > 14.0, "dense output ratios {r1} {r2} ({errs:?})");
    }

    #[test]
    fn dense_reproduces_step_endpoints() {
        let sol = Dopri5::integrate(harmonic, 0.0, [0.0, 1.0], 2.0, &OdeOptions::default()).unwrap();
        for s in &sol.steps {
            let a = s.eval(s.t0);
            let b = s.eval(s.t1());
            let ea = [s.t0.sin(), s.t0.cos()];
            let eb = [s.t1().sin(), s.t1().cos()];
            assert!((a[0] - ea[0]).abs() < 1e-9 && (b[1] - eb[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn renormalisation_tracks_scale() {
        // y' = 50 y from 0 to 20 grows like e^1000, beyond f64
        let renorm = |y: &[f64; 1]| if y[0].abs() > 1e100 { 1.0 / y[0].abs() } else { 1.0 };
        let sol = Dopri5::integrate_with(
            |_t, y: &[f64; 1]| [50.0 * y[0]],
            0.0,
            [1.0],
            20.0,
            &OdeOptions::default(),
            Some(&renorm),
        )
        .unwrap();
        let end = sol.y_end[0].ln() + sol.log_scale_end;
        assert!((end - 1000.0).abs() < 1e-6, "{end}");
        let (y, ls) = sol.eval_scaled(13.0);
        assert!((y[0].ln() + ls - 650.0).abs() < 1e-6);
    }

    #[test]
    fn mesh_replay_matches_adaptive() {
        let o = OdeOptions::default();
        let sol = Dopri5::integrate(harmonic, 0.0, [0.0, 1.0], 5.0, &o).unwrap();
        let rep = Dopri5::integrate_mesh(harmonic, &sol.mesh(), [0.0, 1.0], None);
        assert!((sol.y_end[0] - rep.y_end[0]).abs() < 1e-14 && (sol.y_end[1] - rep.y_end[1]).abs() < 1e-14);
    }
}
