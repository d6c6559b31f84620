//! Physical velocity, pressure and density fields from a height function,
//! and residuals of the steady Euler system evaluated on them.
//!
//! The physical domain is sampled on columns `y = -d + (η(x) + d)ζ` with a
//! fixed set of `ζ ∈ [0, 1]`. Derivatives of `ψ` come from the hodograph
//! relations `ψ_y = -1/h_p`, `ψ_x = h_q/(λh_p)`; only the residual check
//! differences the sampled fields.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::branch::Grid;
use crate::error::NumericalError;
use crate::exec::Exec;
use crate::laminar::LaminarFlow;
use crate::numerics::interp::{fornberg, hermite, nodal_derivatives};
use crate::numerics::spectral::{trig_coeffs, trig_eval, TrigCoeffs};
use crate::profiles::PhysicalParameters;

/// Fields at one physical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointState {
    pub psi: f64,
    pub u_rel: f64,
    pub v: f64,
    pub pressure: f64,
    pub rho: f64,
}

/// `η`, `η′`, `η″` at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Surface {
    pub eta: f64,
    pub eta_x: f64,
    pub eta_xx: f64,
}

/// Anything that can produce the physical fields column by column.
pub trait FlowSampler: Sync {
    fn wavelength(&self) -> f64;
    fn depth(&self) -> f64;
    fn bernoulli_q(&self) -> f64;
    fn surface(&self, x: f64) -> Surface;
    /// States at heights `ys` above the point `x` (each in `[-d, η(x)]`).
    fn column(&self, x: f64, ys: &[f64]) -> Result<Vec<PointState>, NumericalError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ColumnSpacing {
    Uniform,
    #[default]
    Chebyshev,
}

impl ColumnSpacing {
    pub fn nodes(self, n: usize) -> Vec<f64> {
        let m = (n - 1) as f64;
        (0..n)
            .map(|k| match self {
                ColumnSpacing::Uniform => k as f64 / m,
                ColumnSpacing::Chebyshev => 0.5 * (1.0 - (PI * k as f64 / m).cos()),
            })
            .collect()
    }
}

/// Sampled fields on one period. Node `(i, k)` is stored at `i * ny + k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowField {
    pub lambda: f64,
    pub d: f64,
    pub q: f64,
    pub x: Vec<f64>,
    pub zeta: Vec<f64>,
    pub surface: Vec<Surface>,
    pub y: Vec<f64>,
    pub psi: Vec<f64>,
    pub u_rel: Vec<f64>,
    pub v: Vec<f64>,
    pub pressure: Vec<f64>,
    pub rho: Vec<f64>,
}

impl FlowField {
    pub fn sample<S: FlowSampler>(
        s: &S,
        nx: usize,
        ny: usize,
        spacing: ColumnSpacing,
        exec: Exec,
    ) -> Result<Self, NumericalError> {
        let lambda = s.wavelength();
        let d = s.depth();
        let zeta = spacing.nodes(ny);
        let x: Vec<f64> = (0..nx).map(|i| lambda * i as f64 / nx as f64).collect();
        let cols: Vec<Result<(Surface, Vec<f64>, Vec<PointState>), NumericalError>> = exec.map(nx, |i| {
            let sf = s.surface(x[i]);
            let ys: Vec<f64> = zeta.iter().map(|z| -d + (sf.eta + d) * z).collect();
            let st = s.column(x[i], &ys)?;
            Ok((sf, ys, st))
        });
        let mut f = FlowField {
            lambda,
            d,
            q: s.bernoulli_q(),
            x,
            zeta,
            surface: Vec::with_capacity(nx),
            y: Vec::with_capacity(nx * ny),
            psi: Vec::with_capacity(nx * ny),
            u_rel: Vec::with_capacity(nx * ny),
            v: Vec::with_capacity(nx * ny),
            pressure: Vec::with_capacity(nx * ny),
            rho: Vec::with_capacity(nx * ny),
        };
        for c in cols {
            let (sf, ys, st) = c?;
            f.surface.push(sf);
            f.y.extend(ys);
            for p in st {
                f.psi.push(p.psi);
                f.u_rel.push(p.u_rel);
                f.v.push(p.v);
                f.pressure.push(p.pressure);
                f.rho.push(p.rho);
            }
        }
        Ok(f)
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.zeta.len()
    }

    /// `ρ(u² + v²)/2 + P + gρy`
    pub fn head(&self, g: f64) -> Vec<f64> {
        (0..self.y.len())
            .map(|n| {
                let r = self.rho[n];
                self.pressure[n] + 0.5 * r * (self.u_rel[n].powi(2) + self.v[n].powi(2)) + g * r * self.y[n]
            })
            .collect()
    }
}

/// Reconstruction from a discrete branch solution.
pub struct HeightSampler<'a> {
    flow: &'a LaminarFlow,
    params: &'a PhysicalParameters,
    lambda: f64,
    /// `p_j`, `j = 0..=N_p`
    p: Vec<f64>,
    rows: Vec<TrigCoeffs>,
    q: f64,
}

impl<'a> HeightSampler<'a> {
    pub fn new(flow: &'a LaminarFlow, grid: &Grid, h: &[f64], lambda: f64) -> Self {
        let p: Vec<f64> = (0..=grid.np).map(|j| grid.p(j)).collect();
        let rows: Vec<TrigCoeffs> = (0..=grid.np).map(|j| trig_coeffs(&grid.full_row(h, j))).collect();
        let mut s = Self { flow, params: &flow.params, lambda, p, rows, q: 0.0 };
        s.q = s.compute_q(grid.nq);
        s
    }

    /// Perturbation column `(h, h_p, h_q, ∂_p h_q)` at nodes, at scaled `q`.
    fn nodal(&self, q: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let (v, vq): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .map(|c| {
                let (a, b, _) = trig_eval(c, q);
                (a, b)
            })
            .unzip();
        let vp = nodal_derivatives(&self.p, &v, 5);
        let vqp = nodal_derivatives(&self.p, &vq, 5);
        (v, vp, vq, vqp)
    }

    /// `(λ² + h_q²)/(λ²h_p²)` averaged over the surface nodes.
    fn compute_q(&self, nq: usize) -> f64 {
        let l2 = self.lambda * self.lambda;
        let hp0 = self.flow.height_slope_at(0.0);
        let top = self.p.len() - 1;
        (0..nq)
            .map(|i| {
                let (_, vp, vq, _) = self.nodal(i as f64 / nq as f64);
                let e = hp0 + vp[top];
                (l2 + vq[top] * vq[top]) / (l2 * e * e)
            })
            .sum::<f64>()
            / nq as f64
    }

    /// `ψ(x, y)` by inverting `h(q, p) = y + d` in `p`.
    pub fn stream(&self, x: f64, y: f64) -> Result<f64, NumericalError> {
        let col = self.nodal(x / self.lambda);
        Ok(-self.invert(&col, y + self.params.d)?.0)
    }

    /// Solve for `p` with total height `target`; returns `(p, h_p, h_q)`.
    fn invert(
        &self,
        col: &(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>),
        target: f64,
    ) -> Result<(f64, f64, f64), NumericalError> {
        let (v, vp, vq, vqp) = col;
        let p = &self.p;
        let n = p.len() - 1;
        let fl = self.flow;
        let tot = |j: usize| fl.height_at(p[j]) + v[j];
        let (lo, hi) = (tot(0), tot(n));
        let tol = 1e-12 * (hi - lo).abs().max(1.0);
        if target < lo - tol || target > hi + tol {
            return Err(NumericalError::OutOfDomain { x: target, lo, hi });
        }
        let target = target.clamp(lo, hi);
        // nodal totals are increasing by ellipticity; bisect on the index
        let (mut a, mut b) = (0usize, n);
        while b - a > 1 {
            let m = (a + b) / 2;
            if tot(m) <= target {
                a = m;
            } else {
                b = m;
            }
        }
        let seg = |t: f64| {
            let (pv, pd) = hermite(p[a], p[b], v[a], v[b], vp[a], vp[b], t);
            (fl.height_at(t) + pv, fl.height_slope_at(t) + pd)
        };
        let (mut l, mut r) = (p[a], p[b]);
        let mut t = l + (r - l) * (target - tot(a)) / (tot(b) - tot(a));
        for _ in 0..100 {
            let (f, fp) = seg(t);
            let res = f - target;
            if res < 0.0 {
                l = t;
            } else {
                r = t;
            }
            let mut next = t - res / fp;
            if !(next > l && next < r) || !fp.is_finite() {
                next = 0.5 * (l + r);
            }
            let done = (next - t).abs() <= 1e-13 || r - l <= 1e-14;
            t = next;
            if done {
                break;
            }
        }
        let hp = seg(t).1;
        let hq = hermite(p[a], p[b], vq[a], vq[b], vqp[a], vqp[b], t).0;
        Ok((t, hp, hq))
    }
}

impl FlowSampler for HeightSampler<'_> {
    fn wavelength(&self) -> f64 {
        self.lambda
    }

    fn depth(&self) -> f64 {
        self.params.d
    }

    fn bernoulli_q(&self) -> f64 {
        self.q
    }

    fn surface(&self, x: f64) -> Surface {
        let (r, rq, rqq) = trig_eval(self.rows.last().unwrap(), x / self.lambda);
        let l = self.lambda;
        Surface { eta: r + self.flow.depth_error(), eta_x: rq / l, eta_xx: rqq / (l * l) }
    }

    fn column(&self, x: f64, ys: &[f64]) -> Result<Vec<PointState>, NumericalError> {
        let col = self.nodal(x / self.lambda);
        let pr = &self.params.profile;
        let (g, d, l) = (self.params.g, self.params.d, self.lambda);
        let b_top = pr.b(0.0);
        ys.iter()
            .map(|&y| {
                let (p, hp, hq) = self.invert(&col, y + d)?;
                if !(hp > 0.0) {
                    return Err(NumericalError::EllipticityLost { min_hp: hp });
                }
                let rho = pr.rho_bar(p);
                let sr = rho.sqrt();
                let u = -1.0 / (hp * sr);
                let v = -hq / (l * hp * sr);
                let pressure = -0.5 * rho * (u * u + v * v) - g * rho * y - (pr.b(p) - b_top) + 0.5 * self.q;
                Ok(PointState { psi: -p, u_rel: u, v, pressure, rho })
            })
            .collect()
    }
}

/// Convenience: sample the reconstructed fields of a branch point.
pub fn reconstruct(
    flow: &LaminarFlow,
    grid: &Grid,
    h: &[f64],
    lambda: f64,
    nx: usize,
    ny: usize,
    spacing: ColumnSpacing,
    exec: Exec,
) -> Result<FlowField, NumericalError> {
    FlowField::sample(&HeightSampler::new(flow, grid, h, lambda), nx, ny, spacing, exec)
}

/// `∞`-norm of each equation of the steady Euler system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerResiduals {
    pub momentum_x: f64,
    pub momentum_y: f64,
    pub density: f64,
    pub incompressibility: f64,
    pub dynamic: f64,
    pub kinematic: f64,
    pub bottom: f64,
    pub mean_zero: f64,
}

impl EulerResiduals {
    /// The interior equations, for convergence studies.
    pub fn interior(&self) -> [f64; 4] {
        [self.momentum_x, self.momentum_y, self.density, self.incompressibility]
    }

    pub fn max_interior(&self) -> f64 {
        self.interior().into_iter().fold(0.0, f64::max)
    }
}

/// Second-order differences on the mapped grid: periodic centred in `x`,
/// three-point (one-sided at the ends) in `ζ`.
struct Diff<'a> {
    f: &'a FlowField,
    wz: Vec<(usize, [f64; 3])>,
    dx: f64,
}

impl<'a> Diff<'a> {
    fn new(f: &'a FlowField) -> Self {
        let ny = f.ny();
        let wz = (0..ny)
            .map(|k| {
                let s = k.clamp(1, ny - 2) - 1;
                let w = fornberg(f.zeta[k], &f.zeta[s..s + 3], 1);
                (s, [w[0], w[1], w[2]])
            })
            .collect();
        Self { f, wz, dx: f.lambda / f.nx() as f64 }
    }

    /// `(∂_x, ∂_y)` of `a` at node `(i, k)`.
    fn grad(&self, a: &[f64], i: usize, k: usize) -> (f64, f64) {
        let f = self.f;
        let (nx, ny) = (f.nx(), f.ny());
        let ip = (i + 1) % nx;
        let im = (i + nx - 1) % nx;
        let ax = (a[ip * ny + k] - a[im * ny + k]) / (2.0 * self.dx);
        let (s, w) = self.wz[k];
        let az = w[0] * a[i * ny + s] + w[1] * a[i * ny + s + 1] + w[2] * a[i * ny + s + 2];
        let sf = f.surface[i];
        let len = sf.eta + f.d;
        (ax - f.zeta[k] * sf.eta_x / len * az, az / len)
    }
}

pub fn euler_residuals(f: &FlowField, g: f64, sigma: f64) -> EulerResiduals {
    let (nx, ny) = (f.nx(), f.ny());
    let df = Diff::new(f);
    let mut r = EulerResiduals {
        momentum_x: 0.0,
        momentum_y: 0.0,
        density: 0.0,
        incompressibility: 0.0,
        dynamic: 0.0,
        kinematic: 0.0,
        bottom: 0.0,
        mean_zero: 0.0,
    };
    for i in 0..nx {
        for k in 0..ny {
            let n = i * ny + k;
            let (u, v, rho) = (f.u_rel[n], f.v[n], f.rho[n]);
            let (ux, uy) = df.grad(&f.u_rel, i, k);
            let (vx, vy) = df.grad(&f.v, i, k);
            let (px, py) = df.grad(&f.pressure, i, k);
            let (rx, ry) = df.grad(&f.rho, i, k);
            r.momentum_x = r.momentum_x.max((rho * (u * ux + v * uy) + px).abs());
            r.momentum_y = r.momentum_y.max((rho * (u * vx + v * vy) + py + g * rho).abs());
            r.density = r.density.max((u * rx + v * ry).abs());
            r.incompressibility = r.incompressibility.max((ux + vy).abs());
        }
        let sf = f.surface[i];
        let top = i * ny + ny - 1;
        let kappa = sf.eta_xx / (1.0 + sf.eta_x * sf.eta_x).powf(1.5);
        r.dynamic = r.dynamic.max((f.pressure[top] + sigma * kappa).abs());
        r.kinematic = r.kinematic.max((f.v[top] - f.u_rel[top] * sf.eta_x).abs());
        r.bottom = r.bottom.max(f.v[i * ny].abs());
    }
    r.mean_zero = (f.surface.iter().map(|s| s.eta).sum::<f64>() / nx as f64).abs();
    r
}

/// Largest variation of `values` along each streamline `ψ = const`,
/// found by interpolating every column at common `ψ` levels.
pub fn streamline_variation(f: &FlowField, values: &[f64], levels: &[f64]) -> f64 {
    let ny = f.ny();
    let mut worst: f64 = 0.0;
    for &lev in levels {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..f.nx() {
            let psi = &f.psi[i * ny..(i + 1) * ny];
            let vals = &values[i * ny..(i + 1) * ny];
            // ψ decreases with y
            let k = (0..ny - 1).find(|&k| psi[k] >= lev && lev >= psi[k + 1]).unwrap_or(ny - 2);
            let s = k.clamp(1, ny - 3) - 1;
            let w = fornberg(lev, &psi[s..s + 4], 0);
            let val: f64 = w.iter().zip(&vals[s..s + 4]).map(|(a, b)| a * b).sum();
            lo = lo.min(val);
            hi = hi.max(val);
        }
        worst = worst.max(hi - lo);
    }
    worst
}

/// Recover `h(q_i, p_j)` (total height) from the sampled `ψ` by cubic
/// Hermite inversion of each column, using `ψ_y = √ρ u_rel`.
pub fn height_from_stream(f: &FlowField, p_levels: &[f64]) -> Vec<Vec<f64>> {
    let ny = f.ny();
    (0..f.nx())
        .map(|i| {
            let sl = i * ny..(i + 1) * ny;
            let psi = &f.psi[sl.clone()];
            let y = &f.y[sl.clone()];
            let dpsi: Vec<f64> = sl.clone().map(|n| f.rho[n].sqrt() * f.u_rel[n]).collect();
            p_levels
                .iter()
                .map(|&p| {
                    let target = -p;
                    let k = (0..ny - 1).find(|&k| psi[k] >= target && target >= psi[k + 1]).unwrap_or(ny - 2);
                    // invert the Hermite interpolant of ψ(y) on [y_k, y_k+1]
                    let (mut a, mut b) = (y[k], y[k + 1]);
                    let mut t = 0.5 * (a + b);
                    for _ in 0..200 {
                        let (v, dv) = hermite(y[k], y[k + 1], psi[k], psi[k + 1], dpsi[k], dpsi[k + 1], t);
                        if v > target {
                            a = t;
                        } else {
                            b = t;
                        }
                        let mut next = t - (v - target) / dv;
                        if !(next >= a && next <= b) {
                            next = 0.5 * (a + b);
                        }
                        if (next - t).abs() <= 1e-15 * (1.0 + t.abs()) {
                            t = next;
                            break;
                        }
                        t = next;
                    }
                    t + f.d
                })
                .collect()
        })
        .collect()
}

/// Observed order `log2(e_coarse / e_fine)` for successive grid doublings.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch::{
        continue_branch, discrete_critical, newton_correct, Constraint, ContinuationOptions, Discretization,
        NewtonOptions, State,
    };
    use crate::dispersion::{dispersion_constant, DispersionOptions};
    use crate::laminar::{shoot_depth, LaminarOptions};
    use crate::profiles::{Bernoulli, Density, StratificationProfile};

    fn strat() -> LaminarFlow {
        let prof = StratificationProfile::new(-5.0, Density::Linear { rho0: 1.0, slope: -0.05 }, Bernoulli::Zero, None)
            .unwrap();
        let par = PhysicalParameters::new(9.81, 1.0, 10.0, prof).unwrap();
        shoot_depth(&par, &LaminarOptions::default()).unwrap().0
    }

    /// Branch point with `⟨h, w*⟩ = s⟨w*, w*⟩` on an `nq × np` grid.
    fn point_at(f: &LaminarFlow, nq: usize, np: usize, s: f64) -> (Discretization, State) {
        let disc = Discretization::new(f, nq, np, Exec::Parallel);
        let r = dispersion_constant(f, &DispersionOptions::default(), Exec::Parallel).unwrap();
        let k = r.kernel();
        let ws = disc.grid.sample(|q, p| k.eval(q, p));
        let crit = discrete_critical(&disc, r.lambda_star, &ws).unwrap();
        let run = continue_branch(
            &disc,
            &crit,
            &ws,
            f.depth_error(),
            &ContinuationOptions { n_steps: 12, ds: 0.02, ..Default::default() },
        );
        let best = run.plus.iter().min_by(|a, b| (a.s - s).abs().total_cmp(&(b.s - s).abs())).unwrap();
        let tangent = State { h: ws.clone(), lambda: 0.0 };
        let pred = State { h: ws.iter().map(|v| s * v).collect(), lambda: best.lambda };
        let start = State { h: best.h.clone(), lambda: best.lambda };
        let (st, _) = newton_correct(
            &disc,
            &start,
            &Constraint::Arclength { tangent: &tangent, pred: &pred },
            &NewtonOptions::default(),
        )
        .unwrap();
        (disc, st)
    }

    fn homogeneous() -> LaminarFlow {
        let par = PhysicalParameters::homogeneous(9.81, 1.0, 0.3, -3.2, 1.0).unwrap();
        shoot_depth(&par, &LaminarOptions::default()).unwrap().0
    }

    #[test]
    fn laminar_constant_density_is_closed_form() {
        let f = homogeneous();
        let grid = Grid::new(16, 16, -3.2);
        let s = HeightSampler::new(&f, &grid, &vec![0.0; grid.unknowns()], 1.3);
        assert!((s.bernoulli_q() - 3.2f64.powi(2)).abs() < 1e-9);
        for (x, y) in [(0.1, -0.9), (0.7, -0.25), (1.2, 0.0), (0.0, -1.0)] {
            let psi = s.stream(x, y).unwrap();
            assert!((psi - (3.2 - 3.2 * (y + 1.0))).abs() < 1e-10, "{x} {y} {psi}");
        }
        let ff = FlowField::sample(&s, 16, 33, ColumnSpacing::Chebyshev, Exec::Parallel).unwrap();
        assert!(ff.u_rel.iter().all(|u| (u + 3.2).abs() < 1e-9));
        let r = euler_residuals(&ff, 9.81, 0.3);
        for v in
            [r.momentum_x, r.momentum_y, r.density, r.incompressibility, r.dynamic, r.kinematic, r.bottom, r.mean_zero]
        {
            assert!(v <= 1e-9, "{r:?}");
        }
        assert!(s.stream(0.1, 0.5).is_err());
    }

    #[test]
    fn laminar_stratified_q() {
        let f = strat();
        let grid = Grid::new(16, 32, -5.0);
        let s = HeightSampler::new(&f, &grid, &vec![0.0; grid.unknowns()], 2.0);
        let hp = f.height_slope_at(0.0);
        assert!((s.bernoulli_q() - 1.0 / (hp * hp)).abs() < 1e-12);
    }

    #[test]
    fn branch_point_fields() {
        let f = strat();
        let (disc, st) = point_at(&f, 32, 64, 5e-3);
        let s = HeightSampler::new(&f, &disc.grid, &st.h, st.lambda);
        let ff = FlowField::sample(&s, 32, 65, ColumnSpacing::Chebyshev, Exec::Parallel).unwrap();
        let ny = ff.ny();
        // (C1) and the boundary values of ψ
        assert!(ff.u_rel.iter().zip(&ff.rho).all(|(u, r)| r.sqrt() * u < 0.0));
        for i in 0..ff.nx() {
            assert!((ff.psi[i * ny] - 5.0).abs() < 1e-12);
            assert!(ff.psi[i * ny + ny - 1].abs() < 1e-12);
        }
        let r = euler_residuals(&ff, 9.81, 10.0);
        assert!(r.kinematic <= 1e-8 && r.bottom <= 1e-8 && r.mean_zero <= 1e-8, "{r:?}");
        // ρ and E are functions of ψ alone
        let levels: Vec<f64> = (1..10).map(|k| 5.0 * k as f64 / 10.0).collect();
        assert!(streamline_variation(&ff, &ff.rho, &levels) < 1e-6);
        assert!(streamline_variation(&ff, &ff.head(9.81), &levels) < 1e-6);
        // round trip back to the height function
        let pl: Vec<f64> = (0..=disc.grid.np).step_by(8).map(|j| disc.grid.p(j)).collect();
        let back = height_from_stream(&ff, &pl);
        let mut worst: f64 = 0.0;
        for (i, col) in back.iter().enumerate() {
            for (k, &hb) in col.iter().enumerate() {
                let j = 8 * k;
                let h = f.height_at(disc.grid.p(j)) + disc.grid.at(&st.h, i as isize, j);
                worst = worst.max((hb - h).abs());
            }
        }
        assert!(worst < 1e-5, "{worst}");
        // detector: 1% noise on P
        let mut bad = ff.clone();
        for (n, p) in bad.pressure.iter_mut().enumerate() {
            *p *= 1.0 + 0.01 * ((n as f64 * 0.618_033_988_75).fract() - 0.5);
        }
        assert!(euler_residuals(&bad, 9.81, 10.0).momentum_x > 1e-3);
    }

    #[test]
    fn orders_from_errors() {
        let o = observed_orders(&[1.0, 0.25, 0.0625]);
        assert!(o.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }
}
