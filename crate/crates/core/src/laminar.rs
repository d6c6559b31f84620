//! Laminar background flows `H(p)` with `H(p0) = 0`, `H(0) = d`.
//!
//! The fixed point is iterated in the integrated form
//! `radicand(p) = μ - 2[gρ̄(p)(H(p)-d) + g d ρ̄(p0) - g∫_{p0}^p ρ̄H'] - 2B(p)`,
//! which needs neither `ρ̄′` nor `β`. All integrals share one 4th-order
//! cumulative rule in the grid parameter `t`, so for constant density the
//! `H` terms cancel exactly and the closed form is reproduced to rounding.

use serde::Serialize;

use crate::error::{NumericalError, ProfileError, SolverError};
use crate::numerics::interp::{hermite, locate};
use crate::numerics::quad::cumulative4;
use crate::profiles::{check_res2, mu_star, PhysicalParameters};

/// Node placement on `[p0, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Grading {
    Uniform,
    /// `p = p0 + |p0| t²`, clustering nodes at the bed where `B ~ (p-p0)^{1/2}`.
    Quadratic,
}

/// Grid `p_k = p(t_k)` with `t_k = k/n` uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PGrid {
    pub p0: f64,
    pub n: usize,
    pub grading: Grading,
}

impl PGrid {
    pub fn new(p0: f64, n: usize, grading: Grading) -> Self {
        assert!(n >= 4, "need at least 4 cells");
        Self { p0, n, grading }
    }

    #[inline]
    pub fn p_of(&self, t: f64) -> f64 {
        match self.grading {
            Grading::Uniform => self.p0 * (1.0 - t),
            Grading::Quadratic => self.p0 * (1.0 - t * t),
        }
    }

    #[inline]
    pub fn dp_dt(&self, t: f64) -> f64 {
        match self.grading {
            Grading::Uniform => -self.p0,
            Grading::Quadratic => -2.0 * self.p0 * t,
        }
    }

    #[inline]
    pub fn t_of(&self, p: f64) -> f64 {
        let s = ((p - self.p0) / -self.p0).clamp(0.0, 1.0);
        match self.grading {
            Grading::Uniform => s,
            Grading::Quadratic => s.sqrt(),
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|k| k as f64 / self.n as f64).collect()
    }

    pub fn nodes(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.t_nodes().iter().map(|&t| self.p_of(t)).collect();
        v[0] = self.p0;
        v[self.n] = 0.0;
        v
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { n: self.n * factor, ..*self }
    }
}

/// Solver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaminarOptions {
    pub n_p: usize,
    pub picard_tol: f64,
    pub shoot_tol: f64,
    pub max_picard: usize,
}

impl Default for LaminarOptions {
    fn default() -> Self {
        Self { n_p: 512, picard_tol: 1e-12, shoot_tol: 1e-10, max_picard: 500 }
    }
}

/// A converged fixed point (with or without the depth condition).
#[derive(Debug, Clone, PartialEq)]
pub struct LaminarFlow {
    pub params: PhysicalParameters,
    pub grid: PGrid,
    pub p: Vec<f64>,
    /// `H`
    pub h: Vec<f64>,
    /// `H′`
    pub hp: Vec<f64>,
    /// `a = 1/H′`
    pub a: Vec<f64>,
    pub mu: f64,
    /// `A(p) = ∫ gρ̄/a³`
    pub a_int: Vec<f64>,
    /// `∫ ρ̄ H′`, kept for evaluating the radicand between nodes
    pub rho_h_int: Vec<f64>,
    pub picard_iterations: usize,
    pub used_marching: bool,
}

/// Shooting diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootReport {
    pub mu_hi: f64,
    /// Every `(μ_low, μ_high)` bracket found by the geometric scan.
    pub brackets: Vec<(f64, f64)>,
    pub selected: (f64, f64),
    pub h0_error: f64,
    pub bisections: usize,
}

impl LaminarFlow {
    pub fn d(&self) -> f64 {
        self.params.d
    }

    /// `H(0) - d`.
    pub fn depth_error(&self) -> f64 {
        self.h[self.grid.n] - self.params.d
    }

    pub fn a_int_top(&self) -> f64 {
        self.a_int[self.grid.n]
    }

    fn seg(&self, p: f64) -> (usize, f64, f64, f64, f64) {
        let t = self.grid.t_of(p);
        let n = self.grid.n;
        let k = ((t * n as f64).floor() as usize).min(n - 1);
        let dt = self.grid.dt();
        (k, k as f64 * dt, (k + 1) as f64 * dt, t, dt)
    }

    /// `H(p)` from the Hermite interpolant in `t`.
    pub fn height_at(&self, p: f64) -> f64 {
        let (k, t0, t1, t, _) = self.seg(p);
        let g = &self.grid;
        hermite(t0, t1, self.h[k], self.h[k + 1], self.hp[k] * g.dp_dt(t0), self.hp[k + 1] * g.dp_dt(t1), t).0
    }

    fn rho_h_int_at(&self, p: f64) -> f64 {
        let (k, t0, t1, t, _) = self.seg(p);
        let g = &self.grid;
        let pr = &self.params.profile;
        let d0 = pr.rho_bar(self.p[k]) * self.hp[k] * g.dp_dt(t0);
        let d1 = pr.rho_bar(self.p[k + 1]) * self.hp[k + 1] * g.dp_dt(t1);
        hermite(t0, t1, self.rho_h_int[k], self.rho_h_int[k + 1], d0, d1, t).0
    }

    /// Radicand `1/H′²` at an arbitrary `p`, using exact `ρ̄`, `B`.
    pub fn radicand_at(&self, p: f64) -> f64 {
        let pp = &self.params;
        let pr = &pp.profile;
        let g = pp.g;
        self.mu
            - 2.0
                * (g * pr.rho_bar(p) * (self.height_at(p) - pp.d) + g * pp.d * pr.rho_bar(pr.p0)
                    - g * self.rho_h_int_at(p))
            - 2.0 * pr.b(p)
    }

    /// `a(p) = 1/H′(p)`.
    pub fn a_at(&self, p: f64) -> f64 {
        self.radicand_at(p).max(0.0).sqrt()
    }

    /// `H′(p)`.
    pub fn height_slope_at(&self, p: f64) -> f64 {
        1.0 / self.a_at(p)
    }

    /// `A(p)` from the Hermite interpolant.
    pub fn a_int_at(&self, p: f64) -> f64 {
        let (k, t0, t1, t, _) = self.seg(p);
        let g = &self.grid;
        let gg = self.params.g;
        let pr = &self.params.profile;
        let d0 = gg * pr.rho_bar(self.p[k]) * self.hp[k].powi(3) * g.dp_dt(t0);
        let d1 = gg * pr.rho_bar(self.p[k + 1]) * self.hp[k + 1].powi(3) * g.dp_dt(t1);
        hermite(t0, t1, self.a_int[k], self.a_int[k + 1], d0, d1, t).0
    }

    /// `A′ = gρ̄/a³`.
    pub fn a_int_slope_at(&self, p: f64) -> f64 {
        self.params.g * self.params.profile.rho_bar(p) / self.a_at(p).powi(3)
    }

    pub fn min_a(&self) -> f64 {
        self.a.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_a(&self) -> f64 {
        self.a.iter().copied().fold(0.0, f64::max)
    }

    /// Inverse `p = H^{-1}(y)` for `y ∈ [0, H(0)]` by safeguarded Newton.
    pub fn inverse_height(&self, y: f64) -> f64 {
        let (mut lo, mut hi) = (self.grid.p0, 0.0);
        let mut p = self.grid.p0 + (y / self.h[self.grid.n]).clamp(0.0, 1.0) * -self.grid.p0;
        for _ in 0..100 {
            let f = self.height_at(p) - y;
            if f > 0.0 {
                hi = p;
            } else {
                lo = p;
            }
            let mut next = p - f / self.height_slope_at(p);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - p).abs() <= 1e-15 * (1.0 + p.abs()) {
                return next;
            }
            p = next;
        }
        p
    }
}

/// Default grid: quadratic grading when `β` is singular.
pub fn default_grid(params: &PhysicalParameters, n_p: usize) -> PGrid {
    let grading = if params.profile.bernoulli.is_singular() { Grading::Quadratic } else { Grading::Uniform };
    PGrid::new(params.p0(), n_p, grading)
}

struct Iterate {
    h: Vec<f64>,
    hp: Vec<f64>,
    rho_h_int: Vec<f64>,
}

/// One Picard sweep on nodes `0..=m`.
fn sweep(
    params: &PhysicalParameters,
    grid: &PGrid,
    tn: &[f64],
    mu: f64,
    hp_old: &[f64],
    h_old: &[f64],
    m: usize,
) -> Result<Iterate, NumericalError> {
    let pr = &params.profile;
    let g = params.g;
    let d = params.d;
    let dt = grid.dt();
    let p: Vec<f64> = tn[..=m].iter().map(|&t| grid.p_of(t)).collect();
    let jac: Vec<f64> = tn[..=m].iter().map(|&t| grid.dp_dt(t)).collect();
    let rho: Vec<f64> = p.iter().map(|&pp| pr.rho_bar(pp)).collect();
    let integrand: Vec<f64> = (0..=m).map(|k| rho[k] * hp_old[k] * jac[k]).collect();
    let rho_h_int = cumulative4(&integrand, dt);
    let rho_p0 = pr.rho_bar(pr.p0);
    let mut hp = vec![0.0; m + 1];
    for k in 0..=m {
        let rad = mu - 2.0 * (g * rho[k] * (h_old[k] - d) + g * d * rho_p0 - g * rho_h_int[k]) - 2.0 * pr.b(p[k]);
        if !(rad > 0.0) {
            return Err(NumericalError::RadicandNonPositive { p: p[k], radicand: rad });
        }
        hp[k] = 1.0 / rad.sqrt();
    }
    let dh: Vec<f64> = (0..=m).map(|k| hp[k] * jac[k]).collect();
    let h = cumulative4(&dh, dt);
    Ok(Iterate { h, hp, rho_h_int })
}

/// Fixed point `H(·;μ)` without the depth condition.
pub fn picard_solve(
    params: &PhysicalParameters,
    grid: PGrid,
    mu: f64,
    tol: f64,
) -> Result<LaminarFlow, NumericalError> {
    picard_solve_with(params, grid, mu, tol, 500)
}

pub fn picard_solve_with(
    params: &PhysicalParameters,
    grid: PGrid,
    mu: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LaminarFlow, NumericalError> {
    let ms = mu_star(params);
    if !(mu > ms) {
        return Err(NumericalError::RadicandNonPositive { p: params.p0(), radicand: mu - ms });
    }
    let tn = grid.t_nodes();
    let n = grid.n;
    let mut h: Vec<f64> = tn.iter().map(|&t| (grid.p_of(t) - grid.p0) / mu.sqrt()).collect();
    let mut hp = vec![1.0 / mu.sqrt(); n + 1];
    match iterate_to(params, &grid, &tn, mu, &mut h, &mut hp, n, tol, max_iter) {
        Ok((it, rhi)) => Ok(finish(params, grid, mu, h, hp, rhi, it, false)),
        Err(NumericalError::RadicandNonPositive { p, radicand }) if radicand.is_nan() || radicand > -1.0 => {
            // try the windowed scheme before giving up
            march(params, grid, mu, tol, max_iter).map_err(|_| NumericalError::RadicandNonPositive { p, radicand })
        }
        Err(NumericalError::NoConvergence { .. }) => march(params, grid, mu, tol, max_iter),
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn iterate_to(
    params: &PhysicalParameters,
    grid: &PGrid,
    tn: &[f64],
    mu: f64,
    h: &mut Vec<f64>,
    hp: &mut Vec<f64>,
    m: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(usize, Vec<f64>), NumericalError> {
    let mut last = f64::INFINITY;
    let mut growth = 0;
    for it in 1..=max_iter {
        let nx = sweep(params, grid, tn, mu, hp, h, m)?;
        let diff = (0..=m).map(|k| (nx.h[k] - h[k]).abs()).fold(0.0, f64::max);
        h[..=m].copy_from_slice(&nx.h);
        hp[..=m].copy_from_slice(&nx.hp);
        if diff <= tol * (1.0 + h[m].abs()) {
            return Ok((it, nx.rho_h_int));
        }
        if diff > last {
            growth += 1;
            if growth > 20 {
                return Err(NumericalError::NoConvergence { what: "Picard iteration", iterations: it, residual: diff });
            }
        }
        last = diff;
    }
    Err(NumericalError::NoConvergence { what: "Picard iteration", iterations: max_iter, residual: last })
}

/// Interval marching: converge on `[p0, p0 + kL]` for growing `k`, with the
/// window length `L = (μ-μ*)^{3/2}/(2g(‖ρ̄′‖+1))`.
fn march(
    params: &PhysicalParameters,
    grid: PGrid,
    mu: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LaminarFlow, NumericalError> {
    let ms = mu_star(params);
    let len = (mu - ms).powf(1.5) / (2.0 * params.g * (params.profile.rho_prime_l1 + 1.0));
    let tn = grid.t_nodes();
    let n = grid.n;
    let mut h: Vec<f64> = tn.iter().map(|&t| (grid.p_of(t) - grid.p0) / mu.sqrt()).collect();
    let mut hp = vec![1.0 / mu.sqrt(); n + 1];
    let mut m = 3usize;
    let mut total = 0;
    loop {
        let p_end = grid.p_of(tn[m]) + len;
        let mut m_next = m;
        while m_next < n && grid.p_of(tn[m_next + 1]) <= p_end {
            m_next += 1;
        }
        m = m_next.max(m + 1).min(n);
        let (it, _) = iterate_to(params, &grid, &tn, mu, &mut h, &mut hp, m, tol, max_iter)?;
        total += it;
        // carry the last slope forward as the starting guess
        for k in m + 1..=n {
            hp[k] = hp[m];
            h[k] = h[m] + hp[m] * (grid.p_of(tn[k]) - grid.p_of(tn[m]));
        }
        if m == n {
            break;
        }
    }
    let (it, rhi) = iterate_to(params, &grid, &tn, mu, &mut h, &mut hp, n, tol, max_iter)?;
    Ok(finish(params, grid, mu, h, hp, rhi, total + it, true))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    params: &PhysicalParameters,
    grid: PGrid,
    mu: f64,
    h: Vec<f64>,
    hp: Vec<f64>,
    rho_h_int: Vec<f64>,
    iterations: usize,
    marching: bool,
) -> LaminarFlow {
    let tn = grid.t_nodes();
    let p = grid.nodes();
    let a: Vec<f64> = hp.iter().map(|v| 1.0 / v).collect();
    let pr = &params.profile;
    let ai: Vec<f64> = (0..=grid.n).map(|k| params.g * pr.rho_bar(p[k]) * hp[k].powi(3) * grid.dp_dt(tn[k])).collect();
    let a_int = cumulative4(&ai, grid.dt());
    LaminarFlow {
        params: params.clone(),
        grid,
        p,
        h,
        hp,
        a,
        mu,
        a_int,
        rho_h_int,
        picard_iterations: iterations,
        used_marching: marching,
    }
}

/// `H(0;μ) - d`, with solver failure mapped to `+∞` (the radicand collapses
/// only when `H` has grown well past `d`).
fn depth_mismatch(params: &PhysicalParameters, grid: PGrid, mu: f64, tol: f64) -> f64 {
    match picard_solve(params, grid, mu, tol) {
        Ok(f) => f.depth_error(),
        Err(_) => f64::INFINITY,
    }
}

/// Shoot on `μ` until `|H(0;μ) - d| ≤ shoot_tol`.
pub fn shoot_depth(
    params: &PhysicalParameters,
    opts: &LaminarOptions,
) -> Result<(LaminarFlow, ShootReport), SolverError> {
    let grid = default_grid(params, opts.n_p);
    shoot_depth_on(params, grid, opts)
}

pub fn shoot_depth_on(
    params: &PhysicalParameters,
    grid: PGrid,
    opts: &LaminarOptions,
) -> Result<(LaminarFlow, ShootReport), SolverError> {
    let r2 = check_res2(params)?;
    if !r2.holds {
        return Err(SolverError::Condition {
            condition: "RES2",
            detail: format!("margin {:e} is not negative", r2.margin),
        });
    }
    let ms = mu_star(params);
    let p0 = params.p0();
    let d = params.d;
    let mu_hi = ms + p0 * p0 / (d * d) + 1.0;
    let f_hi = depth_mismatch(params, grid, mu_hi, opts.picard_tol);
    let mut brackets = Vec::new();
    let (mut mu_prev, mut f_prev) = (mu_hi, f_hi);
    for k in 1..=60 {
        let mu_k = ms + (mu_hi - ms) * 0.5f64.powi(k);
        if mu_k <= ms {
            break;
        }
        let f_k = depth_mismatch(params, grid, mu_k, opts.picard_tol);
        if (f_k > 0.0) != (f_prev > 0.0) {
            brackets.push((mu_k, mu_prev));
        }
        mu_prev = mu_k;
        f_prev = f_k;
    }
    let Some(&selected) = brackets.iter().max_by(|a, b| a.1.partial_cmp(&b.1).unwrap()) else {
        return Err(SolverError::Condition {
            condition: "RES2",
            detail: "RES2 margin insufficient numerically: no lower bracket within 60 scans".into(),
        });
    };
    let (mut lo, mut hi) = selected;
    // H(0;μ) decreases in μ: positive mismatch at lo, negative at hi
    let mut best: Option<LaminarFlow> = None;
    let mut bis = 0;
    while bis < 200 {
        bis += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let flow = picard_solve(params, grid, mid, opts.picard_tol);
        let f = flow.as_ref().map(|f| f.depth_error()).unwrap_or(f64::INFINITY);
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if let Ok(fl) = flow {
            let better = best.as_ref().map(|b| b.depth_error().abs() > f.abs()).unwrap_or(true);
            if better {
                best = Some(fl);
            }
        }
        let converged = best.as_ref().map(|b| b.depth_error().abs() <= opts.shoot_tol).unwrap_or(false);
        if converged && (hi - lo) <= 1e-14 * hi {
            break;
        }
    }
    let flow =
        best.ok_or(NumericalError::NoConvergence { what: "depth shooting", iterations: bis, residual: f64::NAN })?;
    let err = flow.depth_error();
    if err.abs() > opts.shoot_tol {
        return Err(NumericalError::NoConvergence { what: "depth shooting", iterations: bis, residual: err }.into());
    }
    let report = ShootReport { mu_hi, brackets, selected, h0_error: err, bisections: bis };
    Ok((flow, report))
}

/// `sup_k |H(p_k) - ∫_{p0}^{p_k} radicand^{-1/2}|`, recomputed on a grid of
/// twice the resolution from the interpolated flow.
pub fn laminar_residual(flow: &LaminarFlow) -> f64 {
    let params = &flow.params;
    let pr = &params.profile;
    let fine = flow.grid.refined(2);
    let tn = fine.t_nodes();
    let n = fine.n;
    let g = params.g;
    let d = params.d;
    let hs: Vec<f64> = tn.iter().map(|&t| flow.height_at(fine.p_of(t))).collect();
    // H′ from the interpolant's derivative
    let ct = flow.grid.t_nodes();
    let dh_dt: Vec<f64> = tn
        .iter()
        .map(|&t| {
            let k = locate(&ct, t);
            let (t0, t1) = (ct[k], ct[k + 1]);
            hermite(
                t0,
                t1,
                flow.h[k],
                flow.h[k + 1],
                flow.hp[k] * flow.grid.dp_dt(t0),
                flow.hp[k + 1] * flow.grid.dp_dt(t1),
                t,
            )
            .1
        })
        .collect();
    let integrand: Vec<f64> = (0..=n).map(|k| pr.rho_bar(fine.p_of(tn[k])) * dh_dt[k]).collect();
    let rhi = cumulative4(&integrand, fine.dt());
    let rho_p0 = pr.rho_bar(pr.p0);
    let mut q = vec![0.0; n + 1];
    for k in 0..=n {
        let p = fine.p_of(tn[k]);
        let rad = flow.mu - 2.0 * (g * pr.rho_bar(p) * (hs[k] - d) + g * d * rho_p0 - g * rhi[k]) - 2.0 * pr.b(p);
        if !(rad > 0.0) {
            return f64::INFINITY;
        }
        q[k] = fine.dp_dt(tn[k]) / rad.sqrt();
    }
    let h_re = cumulative4(&q, fine.dt());
    (0..=flow.grid.n).map(|k| (flow.h[k] - h_re[2 * k]).abs()).fold(0.0, f64::max)
}

/// `Err` if the profile fails RES2 before shooting.
pub fn require_res2(params: &PhysicalParameters) -> Result<(), ProfileError> {
    check_res2(params).map(|_| ())
}
