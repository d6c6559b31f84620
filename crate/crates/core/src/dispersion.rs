//! Linearized Sturm–Liouville problem about a laminar flow.
//!
//! With `z = a³w′ - gρ̄w` the kernel equation becomes the first order system
//!
//! ```text
//! w′ = A′w + z/a³,    z′ = (θa/λ² - gρ̄A′)w - A′z,    A′ = gρ̄/a³
//! ```
//!
//! whose coefficients are continuous even when `ρ̄′` is not. The Wronskian at
//! the top is `W(0;λ,θ) = σθ w̃1(0) - λ² z1(0)` and its largest root in `θ`
//! scales as `θ(λ) = C_D λ²`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{NumericalError, SolverError};
use crate::exec::Exec;
use crate::laminar::LaminarFlow;
use crate::numerics::ode::{Dopri5, OdeOptions, OdeSolution};
use crate::numerics::quad::cumulative4;
use crate::numerics::roots::bisect;
use crate::profiles::{check_res3, PhysicalParameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    ForwardFromBed,
    BackwardFromTop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionOptions {
    pub lambda_hat: f64,
    pub scan_points: usize,
    /// multiplier on the bound `g²ρ̄(p0)²/min a⁴`
    pub theta_hi_factor: f64,
    pub max_doublings: usize,
    pub root_rtol: f64,
    /// highest Fourier mode checked for kernel collisions
    pub k_max: usize,
    #[serde(skip)]
    pub ode: OdeOptions,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        Self {
            lambda_hat: 1.0,
            scan_points: 512,
            theta_hi_factor: 100.0,
            max_doublings: 6,
            root_rtol: 1e-10,
            k_max: 8,
            ode: OdeOptions::default(),
        }
    }
}

/// One solution of the first order system with dense output.
#[derive(Debug, Clone)]
pub struct SlTrajectory {
    pub p: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub direction: Direction,
    pub lambda: f64,
    pub theta: f64,
    sol: OdeSolution<2>,
}

impl SlTrajectory {
    /// `(w, z)` at any `p ∈ [p0, 0]`, in the true scale.
    pub fn eval(&self, p: f64) -> (f64, f64) {
        let y = self.sol.eval(p);
        (y[0], y[1])
    }

    /// `w′ = (z + gρ̄w)/a³`.
    pub fn w_prime(&self, flow: &LaminarFlow, p: f64) -> f64 {
        let (w, z) = self.eval(p);
        (z + flow.params.g * flow.params.profile.rho_bar(p) * w) / flow.a_at(p).powi(3)
    }

    pub fn mesh(&self) -> Vec<f64> {
        self.sol.mesh()
    }
}

fn renorm(y: &[f64; 2]) -> f64 {
    let m = y[0].abs().max(y[1].abs());
    if m > 1e100 {
        1.0 / m
    } else {
        1.0
    }
}

/// Right-hand side for `x = θ/λ²`.
fn rhs(flow: &LaminarFlow, x: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    let g = flow.params.g;
    move |p, y| {
        let a = flow.a_at(p);
        let a3 = a * a * a;
        let rho = flow.params.profile.rho_bar(p);
        let ap = g * rho / a3;
        [ap * y[0] + y[1] / a3, (x * a - g * rho * ap) * y[0] - ap * y[1]]
    }
}

fn bed_data(flow: &LaminarFlow) -> [f64; 2] {
    [0.0, flow.a[0].powi(3)]
}

fn top_data(flow: &LaminarFlow, lambda: f64, theta: f64) -> [f64; 2] {
    let a0 = flow.a[flow.grid.n];
    [lambda * lambda * a0.powi(3), a0.powi(3) * flow.params.sigma * theta]
}

fn trajectory(flow: &LaminarFlow, lambda: f64, theta: f64, direction: Direction, sol: OdeSolution<2>) -> SlTrajectory {
    let mut w = Vec::with_capacity(flow.p.len());
    let mut z = Vec::with_capacity(flow.p.len());
    for &p in &flow.p {
        let y = sol.eval(p);
        w.push(y[0]);
        z.push(y[1]);
    }
    SlTrajectory { p: flow.p.clone(), w, z, direction, lambda, theta, sol }
}

/// `w̃1`: `w(p0) = 0`, `w′(p0) = 1`.
pub fn integrate_w1(
    flow: &LaminarFlow,
    lambda: f64,
    theta: f64,
    opts: &OdeOptions,
) -> Result<SlTrajectory, NumericalError> {
    let x = theta / (lambda * lambda);
    let sol = Dopri5::integrate_with(rhs(flow, x), flow.grid.p0, bed_data(flow), 0.0, opts, Some(&renorm))?;
    Ok(trajectory(flow, lambda, theta, Direction::ForwardFromBed, sol))
}

/// `w̃2`: `w(0) = λ²a³(0)`, `w′(0) = λ²gρ̄(0) + σθ`, integrated down to the bed.
pub fn integrate_w2(
    flow: &LaminarFlow,
    lambda: f64,
    theta: f64,
    opts: &OdeOptions,
) -> Result<SlTrajectory, NumericalError> {
    let x = theta / (lambda * lambda);
    let sol =
        Dopri5::integrate_with(rhs(flow, x), 0.0, top_data(flow, lambda, theta), flow.grid.p0, opts, Some(&renorm))?;
    Ok(trajectory(flow, lambda, theta, Direction::BackwardFromTop, sol))
}

fn top_value(flow: &LaminarFlow, lambda: f64, theta: f64, y: [f64; 2], log_scale: f64) -> f64 {
    (flow.params.sigma * theta * y[0] - lambda * lambda * y[1]) * log_scale.exp()
}

/// `W(0;λ,θ) = σθ w̃1(0) - λ² z1(0)`.
pub fn wronskian_at_top(flow: &LaminarFlow, lambda: f64, theta: f64, opts: &OdeOptions) -> Result<f64, NumericalError> {
    let x = theta / (lambda * lambda);
    let sol = Dopri5::integrate_with(rhs(flow, x), flow.grid.p0, bed_data(flow), 0.0, opts, Some(&renorm))?;
    Ok(top_value(flow, lambda, theta, sol.y_end, sol.log_scale_end))
}

/// Same as [`wronskian_at_top`] but sign-only safe: the value is reported in
/// the renormalised scale, so it never overflows.
fn wronskian_sign(flow: &LaminarFlow, lambda: f64, theta: f64, opts: &OdeOptions) -> Result<f64, NumericalError> {
    let x = theta / (lambda * lambda);
    let sol = Dopri5::integrate_with(rhs(flow, x), flow.grid.p0, bed_data(flow), 0.0, opts, Some(&renorm))?;
    Ok(top_value(flow, lambda, theta, sol.y_end, 0.0))
}

/// `W` on a prescribed step mesh, for finite differences.
fn wronskian_on_mesh(flow: &LaminarFlow, lambda: f64, theta: f64, mesh: &[f64]) -> f64 {
    let x = theta / (lambda * lambda);
    let sol = Dopri5::integrate_mesh(rhs(flow, x), mesh, bed_data(flow), Some(&renorm));
    top_value(flow, lambda, theta, sol.y_end, sol.log_scale_end)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootScan {
    pub lambda: f64,
    /// largest root `θ(λ)`
    pub theta: f64,
    /// every root found, ascending
    pub roots: Vec<f64>,
    pub theta_hi: f64,
    pub doublings: usize,
}

/// Initial scan bound `θ_hi / λ²`. The capillary term keeps the bracket valid
/// for small `σ`, where the root sits near `(max a²/σ)²`.
pub fn scan_bound(flow: &LaminarFlow, factor: f64) -> f64 {
    let pr = &flow.params.profile;
    let g = flow.params.g;
    let min_a = flow.min_a();
    let max_a = flow.max_a();
    let chopin = g * g * pr.rho_bar(pr.p0).powi(2) / min_a.powi(4);
    (factor * chopin).max(16.0 * PI * PI).max(4.0 * (max_a * max_a / flow.params.sigma).powi(2))
}

fn scan_nodes(hi: f64, n: usize) -> Vec<f64> {
    let half = n / 2;
    let mut v: Vec<f64> = (0..half).map(|k| hi * k as f64 / (half - 1) as f64).collect();
    let lo = hi * 1e-6;
    v.extend((0..n - half).map(|k| lo * (hi / lo).powf(k as f64 / (n - half - 1) as f64)));
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

/// Largest `θ` with `W(0;λ,θ) = 0`.
pub fn largest_root_theta(
    flow: &LaminarFlow,
    lambda: f64,
    opts: &DispersionOptions,
    exec: Exec,
) -> Result<RootScan, SolverError> {
    let l2 = lambda * lambda;
    let mut hi = l2 * scan_bound(flow, opts.theta_hi_factor);
    let mut doublings = 0;
    while wronskian_sign(flow, lambda, hi, &opts.ode)? <= 0.0 {
        if doublings == opts.max_doublings {
            return Err(NumericalError::NoWronskianRoot { theta_hi: hi }.into());
        }
        hi *= 2.0;
        doublings += 1;
    }
    let nodes = scan_nodes(hi, opts.scan_points);
    let vals: Vec<Result<f64, NumericalError>> =
        exec.map(nodes.len(), |k| wronskian_sign(flow, lambda, nodes[k], &opts.ode));
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_, _>>()?;
    let brackets: Vec<(f64, f64)> = (1..nodes.len())
        .filter(|&k| (vals[k - 1] > 0.0) != (vals[k] > 0.0))
        .map(|k| (nodes[k - 1], nodes[k]))
        .collect();
    if brackets.is_empty() {
        return Err(NumericalError::Other(format!(
            "no sign change of W(0;{lambda},θ) on [0,{hi:e}]; contradicts W(0;λ,0) < 0 < W(0;λ,θ_hi)"
        ))
        .into());
    }
    let ode = opts.ode;
    let roots: Vec<f64> = exec.map(brackets.len(), |i| {
        let (a, b) = brackets[i];
        bisect(|t| wronskian_sign(flow, lambda, t, &ode).unwrap_or(f64::NAN), a, b, opts.root_rtol * b)
    });
    let theta = *roots.last().unwrap();
    Ok(RootScan { lambda, theta, roots, theta_hi: hi, doublings })
}

/// Result of [`wronskian_identity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub w_lambda: f64,
    pub w_theta: f64,
    pub ratio: f64,
    pub expected: f64,
    pub rel_err: f64,
    /// `w̃1(0)·W_λ < 0`
    pub sign_ok: bool,
    pub w1_top: f64,
    /// `|W_λ|` below the noise floor of the finite difference
    pub indeterminate: bool,
}

/// `W_θ/W_λ` by central differences on a frozen step mesh versus `-λ/(2θ)`.
pub fn wronskian_identity_check(
    flow: &LaminarFlow,
    lambda: f64,
    theta: f64,
    opts: &OdeOptions,
) -> Result<IdentityCheck, NumericalError> {
    let (w_lambda, w_theta, w1_top) = partials(flow, lambda, theta, opts)?;
    let ratio = w_theta / w_lambda;
    let expected = -lambda / (2.0 * theta);
    let scale = wronskian_on_mesh(flow, lambda, theta, &integrate_w1(flow, lambda, theta, opts)?.mesh()).abs();
    let noise = 1e-12 * (lambda * lambda * flow.a[0].powi(3) + scale) / (1e-5 * lambda);
    Ok(IdentityCheck {
        w_lambda,
        w_theta,
        ratio,
        expected,
        rel_err: ((ratio - expected) / expected).abs(),
        sign_ok: w1_top * w_lambda < 0.0,
        w1_top,
        indeterminate: w_lambda.abs() <= noise,
    })
}

/// `(W_λ, W_θ, w̃1(0))` at `(λ, θ)`.
pub fn partials(
    flow: &LaminarFlow,
    lambda: f64,
    theta: f64,
    opts: &OdeOptions,
) -> Result<(f64, f64, f64), NumericalError> {
    let w1 = integrate_w1(flow, lambda, theta, opts)?;
    let mesh = w1.mesh();
    let hl = 1e-5 * lambda;
    let ht = 1e-5 * theta;
    let w_lambda = (wronskian_on_mesh(flow, lambda + hl, theta, &mesh)
        - wronskian_on_mesh(flow, lambda - hl, theta, &mesh))
        / (2.0 * hl);
    let w_theta = (wronskian_on_mesh(flow, lambda, theta + ht, &mesh)
        - wronskian_on_mesh(flow, lambda, theta - ht, &mesh))
        / (2.0 * ht);
    Ok((w_lambda, w_theta, w1.eval(0.0).0))
}

/// Maximum relative variation of `z1w2 - w1z2 = a³(w1′w2 - w1w2′)` over the
/// laminar grid.
pub fn wronskian_constancy(
    flow: &LaminarFlow,
    lambda: f64,
    theta: f64,
    opts: &OdeOptions,
) -> Result<f64, NumericalError> {
    let w1 = integrate_w1(flow, lambda, theta, opts)?;
    let w2 = integrate_w2(flow, lambda, theta, opts)?;
    let c: Vec<f64> = (0..flow.p.len()).map(|k| w1.z[k] * w2.w[k] - w1.w[k] * w2.z[k]).collect();
    let c0 = c[c.len() - 1];
    let denom = c0.abs().max(1e-300);
    let spread = c.iter().map(|v| (v - c0).abs()).fold(0.0, f64::max);
    Ok(spread / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct W0Check {
    pub holds: bool,
    pub w0_at_top: f64,
    pub w0_sup: f64,
    pub min_z0: f64,
}

/// The `θ = 0` system must not admit a solution with `w0(0) = 0`.
pub fn check_w0_nondegenerate(flow: &LaminarFlow, opts: &OdeOptions) -> Result<W0Check, NumericalError> {
    let t = integrate_w1(flow, 1.0, 0.0, opts)?;
    let w0_sup = t.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let w0_at_top = t.w[t.w.len() - 1];
    let min_z0 = t.z.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(W0Check { holds: w0_at_top.abs() > 1e-8 * w0_sup, w0_at_top, w0_sup, min_z0 })
}

/// `½∫[a³(w̃1′)² - gρ̄(w̃1²)′]`. The second term is integrated by parts as
/// `gρ̄(0)w̃1(0)² - g∫w̃1² dρ̄` with a Stieltjes sum, so no `ρ̄′` is needed.
pub fn transversality_value(flow: &LaminarFlow, w1: &SlTrajectory) -> f64 {
    let g = flow.params.g;
    let pr = &flow.params.profile;
    let grid = flow.grid.refined(4);
    let tn = grid.t_nodes();
    let ps: Vec<f64> = tn.iter().map(|&t| grid.p_of(t)).collect();
    let ws: Vec<f64> = ps.iter().map(|&p| w1.eval(p).0).collect();
    let f: Vec<f64> = (0..ps.len())
        .map(|k| {
            let a = flow.a_at(ps[k]);
            let wp = w1.w_prime(flow, ps[k]);
            a * a * a * wp * wp * grid.dp_dt(tn[k])
        })
        .collect();
    let kinetic = cumulative4(&f, grid.dt())[grid.n];
    let mut stieltjes = 0.0;
    for k in 0..grid.n {
        let mid = 0.5 * (ps[k] + ps[k + 1]);
        let wm = w1.eval(mid).0;
        stieltjes += wm * wm * (pr.rho_bar(ps[k + 1]) - pr.rho_bar(ps[k]));
    }
    let w_top = ws[grid.n];
    let potential = g * pr.rho_bar(0.0) * w_top * w_top - g * stieltjes;
    0.5 * (kinetic - potential)
}

/// `-(w̃1(0)/4λ*)·W_λ(0;λ*,(2π)²)`, the finite-difference route.
pub fn transversality_fd(flow: &LaminarFlow, lambda_star: f64, opts: &OdeOptions) -> Result<f64, NumericalError> {
    let (w_lambda, _, w1_top) = partials(flow, lambda_star, 4.0 * PI * PI, opts)?;
    Ok(-w1_top * w_lambda / (4.0 * lambda_star))
}

/// `w*(q,p) = w̃1(p;λ*,(2π)²) cos(2πq)`.
#[derive(Debug, Clone)]
pub struct KernelMode {
    pub lambda_star: f64,
    pub w1: SlTrajectory,
}

impl KernelMode {
    pub fn profile(&self, p: f64) -> f64 {
        self.w1.eval(p).0
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.profile(p) * (2.0 * PI * q).cos()
    }
}

pub fn kernel_mode(flow: &LaminarFlow, lambda_star: f64, opts: &OdeOptions) -> Result<KernelMode, NumericalError> {
    Ok(KernelMode { lambda_star, w1: integrate_w1(flow, lambda_star, 4.0 * PI * PI, opts)? })
}

/// Higher mode check: `W(0;λ*,(2kπ)²)` should not vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCheck {
    pub k: usize,
    pub w_top: f64,
    /// relative distance of `(2kπ/λ*)²` to the nearest secondary root of `W`
    pub nearest_root_gap: f64,
    pub collides: bool,
}

pub fn collision_diagnostics(
    flow: &LaminarFlow,
    lambda_star: f64,
    scaled_roots: &[f64],
    k_max: usize,
    opts: &OdeOptions,
) -> Result<Vec<ModeCheck>, NumericalError> {
    (2..=k_max)
        .map(|k| {
            let theta = (2.0 * PI * k as f64).powi(2);
            let x = theta / (lambda_star * lambda_star);
            let gap = scaled_roots.iter().map(|r| ((x - r) / r).abs()).fold(f64::INFINITY, f64::min);
            let w = wronskian_sign(flow, lambda_star, theta, opts)?;
            Ok(ModeCheck { k, w_top: w, nearest_root_gap: gap, collides: gap < 1e-6 })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionResult {
    pub lambda_samples: Vec<f64>,
    pub theta_of_lambda: Vec<f64>,
    pub c_d: f64,
    pub lambda_star: f64,
    #[serde(skip)]
    pub w1_profile: SlTrajectory,
    pub transversality: f64,
    pub transversality_fd: f64,
    pub scaling_deviation: f64,
    pub root_count: usize,
    /// `θ/λ²` for every root at `λ̂`
    pub scaled_roots: Vec<f64>,
    pub modes: Vec<ModeCheck>,
    pub warnings: Vec<String>,
}

impl DispersionResult {
    pub fn kernel(&self) -> KernelMode {
        KernelMode { lambda_star: self.lambda_star, w1: self.w1_profile.clone() }
    }

    pub fn collision(&self) -> bool {
        self.modes.iter().any(|m| m.collides)
    }
}

/// `C_D`, `λ*`, the kernel profile and transversality.
pub fn dispersion_constant(
    flow: &LaminarFlow,
    opts: &DispersionOptions,
    exec: Exec,
) -> Result<DispersionResult, SolverError> {
    let lh = opts.lambda_hat;
    let lambda_samples = vec![0.5 * lh, lh, 2.0 * lh];
    let scans: Vec<RootScan> =
        lambda_samples.iter().map(|&l| largest_root_theta(flow, l, opts, exec)).collect::<Result<_, _>>()?;
    let theta_of_lambda: Vec<f64> = scans.iter().map(|s| s.theta).collect();
    let c_d = scans[1].theta / (lh * lh);
    let ratios: Vec<f64> = scans.iter().map(|s| s.theta / (s.lambda * s.lambda)).collect();
    let scaling_deviation = ratios.iter().map(|r| ((r - c_d) / c_d).abs()).fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if scaling_deviation > 1e-5 {
        warnings.push(format!("theta/lambda^2 spread {scaling_deviation:e} exceeds 1e-5; integrator inaccurate"));
    }
    let lambda_star = 2.0 * PI / c_d.sqrt();
    let w1_profile = integrate_w1(flow, lambda_star, 4.0 * PI * PI, &opts.ode)?;
    let transversality = transversality_value(flow, &w1_profile);
    let transversality_fd = transversality_fd(flow, lambda_star, &opts.ode)?;
    if transversality <= 0.0 {
        warnings.push("transversality integral is not positive".into());
    }
    let scaled_roots: Vec<f64> = scans[1].roots.iter().map(|r| r / (lh * lh)).collect();
    let modes = collision_diagnostics(flow, lambda_star, &scaled_roots, opts.k_max, &opts.ode)?;
    if modes.iter().any(|m| m.collides) {
        warnings.push("kernel collision with a higher Fourier mode".into());
    }
    Ok(DispersionResult {
        lambda_samples,
        theta_of_lambda,
        c_d,
        lambda_star,
        w1_profile,
        transversality,
        transversality_fd,
        scaling_deviation,
        root_count: scans[1].roots.len(),
        scaled_roots,
        modes,
        warnings,
    })
}

/// `f(x) = (gρ + σx²) tanh(dx)/x - p0²/d²`, extended by continuity at 0.
pub fn analytic_f(g: f64, rho: f64, d: f64, p0: f64, sigma: f64, x: f64) -> f64 {
    let t = if x == 0.0 { d } else { (d * x).tanh() / x };
    (g * rho + sigma * x * x) * t - p0 * p0 / (d * d)
}

/// `C_D` for constant density and `β = 0` from the closed-form relation.
pub fn analytic_dispersion(params: &PhysicalParameters) -> Result<f64, SolverError> {
    let pr = &params.profile;
    if !pr.is_homogeneous_irrotational() {
        return Err(SolverError::Config(
            "analytic dispersion needs constant density and zero Bernoulli function".into(),
        ));
    }
    let (g, d, s, p0) = (params.g, params.d, params.sigma, pr.p0);
    let rho = pr.rho_bar(0.0);
    let f = |x: f64| analytic_f(g, rho, d, p0, s, x);
    if f(0.0) >= 0.0 {
        return Err(SolverError::Condition {
            condition: "RES3",
            detail: format!("f(0) = {:e} is not negative", f(0.0)),
        });
    }
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    let x = bisect(f, 0.0, hi, 1e-15 * hi);
    Ok(x * x)
}

/// Convenience for constant-density runs: `RES3` and the analytic value.
pub fn analytic_with_res3(params: &PhysicalParameters) -> Result<(f64, bool), SolverError> {
    let r3 = check_res3(params)?;
    Ok((analytic_dispersion(params)?, r3.holds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laminar::{shoot_depth, LaminarOptions};
    use crate::profiles::{Bernoulli, Density, StratificationProfile};

    fn homogeneous_flow(sigma: f64) -> LaminarFlow {
        let p = PhysicalParameters::homogeneous(9.81, 1.0, sigma, -3.2, 1.0).unwrap();
        shoot_depth(&p, &LaminarOptions { n_p: 256, ..Default::default() }).unwrap().0
    }

    fn stratified_flow(p0: f64) -> LaminarFlow {
        let prof =
            StratificationProfile::new(p0, Density::Linear { rho0: 1.0, slope: -0.05 }, Bernoulli::Zero, None).unwrap();
        let p = PhysicalParameters::new(9.81, 1.0, 0.3, prof).unwrap();
        shoot_depth(&p, &LaminarOptions { n_p: 256, ..Default::default() }).unwrap().0
    }

    #[test]
    fn theta_zero_closed_form() {
        // constant coefficients: the system matrix is nilpotent, so
        // w = p - p0 and z = a³ - gρ(p - p0) exactly
        let f = homogeneous_flow(0.3);
        let t = integrate_w1(&f, 1.0, 0.0, &OdeOptions::default()).unwrap();
        let a3 = f.a[0].powi(3);
        for (k, &p) in f.p.iter().enumerate() {
            let s = p + 3.2;
            assert!((t.w[k] - s).abs() < 1e-10, "{k}");
            assert!((t.z[k] - (a3 - 9.81 * s)).abs() < 1e-9, "{k}");
        }
    }

    #[test]
    fn w1_positive_at_theta_zero() {
        let f = stratified_flow(-5.0);
        let t = integrate_w1(&f, 1.0, 0.0, &OdeOptions::default()).unwrap();
        for k in 1..t.w.len() {
            assert!(t.w[k] > 0.0 && t.z[k] > 0.0 && t.w_prime(&f, t.p[k]) > 0.0);
        }
        let w = wronskian_at_top(&f, 1.3, 0.0, &OdeOptions::default()).unwrap();
        assert!(w < 0.0);
    }

    #[test]
    fn w2_initial_data() {
        let f = stratified_flow(-5.0);
        let (l, th) = (0.8, 5.0);
        let t = integrate_w2(&f, l, th, &OdeOptions::default()).unwrap();
        let n = f.grid.n;
        let a0 = f.a[n];
        assert_eq!(t.w[n], l * l * a0.powi(3));
        let wp = t.w_prime(&f, 0.0);
        let expect = l * l * 9.81 * f.params.profile.rho_bar(0.0) + 0.3 * th;
        assert!((wp - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn refinement_agrees() {
        let f = stratified_flow(-5.0);
        let o = OdeOptions::default();
        let tight = OdeOptions { atol: o.atol * 0.5, rtol: o.rtol * 0.5, ..o };
        let a = integrate_w1(&f, 1.0, 30.0, &o).unwrap();
        let b = integrate_w1(&f, 1.0, 30.0, &tight).unwrap();
        for k in 0..a.w.len() {
            assert!((a.w[k] - b.w[k]).abs() <= 1e-8 * b.w[k].abs().max(1e-3));
        }
    }

    #[test]
    fn large_theta_positive() {
        let f = stratified_flow(-5.0);
        let hi = scan_bound(&f, 100.0);
        assert!(wronskian_at_top(&f, 1.0, hi, &OdeOptions::default()).unwrap() > 0.0);
    }

    #[test]
    fn analytic_matches_wronskian_zero() {
        for sigma in [0.1, 0.3, 1.0] {
            let f = homogeneous_flow(sigma);
            let cd = analytic_dispersion(&f.params).unwrap();
            let r = largest_root_theta(&f, 1.0, &DispersionOptions::default(), Exec::default()).unwrap();
            assert!(((r.theta - cd) / cd).abs() < 1e-6, "{sigma}: {} vs {cd}", r.theta);
            assert_eq!(r.roots.len(), 1);
        }
    }

    #[test]
    fn analytic_root_trend() {
        let mut last = f64::INFINITY;
        for sigma in [0.1, 1.0, 10.0] {
            let p = PhysicalParameters::homogeneous(9.81, 1.0, sigma, -3.2, 1.0).unwrap();
            let cd = analytic_dispersion(&p).unwrap();
            assert!(analytic_f(9.81, 1.0, 1.0, -3.2, sigma, cd.sqrt()).abs() < 1e-10);
            assert!(cd < last);
            last = cd;
        }
        let bad = PhysicalParameters::homogeneous(9.81, 1.0, 0.3, -1.0, 1.0).unwrap();
        assert!(analytic_dispersion(&bad).is_err());
    }

    #[test]
    fn identity_and_transversality() {
        let f = stratified_flow(-5.0);
        let o = DispersionOptions::default();
        for l in [0.7, 1.0, 1.6] {
            let r = largest_root_theta(&f, l, &o, Exec::default()).unwrap();
            let c = wronskian_identity_check(&f, l, r.theta, &o.ode).unwrap();
            assert!(c.rel_err < 1e-4 && c.sign_ok && c.w_theta > 0.0, "{c:?}");
        }
        let d = dispersion_constant(&f, &o, Exec::default()).unwrap();
        assert!(d.scaling_deviation < 1e-6);
        assert!(d.transversality > 0.0);
        assert!(((d.transversality - d.transversality_fd) / d.transversality).abs() < 1e-3);
        let w = wronskian_at_top(&f, d.lambda_star, 4.0 * PI * PI, &o.ode).unwrap();
        let scale = 4.0 * PI * PI * 0.3 * d.w1_profile.w.last().unwrap().abs();
        assert!(w.abs() < 1e-8 * scale.max(1.0), "{w}");
    }

    #[test]
    fn transversality_routes_agree_constant_density() {
        let f = homogeneous_flow(0.3);
        let o = DispersionOptions::default();
        let d = dispersion_constant(&f, &o, Exec::default()).unwrap();
        assert!(((d.transversality - d.transversality_fd) / d.transversality).abs() < 1e-6);
    }

    #[test]
    fn wronskian_is_constant() {
        let f = stratified_flow(-5.0);
        for (l, th) in [(0.5, 3.0), (1.0, 40.0), (2.3, 7.0)] {
            let v = wronskian_constancy(&f, l, th, &OdeOptions::default()).unwrap();
            assert!(v < 1e-8, "{v}");
        }
    }

    #[test]
    fn w0_nondegenerate() {
        let f = stratified_flow(-5.0);
        let c = check_w0_nondegenerate(&f, &OdeOptions::default()).unwrap();
        assert!(c.holds && c.w0_at_top > 0.0 && c.min_z0 > 0.0);
    }

    #[test]
    fn kernel_mode_shape() {
        let f = homogeneous_flow(0.3);
        let k = kernel_mode(&f, 1.0, &OdeOptions::default()).unwrap();
        for q in [0.0, 0.1, 0.37] {
            assert_eq!(k.eval(q, -3.2), 0.0);
            assert!((k.eval(q, -1.0) - k.eval(-q, -1.0)).abs() < 1e-15);
            assert!((k.eval(q, -1.0) - k.eval(q + 1.0, -1.0)).abs() < 1e-12);
        }
    }
}
