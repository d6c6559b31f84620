//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each, and exits nonzero if any fails. Closed forms, the explicit integral
//! and the dispersion root are evaluated here without the solver's code.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stratwave::branch::{
    self, angle_w, continue_branch, fd_check, newton_correct, polyfit, spectrum, BranchRun, BranchSetup, Constraint,
    ContinuationOptions, Discretization, NewtonOptions, State,
};
use stratwave::dispersion::{
    check_w0_nondegenerate, dispersion_constant, largest_root_theta, wronskian_constancy, wronskian_identity_check,
    DispersionOptions, DispersionResult,
};
use stratwave::fields::{
    euler_residuals, observed_orders, streamline_variation, ColumnSpacing, FlowField, HeightSampler,
};
use stratwave::laminar::{default_grid, picard_solve, shoot_depth, LaminarFlow, LaminarOptions};
use stratwave::numerics::ode::OdeOptions;
use stratwave::profiles::{
    check_cthe0, check_res2, check_res3, x_star, Bernoulli, Density, PhysicalParameters, StratificationProfile,
};
use stratwave::Exec;

const G: f64 = 9.81;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn stratified(p0: f64, sigma: f64) -> PhysicalParameters {
    let prof =
        StratificationProfile::new(p0, Density::Linear { rho0: 1.0, slope: -0.05 }, Bernoulli::Zero, None).unwrap();
    PhysicalParameters::new(G, 1.0, sigma, prof).unwrap()
}

fn laminar(par: &PhysicalParameters) -> LaminarFlow {
    shoot_depth(par, &LaminarOptions::default()).unwrap().0
}

fn wnorm(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b * b).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// independent oracles

/// Adaptive Simpson, recursion on the local error estimate.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

/// Largest positive `C` with `tanh(d√C) = p0²√C / (d²(gρ + σC))`, by a
/// downward scan followed by bisection.
fn dispersion_oracle(g: f64, rho: f64, d: f64, p0: f64, sigma: f64) -> f64 {
    let f = |x: f64| (g * rho + sigma * x * x) * (d * x).tanh() - p0 * p0 * x / (d * d);
    let mut hi = 1.0;
    while f(hi) <= 0.0 || f(2.0 * hi) <= 0.0 {
        hi *= 2.0;
    }
    // walk down until the sign flips
    let step = hi / 4096.0;
    let mut lo = hi;
    while lo > step && f(lo) > 0.0 {
        lo -= step;
    }
    let (mut a, mut b) = (lo, lo + step);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let x = 0.5 * (a + b);
    x * x
}

/// Continuum operator for `ρ̄ ≡ 1`, `β = 0`, where `H′` is constant:
/// `h_qq/e - 2h_q h_qp/e² + (λ² + h_q²)h_pp/e³` with `e = h_p + H′`.
fn manufactured_operator(hq: f64, hp: f64, hqq: f64, hqp: f64, hpp: f64, big_hp: f64, lambda: f64) -> f64 {
    let e = hp + big_hp;
    hqq / e - 2.0 * hq * hqp / (e * e) + (lambda * lambda + hq * hq) * hpp / e.powi(3)
}

// ---------------------------------------------------------------------------
// criteria

fn c1() -> Outcome {
    let x = x_star();
    let res = (x.exp() - x - 5.0).abs();
    outcome((x - 1.9368).abs() <= 1e-4 && res <= 1e-9, format!("x* = {x:.10}, |e^x - x - 5| = {res:.1e}"))
}

fn c2() -> Outcome {
    let p0 = -3.2;
    let d = 1.0;
    let par = PhysicalParameters::homogeneous(G, d, 0.3, p0, 1.0).unwrap();
    let (f, _) = shoot_depth(&par, &LaminarOptions::default()).unwrap();
    let mu = p0 * p0 / (d * d);
    let mu_err = ((f.mu - mu) / mu).abs();
    let h_err = f.p.iter().zip(&f.h).map(|(p, h)| (h - d * (p - p0) / p0.abs()).abs()).fold(0.0, f64::max);
    outcome(mu_err <= 1e-10 && h_err <= 1e-10, format!("mu rel err {mu_err:.1e}, H sup err {h_err:.1e}"))
}

fn c3() -> Outcome {
    let (c, p0, mu) = (0.4, -2.0, 4.0);
    let prof = StratificationProfile::new(p0, Density::Constant(1.0), Bernoulli::SqrtSingular { c, p0 }, None).unwrap();
    let par = PhysicalParameters::new(G, 1.0, 1.0, prof).unwrap();
    let n = 256;
    let f = picard_solve(&par, default_grid(&par, n), mu, 1e-13).unwrap();
    // h(p) = ∫ dr/√(μ - 2B(r)), B = 2c√(r - p0); r = p0 + s² removes the
    // endpoint singularity. Tolerance is set for a 10x finer resolution.
    let integrand = |s: f64| 2.0 * s / (mu - 4.0 * c * s).sqrt();
    let mut worst: f64 = 0.0;
    for (k, &p) in f.p.iter().enumerate() {
        let exact = simpson(&integrand, 0.0, (p - p0).sqrt(), 1e-15);
        worst = worst.max((f.h[k] - exact).abs());
    }
    outcome(worst <= 1e-7, format!("sup |h - explicit| = {worst:.1e} over {} nodes", f.p.len()))
}

fn c4() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for sigma in [0.1, 0.3, 1.0] {
        let t = Instant::now();
        let par = PhysicalParameters::homogeneous(G, 1.0, sigma, -3.2, 1.0).unwrap();
        let f = laminar(&par);
        let oracle = dispersion_oracle(G, 1.0, 1.0, -3.2, sigma);
        let scan = largest_root_theta(&f, 1.0, &DispersionOptions::default(), Exec::Parallel).unwrap();
        let rel = ((scan.theta - oracle) / oracle).abs();
        let dt = t.elapsed();
        pass &= rel <= 1e-6 && scan.roots.len() == 1 && dt < Duration::from_secs(5);
        parts.push(format!("sigma {sigma}: rel {rel:.1e}, roots {}, {:.2}s", scan.roots.len(), dt.as_secs_f64()));
    }
    outcome(pass, parts.join("; "))
}

fn admissible(par: &PhysicalParameters, f: &LaminarFlow) -> (bool, String) {
    let r2 = check_res2(par).map(|r| r.holds).unwrap_or(false);
    let r3 = check_res3(par).map(|r| r.holds).unwrap_or(false);
    let ct = check_cthe0(f).holds;
    let w0 = check_w0_nondegenerate(f, &OdeOptions::default()).map(|w| w.holds).unwrap_or(false);
    let bad: Vec<&str> =
        [("RES2", r2), ("RES3", r3), ("CTHE0", ct), ("W0", w0)].iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    (bad.is_empty(), if bad.is_empty() { "admissible".into() } else { format!("fails {}", bad.join(",")) })
}

fn c5() -> Outcome {
    // the scaling law must hold on at least one admissible stratified profile
    let mut any = false;
    let mut parts = Vec::new();
    for p0 in [-4.0, -5.0] {
        let par = stratified(p0, 0.3);
        let f = laminar(&par);
        let (ok, adm) = admissible(&par, &f);
        // 1.3 is not a power of two, so its θ/λ² is not an exact rescaling
        let ratios: Vec<f64> = [0.5, 1.0, 2.0, 1.3]
            .iter()
            .map(|&l| largest_root_theta(&f, l, &DispersionOptions::default(), Exec::Parallel).unwrap().theta / (l * l))
            .collect();
        let spread = |r: &[f64]| {
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            r.iter().map(|v| ((v - mean) / mean).abs()).fold(0.0, f64::max)
        };
        let s3 = spread(&ratios[..3]);
        any |= ok && s3 <= 1e-6;
        parts.push(format!("p0 {p0}: spread {s3:.1e} (with 1.3: {:.1e}), {adm}", spread(&ratios)));
    }
    outcome(any, parts.join("; "))
}

fn c6() -> Outcome {
    let f = laminar(&stratified(-5.0, 0.3));
    let o = DispersionOptions::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for l in [0.7, 1.0, 1.6] {
        let th = largest_root_theta(&f, l, &o, Exec::Parallel).unwrap().theta;
        let c = wronskian_identity_check(&f, l, th, &o.ode).unwrap();
        // the identity itself: W_θ/W_λ = -λ/(2θ)
        let expected = -l / (2.0 * th);
        let rel = ((c.w_theta / c.w_lambda - expected) / expected).abs();
        let sign = c.w1_top * c.w_lambda < 0.0;
        pass &= rel <= 1e-4 && sign;
        parts.push(format!("lambda {l}: rel {rel:.1e}, sign {}", if sign { "ok" } else { "wrong" }));
    }
    outcome(pass, parts.join("; "))
}

fn c7() -> Outcome {
    let f = laminar(&stratified(-5.0, 0.3));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..6 {
        let l = rng.gen_range(0.3..3.0);
        let th = rng.gen_range(0.0..200.0);
        worst = worst.max(wronskian_constancy(&f, l, th, &OdeOptions::default()).unwrap());
    }
    outcome(worst <= 1e-8, format!("max relative variation {worst:.1e} over 6 samples"))
}

/// Shared state for the branch criteria: stratified `ρ̄ = 1 - 0.05p`, `β = 0`,
/// `p0 = -5`, `σ = 10` on the 64 x 128 grid.
struct BranchCase {
    flow: LaminarFlow,
    disp: DispersionResult,
    set: BranchSetup,
}

fn branch_case() -> BranchCase {
    let flow = laminar(&stratified(-5.0, 10.0));
    let disp = dispersion_constant(&flow, &DispersionOptions::default(), Exec::Parallel).unwrap();
    let set = branch::setup(&flow, &disp.kernel(), 64, 128, Exec::Parallel).unwrap();
    BranchCase { flow, disp, set }
}

fn c8(bc: &BranchCase) -> Outcome {
    let disc = &bc.set.disc;
    let crit = &bc.set.critical;
    let (j, _) = disc.jacobian(&vec![0.0; disc.n()], crit.lambda).unwrap();
    let sp = spectrum(&j, 40).unwrap();
    let w = disc.grid.weights();
    let angle = angle_w(&w, &sp.kernel, &bc.set.wstar);
    let ratio = sp.sigma_min / sp.norm;
    let lam_rel = (crit.lambda - bc.disp.lambda_star) / bc.disp.lambda_star;
    outcome(
        ratio <= 1e-6 && angle <= 1e-3 && bc.disp.transversality > 0.0,
        format!(
            "sigma_min/|J| = {ratio:.1e} at discrete lambda* (rel offset {lam_rel:.1e}), angle to w* {angle:.1e}, transversality {:.3e}",
            bc.disp.transversality
        ),
    )
}

fn c9(bc: &BranchCase, run: &BranchRun) -> Outcome {
    let disc = &bc.set.disc;
    let crit = &bc.set.critical;
    let w = disc.grid.weights();
    let mut bad = Vec::new();
    for (dir, pts) in [("+", &run.plus), ("-", &run.minus)] {
        if pts.len() < 6 {
            bad.push(format!("{dir}: only {} points", pts.len() - 1));
        }
        for (k, p) in pts.iter().enumerate().skip(1) {
            let d = &p.diagnostics;
            let ok = p.residual_norm <= 1e-10
                && d.crest_count == 2
                && d.monotone_ok
                && d.even_defect <= 1e-10
                && d.eta_mean.abs() <= 1e-9
                && d.min_hp_total > 0.0;
            if !ok {
                bad.push(format!("{dir}{k}: {d:?} residual {:.1e}", p.residual_norm));
            }
        }
    }
    // amplitude fits over the first three points
    let pts = &run.plus[1..4];
    let s: Vec<f64> = pts.iter().map(|p| p.s).collect();
    let dl: Vec<f64> = pts.iter().map(|p| p.lambda - crit.lambda).collect();
    let cl = polyfit(&s, &dl, 3);
    let scale = dl.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // λ(0) = λ*: the intercept is small against the variation being fitted
    let lambda_ok = cl[0].abs() <= 0.05 * scale;
    let c_lambda = s.iter().zip(&dl).map(|(s, d)| (d / s).abs()).fold(0.0, f64::max);
    let dev = |v: &[f64]| -> Vec<f64> {
        pts.iter()
            .map(|p| {
                let r: Vec<f64> = p.h.iter().zip(v).map(|(h, v)| h - p.s * v).collect();
                wnorm(&w, &r) / p.s.abs()
            })
            .collect()
    };
    let abs_s: Vec<f64> = s.iter().map(|v| v.abs()).collect();
    let fit_h = polyfit(&abs_s, &dev(&crit.kernel), 2);
    // χ(0) = 0: no O(1) part left in |h - s v|/|s| at the smallest amplitude
    let h_ok = fit_h[1] > 0.0 && fit_h[0].abs() <= 0.05 * fit_h[1] * abs_s[0];
    let fit_w = polyfit(&abs_s, &dev(&bc.set.wstar), 2);
    let pass = bad.is_empty() && lambda_ok && h_ok;
    let mut detail = format!(
        "{}+{} points; lambda fit c0 {:.1e} (scale {scale:.1e}), C = {c_lambda:.2}; |h - s v|/|s| = {:.1e} + {:.2}|s|; against sampled w*: {:.1e} + {:.2}|s|",
        run.plus.len() - 1,
        run.minus.len() - 1,
        cl[0],
        fit_h[0],
        fit_h[1],
        fit_w[0],
        fit_w[1]
    );
    if !bad.is_empty() {
        detail.push_str(&format!("; {}", bad.join("; ")));
    }
    outcome(pass, detail)
}

/// Branch point with `⟨w*, h⟩ = s⟨w*, w*⟩` on an `nq x np` grid.
fn point_at(flow: &LaminarFlow, disp: &DispersionResult, nq: usize, np: usize, s: f64) -> (Discretization, State) {
    let set = branch::setup(flow, &disp.kernel(), nq, np, Exec::Parallel).unwrap();
    let opts = ContinuationOptions { n_steps: 12, ds: 0.02, ..Default::default() };
    let run = continue_branch(&set.disc, &set.critical, &set.wstar, flow.depth_error(), &opts);
    let best = run.plus.iter().min_by(|a, b| (a.s - s).abs().total_cmp(&(b.s - s).abs())).unwrap();
    let ws = &set.wstar;
    let tangent = State { h: ws.clone(), lambda: 0.0 };
    let pred = State { h: ws.iter().map(|v| s * v).collect(), lambda: best.lambda };
    let start = State { h: best.h.clone(), lambda: best.lambda };
    let c = Constraint::Arclength { tangent: &tangent, pred: &pred };
    let (st, _) = newton_correct(&set.disc, &start, &c, &NewtonOptions::default()).unwrap();
    (set.disc, st)
}

fn c10(bc: &BranchCase) -> Outcome {
    let sigma = bc.flow.params.sigma;
    let s = 5e-3;
    let mut errs: Vec<[f64; 5]> = Vec::new();
    let mut bnd: f64 = 0.0;
    let mut rho_var = Vec::new();
    let mut head_var = Vec::new();
    for (nq, np) in [(16, 32), (32, 64), (64, 128)] {
        let (disc, st) = point_at(&bc.flow, &bc.disp, nq, np, s);
        let hs = HeightSampler::new(&bc.flow, &disc.grid, &st.h, st.lambda);
        let ff = FlowField::sample(&hs, nq, np + 1, ColumnSpacing::Uniform, Exec::Parallel).unwrap();
        let r = euler_residuals(&ff, G, sigma);
        let i = r.interior();
        errs.push([i[0], i[1], i[2], i[3], r.dynamic]);
        bnd = bnd.max(r.kinematic).max(r.bottom).max(r.mean_zero);
        let levels: Vec<f64> = (1..10).map(|k| 5.0 * k as f64 / 10.0).collect();
        rho_var.push(streamline_variation(&ff, &ff.rho, &levels));
        head_var.push(streamline_variation(&ff, &ff.head(G), &levels));
    }
    let names = ["momentum_x", "momentum_y", "density", "incompressibility", "dynamic"];
    let mut min_order = f64::INFINITY;
    let mut parts = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let e: Vec<f64> = errs.iter().map(|r| r[k]).collect();
        let o = observed_orders(&e);
        min_order = min_order.min(o[1]);
        parts.push(format!("{name} {:.2}/{:.2}", o[0], o[1]));
    }
    // ρ and E are functions of ψ up to the column interpolation: either at
    // rounding level or shrinking at second order
    let second = |v: &[f64]| v[2] <= 1e-8 || observed_orders(v)[1] >= 1.8;
    let pass = min_order >= 1.8 && bnd <= 1e-8 && second(&rho_var) && second(&head_var);
    outcome(
        pass,
        format!(
            "orders {}; boundary/mean {bnd:.1e}; streamline variation rho {:.1e}, E {:.1e}",
            parts.join(", "),
            rho_var[2],
            head_var[2]
        ),
    )
}

fn c11() -> Outcome {
    let f = laminar(&stratified(-5.0, 10.0));
    let disc = Discretization::new(&f, 32, 48, Exec::Parallel);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p0 = disc.grid.p0;
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let coef: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.01..0.01)).collect();
        let h = disc.grid.sample(|q, p| {
            let z = 1.0 - p / p0;
            (0..6).map(|k| coef[k] * z * (1.0 + 0.5 * z * k as f64) * (2.0 * PI * (k + 1) as f64 * q).cos()).sum()
        });
        let lambda = rng.gen_range(2.5..3.5);
        let dirs: Vec<Vec<f64>> = (0..10).map(|_| (0..disc.n()).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let c = fd_check(&disc, &h, lambda, &dirs).unwrap();
        worst = worst.max(c.max_rel_err).max(c.lambda_rel_err);
    }
    outcome(worst <= 1e-6, format!("max relative error {worst:.1e} over 3 states x 10 directions"))
}

/// Interior rows of a smooth non-solution converge to the continuum
/// operator at second order.
fn manufactured() -> Outcome {
    let p0 = -3.2;
    let par = PhysicalParameters::homogeneous(G, 1.0, 1.0, p0, 1.0).unwrap();
    let f = laminar(&par);
    let big_hp = 1.0 / p0.abs();
    let lambda = 1.3;
    let a = 0.05;
    // h = a·sin(πz/2)·cos 2πq + a/2·z²·cos 4πq, z = (p - p0)/|p0|
    let hm = |q: f64, p: f64| -> [f64; 6] {
        let z = (p - p0) / p0.abs();
        let zp = 1.0 / p0.abs();
        let (s1, c1) = ((PI * z / 2.0).sin(), (PI * z / 2.0).cos());
        let (cq, sq) = ((2.0 * PI * q).cos(), (2.0 * PI * q).sin());
        let (cq2, sq2) = ((4.0 * PI * q).cos(), (4.0 * PI * q).sin());
        let k = PI / 2.0 * zp;
        let h = a * s1 * cq + 0.5 * a * z * z * cq2;
        let hq = -a * s1 * 2.0 * PI * sq - 0.5 * a * z * z * 4.0 * PI * sq2;
        let hp = a * k * c1 * cq + a * z * zp * cq2;
        let hqq = -a * s1 * 4.0 * PI * PI * cq - 0.5 * a * z * z * 16.0 * PI * PI * cq2;
        let hqp = -a * k * c1 * 2.0 * PI * sq - a * z * zp * 4.0 * PI * sq2;
        let hpp = -a * k * k * s1 * cq + a * zp * zp * cq2;
        [h, hq, hp, hqq, hqp, hpp]
    };
    let mut errs = Vec::new();
    for (nq, np) in [(16, 16), (32, 32), (64, 64)] {
        let disc = Discretization::new(&f, nq, np, Exec::Parallel);
        let h = disc.grid.sample(|q, p| hm(q, p)[0]);
        let r = disc.residual(&h, lambda).unwrap();
        let g = disc.grid;
        let mut worst: f64 = 0.0;
        for j in 1..g.np {
            for i in 0..g.m {
                let d = hm(g.q(i), g.p(j));
                let exact = manufactured_operator(d[1], d[2], d[3], d[4], d[5], big_hp, lambda);
                worst = worst.max((r[(j - 1) * g.m + i] - exact).abs());
            }
        }
        errs.push(worst);
    }
    let o = observed_orders(&errs);
    let ratio = errs[1] / errs[2];
    outcome(
        (3.0..5.5).contains(&ratio),
        format!("interior errors {:.2e}, {:.2e}, {:.2e}; orders {:.2}, {:.2}", errs[0], errs[1], errs[2], o[0], o[1]),
    )
}

/// `‖F(ε v, λ*)‖` is quadratic in `ε` along the kernel direction.
fn kernel_remainder(bc: &BranchCase) -> Outcome {
    let disc = &bc.set.disc;
    let crit = &bc.set.critical;
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, v, lambda) in
        [("discrete kernel", &crit.kernel, crit.lambda), ("sampled w*", &bc.set.wstar, bc.disp.lambda_star)]
    {
        let r: Vec<f64> = [1e-3, 1e-4]
            .iter()
            .map(|&e| inf(&disc.residual(&v.iter().map(|x| e * x).collect::<Vec<f64>>(), lambda).unwrap()))
            .collect();
        // r(ε) = c1 ε + c2 ε² from the two samples
        let c2 = (r[0] / 1e-3 - r[1] / 1e-4) / (1e-3 - 1e-4);
        let c1 = r[1] / 1e-4 - c2 * 1e-4;
        let order = (r[0] / r[1]).log10();
        if name == "discrete kernel" {
            pass &= order >= 1.9;
        }
        parts.push(format!("{name}: order {order:.3}, C = {c2:.3e}, linear part {c1:.1e}"));
    }
    outcome(pass, parts.join("; "))
}

fn main() {
    let mut results: Vec<(String, Outcome, f64)> = Vec::new();
    let mut run = |name: &str, budget: f64, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let mut o = f();
        let dt = t.elapsed().as_secs_f64();
        if dt > budget {
            o.pass = false;
            o.detail.push_str(&format!("; over the {budget}s budget"));
        }
        let line = format!("{:<28} {} ({dt:.3}s) {}", name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        println!("{line}");
        results.push((name.to_string(), o, dt));
    };
    run("criterion 1  x* root", 1e-3, &mut c1);
    run("criterion 2  laminar ρ≡1", 0.1, &mut c2);
    run("criterion 3  singular B", 1.0, &mut c3);
    run("criterion 4  dispersion", 15.0, &mut c4);
    run("criterion 5  scaling law", 10.0, &mut c5);
    run("criterion 6  identity", 5.0, &mut c6);
    run("criterion 7  Wronskian", 2.0, &mut c7);
    let t = Instant::now();
    let bc = branch_case();
    let setup = t.elapsed().as_secs_f64();
    run("criterion 8  kernel", 30.0 - setup, &mut || c8(&bc));
    let mut branch_run = None;
    run("criterion 9  branch", 120.0, &mut || {
        let opts = ContinuationOptions { n_steps: 6, ds: 0.02, ..Default::default() };
        let r = continue_branch(&bc.set.disc, &bc.set.critical, &bc.set.wstar, bc.flow.depth_error(), &opts);
        let o = c9(&bc, &r);
        branch_run = Some(r);
        o
    });
    run("criterion 10 fields", 60.0, &mut || c10(&bc));
    run("criterion 11 Jacobian", 30.0, &mut c11);
    run("manufactured solution", 10.0, &mut manufactured);
    run("kernel remainder", 10.0, &mut || kernel_remainder(&bc));
    let failed: Vec<&str> = results.iter().filter(|r| !r.1.pass).map(|r| r.0.as_str()).collect();
    println!("acceptance: {} of {} passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
