//! Newton correction, the discrete critical wavelength, and pseudo-arclength
//! continuation of the bifurcating branch.

use serde::Serialize;

use super::diagnostics::{profile_diagnostics, ProfileDiagnostics};
use super::discretization::Discretization;
use crate::error::{NumericalError, SolverError};
use crate::numerics::banded::{BandLu, BandMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 25, max_halvings: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuationOptions {
    pub n_steps: usize,
    pub ds: f64,
    /// give up once `ds` falls below this
    pub ds_min: f64,
    pub grow: f64,
    /// Newton iterations at or below which `ds` grows
    pub fast: usize,
    pub newton: NewtonOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self { n_steps: 8, ds: 0.02, ds_min: 1e-6, grow: 1.3, fast: 4, newton: NewtonOptions::default() }
    }
}

/// `(h, λ)`
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub h: Vec<f64>,
    pub lambda: f64,
}

pub enum Constraint<'a> {
    FixedLambda,
    /// `⟨t_h, h - h_pred⟩ + t_λ(λ - λ_pred) = 0`
    Arclength {
        tangent: &'a State,
        pred: &'a State,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residual: f64,
    pub halvings: usize,
}

pub(crate) fn dot_w(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

fn inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solve `[A c; bᵀ d][x; y] = [f; g]` by block elimination with two rounds
/// of iterative refinement on the full bordered system.
pub fn bordered_solve(a: &BandMatrix, lu: &BandLu, c: &[f64], b: &[f64], d: f64, f: &[f64], g: f64) -> (Vec<f64>, f64) {
    let z = lu.solve(c);
    let den = d - b.iter().zip(&z).map(|(p, q)| p * q).sum::<f64>();
    let once = |f: &[f64], g: f64| -> (Vec<f64>, f64) {
        let x1 = lu.solve(f);
        let y = (g - b.iter().zip(&x1).map(|(p, q)| p * q).sum::<f64>()) / den;
        let x: Vec<f64> = x1.iter().zip(&z).map(|(p, q)| p - q * y).collect();
        (x, y)
    };
    let (mut x, mut y) = once(f, g);
    for _ in 0..2 {
        let ax = a.matvec(&x);
        let rf: Vec<f64> = (0..f.len()).map(|i| f[i] - ax[i] - c[i] * y).collect();
        let rg = g - b.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - d * y;
        let (dx, dy) = once(&rf, rg);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        y += dy;
    }
    (x, y)
}

fn constraint_value(w: &[f64], h: &[f64], lambda: f64, c: &Constraint) -> f64 {
    match c {
        Constraint::FixedLambda => 0.0,
        Constraint::Arclength { tangent, pred } => {
            let dh: Vec<f64> = h.iter().zip(&pred.h).map(|(a, b)| a - b).collect();
            dot_w(w, &tangent.h, &dh) + tangent.lambda * (lambda - pred.lambda)
        }
    }
}

/// Damped Newton on `F = 0` plus the constraint.
pub fn newton_correct(
    disc: &Discretization,
    start: &State,
    constraint: &Constraint,
    opts: &NewtonOptions,
) -> Result<(State, NewtonStats), NumericalError> {
    let w = disc.grid.weights();
    let mut st = start.clone();
    let mut f = disc.residual(&st.h, st.lambda)?;
    let mut res = inf(&f).max(constraint_value(&w, &st.h, st.lambda, constraint).abs());
    let mut halvings = 0;
    for it in 0..=opts.max_iter {
        if res <= opts.tol {
            return Ok((st, NewtonStats { iterations: it, residual: res, halvings }));
        }
        if it == opts.max_iter {
            break;
        }
        let (jac, lcol) = disc.jacobian(&st.h, st.lambda)?;
        let lu = jac.lu()?;
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let (dh, dl) = match constraint {
            Constraint::FixedLambda => (lu.solve(&rhs), 0.0),
            Constraint::Arclength { tangent, .. } => {
                let b: Vec<f64> = tangent.h.iter().zip(&w).map(|(t, w)| t * w).collect();
                let nv = constraint_value(&w, &st.h, st.lambda, constraint);
                bordered_solve(&jac, &lu, &lcol, &b, tangent.lambda, &rhs, -nv)
            }
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for k in 0..=opts.max_halvings {
            let trial =
                State { h: st.h.iter().zip(&dh).map(|(a, b)| a + alpha * b).collect(), lambda: st.lambda + alpha * dl };
            if let Ok(ft) = disc.residual(&trial.h, trial.lambda) {
                let rt = inf(&ft).max(constraint_value(&w, &trial.h, trial.lambda, constraint).abs());
                if rt < res {
                    st = trial;
                    f = ft;
                    res = rt;
                    halvings += k;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(NumericalError::NoConvergence {
                what: "Newton line search",
                iterations: it + 1,
                residual: res,
            });
        }
    }
    Err(NumericalError::NoConvergence { what: "Newton", iterations: opts.max_iter, residual: res })
}

/// The discrete critical wavelength and kernel of `∂_h F(λ, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub lambda: f64,
    /// kernel vector, normalised by `⟨w*, v⟩ = ⟨w*, w*⟩`
    #[serde(skip)]
    pub kernel: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Newton on `J(λ)v = 0`, `⟨w*, v⟩ = ⟨w*, w*⟩`. At `h = 0` the Jacobian is
/// exactly `J0 + λ²J2`, so `∂_λ(Jv) = 2λ J2 v` comes from two assemblies.
pub fn discrete_critical(
    disc: &Discretization,
    lambda_guess: f64,
    wstar: &[f64],
) -> Result<CriticalPoint, SolverError> {
    let n = disc.n();
    let zero = vec![0.0; n];
    let w = disc.grid.weights();
    let b: Vec<f64> = wstar.iter().zip(&w).map(|(a, w)| a * w).collect();
    let target = dot_w(&w, wstar, wstar);
    let mut v = wstar.to_vec();
    let mut lambda = lambda_guess;
    let mut dl_last = f64::INFINITY;
    for it in 1..=40 {
        let (j, _) = disc.jacobian(&zero, lambda)?;
        let (jh, _) = disc.jacobian(&zero, 0.5 * lambda)?;
        let jv = j.matvec(&v);
        let jhv = jh.matvec(&v);
        let dl2 = lambda * lambda * 0.75;
        let c: Vec<f64> = jv.iter().zip(&jhv).map(|(a, b)| 2.0 * lambda * (a - b) / dl2).collect();
        let g = dot_w(&w, wstar, &v) - target;
        let lu = j.lu()?;
        let rhs: Vec<f64> = jv.iter().map(|x| -x).collect();
        let (dv, dl) = bordered_solve(&j, &lu, &c, &b, 0.0, &rhs, -g);
        for (a, d) in v.iter_mut().zip(&dv) {
            *a += d;
        }
        lambda += dl;
        let dl_prev = std::mem::replace(&mut dl_last, dl.abs());
        // stop at the rounding floor: tiny and no longer shrinking
        let small = dl.abs() <= 1e-10 * lambda && inf(&dv) <= 1e-8 * inf(&v);
        if small && (dl.abs() <= 1e-14 * lambda || dl.abs() >= 0.5 * dl_prev) {
            let (j, _) = disc.jacobian(&zero, lambda)?;
            let residual = inf(&j.matvec(&v));
            return Ok(CriticalPoint { lambda, kernel: v, iterations: it, residual });
        }
    }
    Err(NumericalError::NoConvergence { what: "discrete critical wavelength", iterations: 40, residual: f64::NAN }
        .into())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationPoint {
    pub lambda: f64,
    /// amplitude coordinate `⟨h, w*⟩/⟨w*, w*⟩`
    pub s: f64,
    #[serde(skip)]
    pub h: Vec<f64>,
    pub residual_norm: f64,
    pub newton_iterations: usize,
    pub ds: f64,
    pub diagnostics: ProfileDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BranchStatus {
    Completed,
    /// step size fell below the floor; carries the last error
    StepCollapse(String),
    EllipticityLost,
    FirstStepFailed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRun {
    pub critical: CriticalPoint,
    /// both directions; `[0]` is the laminar point in each
    pub plus: Vec<ContinuationPoint>,
    pub minus: Vec<ContinuationPoint>,
    pub status_plus: BranchStatus,
    pub status_minus: BranchStatus,
}

fn tangent_at(disc: &Discretization, st: &State, prev: &State) -> Result<State, NumericalError> {
    let w = disc.grid.weights();
    let (jac, lcol) = disc.jacobian(&st.h, st.lambda)?;
    let lu = jac.lu()?;
    let b: Vec<f64> = prev.h.iter().zip(&w).map(|(t, w)| t * w).collect();
    let zero = vec![0.0; st.h.len()];
    let (th, tl) = bordered_solve(&jac, &lu, &lcol, &b, prev.lambda, &zero, 1.0);
    let norm = (dot_w(&w, &th, &th) + tl * tl).sqrt();
    Ok(State { h: th.iter().map(|v| v / norm).collect(), lambda: tl / norm })
}

/// Trace one direction of the branch from the critical point.
fn trace(
    disc: &Discretization,
    crit: &CriticalPoint,
    wstar: &[f64],
    depth_error: f64,
    sign: f64,
    opts: &ContinuationOptions,
) -> (Vec<ContinuationPoint>, BranchStatus) {
    let w = disc.grid.weights();
    let ww = dot_w(&w, wstar, wstar);
    let vnorm = dot_w(&w, &crit.kernel, &crit.kernel).sqrt();
    let mut tangent = State { h: crit.kernel.iter().map(|v| sign * v / vnorm).collect(), lambda: 0.0 };
    let mut cur = State { h: vec![0.0; disc.n()], lambda: crit.lambda };
    let point = |st: &State, stats: NewtonStats, ds: f64| ContinuationPoint {
        lambda: st.lambda,
        s: dot_w(&w, &st.h, wstar) / ww,
        h: st.h.clone(),
        residual_norm: stats.residual,
        newton_iterations: stats.iterations,
        ds,
        diagnostics: profile_diagnostics(disc, &st.h, depth_error),
    };
    let mut pts = vec![point(&cur, NewtonStats { iterations: 0, residual: 0.0, halvings: 0 }, 0.0)];
    let mut ds = opts.ds;
    let mut last_err = String::new();
    while pts.len() <= opts.n_steps {
        if ds < opts.ds_min {
            let status = if pts.len() == 1 {
                BranchStatus::FirstStepFailed(format!("no step accepted from (λ*, w*): {last_err}"))
            } else if last_err.contains("ellipticity") {
                BranchStatus::EllipticityLost
            } else {
                BranchStatus::StepCollapse(last_err)
            };
            return (pts, status);
        }
        let pred = State {
            h: cur.h.iter().zip(&tangent.h).map(|(a, t)| a + ds * t).collect(),
            lambda: cur.lambda + ds * tangent.lambda,
        };
        match newton_correct(disc, &pred, &Constraint::Arclength { tangent: &tangent, pred: &pred }, &opts.newton) {
            Ok((st, stats)) => {
                let next_t = match tangent_at(disc, &st, &tangent) {
                    Ok(t) => t,
                    Err(e) => {
                        last_err = e.to_string();
                        ds *= 0.5;
                        continue;
                    }
                };
                pts.push(point(&st, stats, ds));
                tangent = next_t;
                cur = st;
                if stats.iterations <= opts.fast {
                    ds = (ds * opts.grow).min(opts.ds);
                }
            }
            Err(e) => {
                last_err = e.to_string();
                ds *= 0.5;
            }
        }
    }
    (pts, BranchStatus::Completed)
}

/// Both directions of the branch from `(λ*_h, 0)` along `±v_h`.
pub fn continue_branch(
    disc: &Discretization,
    crit: &CriticalPoint,
    wstar: &[f64],
    depth_error: f64,
    opts: &ContinuationOptions,
) -> BranchRun {
    let (plus, status_plus) = trace(disc, crit, wstar, depth_error, 1.0, opts);
    let (minus, status_minus) = trace(disc, crit, wstar, depth_error, -1.0, opts);
    BranchRun { critical: crit.clone(), plus, minus, status_plus, status_minus }
}
