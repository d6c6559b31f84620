//! One function per subcommand. Each writes its files under `out` and returns
//! the JSON summary printed on stdout.

use std::path::Path;

use serde_json::{json, Value};
use stratwave::branch::{self, BranchRun, BranchStatus, ContinuationPoint, Discretization};
use stratwave::config::RunConfig;
use stratwave::dispersion::{analytic_dispersion, check_w0_nondegenerate, dispersion_constant, DispersionResult};
use stratwave::fields::{euler_residuals, FlowField, HeightSampler};
use stratwave::io::{float_map, to_json, Csv};
use stratwave::laminar::{laminar_residual, shoot_depth, LaminarFlow, ShootReport};
use stratwave::numerics::ode::OdeOptions;
use stratwave::profiles::{check_cthe0, check_res2, check_res3, PhysicalParameters};
use stratwave::{Exec, SolverError};

pub struct Report {
    pub summary: String,
    /// set when a mathematical condition failed (exit 1)
    pub failure: Option<String>,
}

fn write(path: &Path, text: &str) -> Result<(), SolverError> {
    std::fs::write(path, text).map_err(|e| SolverError::Config(format!("{}: {e}", path.display())))
}

fn finish(out: &Path, name: &str, v: &Value, failure: Option<String>) -> Result<Report, SolverError> {
    let text = to_json(v);
    write(&out.join(format!("{name}.json")), &text)?;
    Ok(Report { summary: text, failure })
}

fn solve_laminar(cfg: &RunConfig) -> Result<(PhysicalParameters, LaminarFlow, ShootReport), SolverError> {
    let params = cfg.physical()?;
    let (flow, rep) = shoot_depth(&params, &cfg.laminar_options())?;
    Ok((params, flow, rep))
}

pub fn check(cfg: &RunConfig, out: &Path) -> Result<Report, SolverError> {
    let params = cfg.physical()?;
    let res2 = check_res2(&params)?;
    let mut failed: Vec<&str> = Vec::new();
    let mut report = json!({ "res2": res2 });
    if !res2.holds {
        failed.push("RES2");
        report["failed"] = json!(failed);
        return finish(out, "check", &report, Some("RES2".into()));
    }
    let res3 = check_res3(&params)?;
    report["res3"] = json!(res3);
    if !res3.holds {
        failed.push("RES3");
    }
    let (flow, rep) = shoot_depth(&params, &cfg.laminar_options())?;
    let cthe0 = check_cthe0(&flow);
    let w0 = check_w0_nondegenerate(&flow, &OdeOptions::default())?;
    if !cthe0.holds {
        failed.push("CTHE0");
    }
    if !w0.holds {
        failed.push("W0");
    }
    report["laminar"] = json!({ "mu": flow.mu, "h0_error": rep.h0_error });
    report["cthe0"] = json!(cthe0);
    report["w0"] = json!(w0);
    report["failed"] = json!(failed);
    let failure = if failed.is_empty() { None } else { Some(failed.join(", ")) };
    finish(out, "check", &report, failure)
}

pub fn laminar(cfg: &RunConfig, out: &Path) -> Result<Report, SolverError> {
    let (_, flow, rep) = solve_laminar(cfg)?;
    let mut csv = Csv::new(&["p", "H", "Hp", "a", "A"]);
    for k in 0..flow.p.len() {
        csv.floats(&[flow.p[k], flow.h[k], flow.hp[k], flow.a[k], flow.a_int[k]]);
    }
    write(&out.join("laminar.csv"), csv.as_str())?;
    let cthe0 = check_cthe0(&flow);
    let mut v = float_map(&[("mu", flow.mu), ("H0_error", rep.h0_error), ("residual", laminar_residual(&flow))]);
    v["cthe0_holds"] = json!(cthe0.holds);
    v["shooting"] = json!(rep);
    finish(out, "laminar", &v, None)
}

fn solve_dispersion(cfg: &RunConfig, flow: &LaminarFlow) -> Result<DispersionResult, SolverError> {
    dispersion_constant(flow, &cfg.dispersion_options(), Exec::Parallel)
}

pub fn dispersion(cfg: &RunConfig, out: &Path) -> Result<Report, SolverError> {
    let (params, flow, _) = solve_laminar(cfg)?;
    let r = solve_dispersion(cfg, &flow)?;
    let mut t = Csv::new(&["lambda", "theta", "theta_over_lambda2"]);
    for (l, th) in r.lambda_samples.iter().zip(&r.theta_of_lambda) {
        t.floats(&[*l, *th, th / (l * l)]);
    }
    write(&out.join("dispersion_theta.csv"), t.as_str())?;
    let mut w = Csv::new(&["p", "w1", "z1"]);
    for k in 0..r.w1_profile.p.len() {
        w.floats(&[r.w1_profile.p[k], r.w1_profile.w[k], r.w1_profile.z[k]]);
    }
    write(&out.join("dispersion_w1.csv"), w.as_str())?;
    let mut v = float_map(&[
        ("C_D", r.c_d),
        ("lambda_star", r.lambda_star),
        ("transversality", r.transversality),
        ("transversality_fd", r.transversality_fd),
        ("scaling_deviation", r.scaling_deviation),
    ]);
    v["root_count"] = json!(r.root_count);
    v["warnings"] = json!(r.warnings);
    v["modes"] = json!(r.modes);
    if params.profile.is_homogeneous_irrotational() {
        if let Ok(a) = analytic_dispersion(&params) {
            v["C_D_analytic"] = json!(a);
            v["analytic_rel_gap"] = json!(((r.c_d - a) / a).abs());
        }
    }
    finish(out, "dispersion", &v, None)
}

struct BranchOutcome {
    flow: LaminarFlow,
    disc: Discretization,
    run: BranchRun,
}

fn trace(cfg: &RunConfig) -> Result<BranchOutcome, SolverError> {
    let (_, flow, _) = solve_laminar(cfg)?;
    let disp = solve_dispersion(cfg, &flow)?;
    branch::check_preconditions(&disp)?;
    let b = &cfg.branch;
    let set = branch::setup(&flow, &disp.kernel(), b.nq, b.np, Exec::Parallel)?;
    let run =
        branch::continue_branch(&set.disc, &set.critical, &set.wstar, flow.depth_error(), &cfg.continuation_options());
    Ok(BranchOutcome { flow, disc: set.disc, run })
}

fn point_row(csv: &mut Csv, dir: &str, k: usize, p: &ContinuationPoint) {
    let d = &p.diagnostics;
    csv.row(vec![
        dir.into(),
        k.into(),
        p.s.into(),
        p.lambda.into(),
        p.residual_norm.into(),
        d.eta_mean.into(),
        d.crest_count.into(),
        d.min_hp_total.into(),
        d.eta_inf.into(),
        d.eta_amplitude.into(),
        d.even_defect.into(),
        p.newton_iterations.into(),
    ]);
}

/// Perturbation `h` on the full period, one row per `p_j`.
fn snapshot(disc: &Discretization, h: &[f64]) -> String {
    let g = &disc.grid;
    let mut header = vec!["p".to_string()];
    header.extend((0..g.nq).map(|i| format!("q{i}")));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&hdr);
    for j in 0..=g.np {
        let mut row = vec![g.p(j)];
        row.extend(g.full_row(h, j));
        csv.floats(&row);
    }
    csv.as_str().to_string()
}

fn shape_failures(run: &BranchRun) -> Vec<String> {
    let mut bad = Vec::new();
    for (dir, pts) in [("+", &run.plus), ("-", &run.minus)] {
        for (k, p) in pts.iter().enumerate().skip(1) {
            let d = &p.diagnostics;
            if !d.monotone_ok {
                bad.push(format!("{dir}{k}: {} sign changes of the surface slope", d.crest_count));
            }
            if d.eta_mean.abs() > 1e-9 {
                bad.push(format!("{dir}{k}: surface mean {:e}", d.eta_mean));
            }
            if d.even_defect > 1e-10 {
                bad.push(format!("{dir}{k}: even defect {:e}", d.even_defect));
            }
            if !(d.min_hp_total > 0.0) {
                bad.push(format!("{dir}{k}: min h_p + H' = {:e}", d.min_hp_total));
            }
        }
    }
    bad
}

pub fn branch(cfg: &RunConfig, out: &Path) -> Result<Report, SolverError> {
    let o = trace(cfg)?;
    let run = &o.run;
    let mut csv = Csv::new(&[
        "direction",
        "index",
        "s",
        "lambda",
        "residual",
        "eta_mean",
        "crest_count",
        "min_hp_total",
        "eta_inf",
        "eta_amplitude",
        "even_defect",
        "newton_iterations",
    ]);
    for (dir, pts) in [("+", &run.plus), ("-", &run.minus)] {
        for (k, p) in pts.iter().enumerate() {
            point_row(&mut csv, dir, k, p);
            let every = cfg.branch.snapshot_every;
            if k > 0 && every > 0 && k % every == 0 {
                let tag = if dir == "+" { "plus" } else { "minus" };
                write(&out.join(format!("snapshot_{tag}_{k:03}.csv")), &snapshot(&o.disc, &p.h))?;
            }
        }
    }
    write(&out.join("branch.csv"), csv.as_str())?;
    if matches!(run.status_plus, BranchStatus::FirstStepFailed(_))
        && matches!(run.status_minus, BranchStatus::FirstStepFailed(_))
    {
        return Err(stratwave::NumericalError::Other(format!("no branch point accepted: {:?}", run.status_plus)).into());
    }
    let failures = shape_failures(run);
    let v = json!({
        "config": cfg,
        "critical": run.critical,
        "status_plus": run.status_plus,
        "status_minus": run.status_minus,
        "accepted_plus": run.plus.len() - 1,
        "accepted_minus": run.minus.len() - 1,
        "points_ok": run.plus.len() > 5 && run.minus.len() > 5,
        "shape_ok": failures.is_empty(),
        "shape_failures": failures,
    });
    let failure = if failures.is_empty() { None } else { Some(failures.join("; ")) };
    finish(out, "branch", &v, failure)
}

pub fn reconstruct(cfg: &RunConfig, out: &Path) -> Result<Report, SolverError> {
    let o = trace(cfg)?;
    let pts = &o.run.plus;
    let k = cfg.fields.point.min(pts.len() - 1);
    if k == 0 {
        return Err(stratwave::NumericalError::Other("no non-laminar branch point to reconstruct".into()).into());
    }
    let p = &pts[k];
    let nx = if cfg.fields.nx == 0 { cfg.branch.nq } else { cfg.fields.nx };
    let sampler = HeightSampler::new(&o.flow, &o.disc.grid, &p.h, p.lambda);
    let ff = FlowField::sample(&sampler, nx, cfg.fields.ny, cfg.fields.spacing, Exec::Parallel)?;
    let params = &o.flow.params;
    let res = euler_residuals(&ff, params.g, params.sigma);
    let mut csv = Csv::new(&["x", "y", "u_rel", "v", "P", "rho", "psi"]);
    for n in 0..ff.y.len() {
        let x = ff.x[n / ff.ny()];
        csv.floats(&[x, ff.y[n], ff.u_rel[n], ff.v[n], ff.pressure[n], ff.rho[n], ff.psi[n]]);
    }
    write(&out.join("fields.csv"), csv.as_str())?;
    let mut s = Csv::new(&["x", "eta", "P_surface", "curvature"]);
    for (i, sf) in ff.surface.iter().enumerate() {
        let kappa = sf.eta_xx / (1.0 + sf.eta_x * sf.eta_x).powf(1.5);
        s.floats(&[ff.x[i], sf.eta, ff.pressure[i * ff.ny() + ff.ny() - 1], kappa]);
    }
    write(&out.join("surface.csv"), s.as_str())?;
    let v = json!({
        "point": k,
        "s": p.s,
        "lambda": p.lambda,
        "Q": ff.q,
        "residuals": res,
    });
    finish(out, "reconstruct", &v, None)
}
