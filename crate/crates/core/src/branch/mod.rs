//! Discretised bifurcation problem: operator, continuation, and diagnostics.

pub mod continuation;
pub mod diagnostics;
pub mod discretization;

pub use continuation::{
    bordered_solve, continue_branch, discrete_critical, newton_correct, BranchRun, BranchStatus, Constraint,
    ContinuationOptions, ContinuationPoint, CriticalPoint, NewtonOptions, NewtonStats, State,
};
pub use diagnostics::{angle_w, polyfit, profile_diagnostics, spectrum, ProfileDiagnostics, Spectrum};
pub use discretization::{fd_check, Discretization, FdCheck, Grid, HeightField};

use crate::dispersion::{DispersionResult, KernelMode};
use crate::error::SolverError;
use crate::exec::Exec;
use crate::laminar::LaminarFlow;

/// Refuse to continue when the bifurcation hypotheses visibly fail.
pub fn check_preconditions(disp: &DispersionResult) -> Result<(), SolverError> {
    if !(disp.transversality > 0.0) {
        return Err(SolverError::Condition {
            condition: "transversality",
            detail: format!("transversality integral {:e} is not positive", disp.transversality),
        });
    }
    if let Some(m) = disp.modes.iter().find(|m| m.collides) {
        return Err(SolverError::Condition {
            condition: "kernel collision",
            detail: format!("mode k = {} also lies in the kernel at lambda* = {}", m.k, disp.lambda_star),
        });
    }
    Ok(())
}

/// Discretisation, sampled kernel and discrete critical point for one grid.
pub struct BranchSetup {
    pub disc: Discretization,
    /// `w*` sampled at the unknowns
    pub wstar: Vec<f64>,
    pub critical: CriticalPoint,
}

pub fn setup(
    flow: &LaminarFlow,
    kernel: &KernelMode,
    nq: usize,
    np: usize,
    exec: Exec,
) -> Result<BranchSetup, SolverError> {
    let disc = Discretization::new(flow, nq, np, exec);
    let wstar = disc.grid.sample(|q, p| kernel.eval(q, p));
    let critical = discrete_critical(&disc, kernel.lambda_star, &wstar)?;
    Ok(BranchSetup { disc, wstar, critical })
}
