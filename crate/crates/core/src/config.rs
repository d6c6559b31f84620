//! JSON run configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::branch::{ContinuationOptions, NewtonOptions};
use crate::dispersion::DispersionOptions;
use crate::error::SolverError;
use crate::fields::ColumnSpacing;
use crate::laminar::LaminarOptions;
use crate::profiles::{Bernoulli, BernoulliSpec, Density, DensitySpec, PhysicalParameters, StratificationProfile};

fn default_g() -> f64 {
    9.81
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaminarSection {
    pub n_p: usize,
    pub picard_tol: f64,
    pub shoot_tol: f64,
    pub max_picard: usize,
}

impl Default for LaminarSection {
    fn default() -> Self {
        let o = LaminarOptions::default();
        Self { n_p: o.n_p, picard_tol: o.picard_tol, shoot_tol: o.shoot_tol, max_picard: o.max_picard }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionSection {
    pub lambda_hat: f64,
    pub scan_points: usize,
    pub theta_hi_factor: f64,
    pub root_rtol: f64,
    pub k_max: usize,
}

impl Default for DispersionSection {
    fn default() -> Self {
        let o = DispersionOptions::default();
        Self {
            lambda_hat: o.lambda_hat,
            scan_points: o.scan_points,
            theta_hi_factor: o.theta_hi_factor,
            root_rtol: o.root_rtol,
            k_max: o.k_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchSection {
    pub nq: usize,
    pub np: usize,
    pub steps: usize,
    pub ds: f64,
    pub ds_min: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// every n-th accepted point gets a field snapshot
    pub snapshot_every: usize,
}

impl Default for BranchSection {
    fn default() -> Self {
        let c = ContinuationOptions::default();
        Self {
            nq: 64,
            np: 128,
            steps: c.n_steps,
            ds: c.ds,
            ds_min: c.ds_min,
            newton_tol: c.newton.tol,
            max_newton: c.newton.max_iter,
            snapshot_every: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldsSection {
    /// columns per period; 0 means the branch `nq`
    pub nx: usize,
    pub ny: usize,
    pub spacing: ColumnSpacing,
    /// branch point to reconstruct, counted along the `+` direction
    pub point: usize,
}

impl Default for FieldsSection {
    fn default() -> Self {
        Self { nx: 0, ny: 64, spacing: ColumnSpacing::Chebyshev, point: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_g")]
    pub g: f64,
    pub d: f64,
    pub sigma: f64,
    pub p0: f64,
    pub rho: DensitySpec,
    #[serde(default = "zero_bernoulli")]
    pub bernoulli: BernoulliSpec,
    #[serde(default)]
    pub rho_prime_l1: Option<f64>,
    #[serde(default)]
    pub laminar: LaminarSection,
    #[serde(default)]
    pub dispersion: DispersionSection,
    #[serde(default)]
    pub branch: BranchSection,
    #[serde(default)]
    pub fields: FieldsSection,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn zero_bernoulli() -> BernoulliSpec {
    BernoulliSpec::Zero
}

fn bad(msg: String) -> SolverError {
    SolverError::Config(msg)
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, SolverError> {
        let c: Self = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        for (name, v) in [("g", self.g), ("d", self.d), ("sigma", self.sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.p0 < 0.0 && self.p0.is_finite()) {
            return Err(bad(format!("p0 must be negative, got {}", self.p0)));
        }
        let b = &self.branch;
        if b.nq < 8 || b.nq % 2 != 0 {
            return Err(bad(format!("branch.nq must be even and >= 8, got {}", b.nq)));
        }
        if b.np < 4 {
            return Err(bad(format!("branch.np must be >= 4, got {}", b.np)));
        }
        if !(b.ds > 0.0) || !(b.ds_min > 0.0) || !(b.newton_tol > 0.0) {
            return Err(bad("branch.ds, ds_min and newton_tol must be positive".into()));
        }
        if !(self.dispersion.lambda_hat > 0.0) {
            return Err(bad("dispersion.lambda_hat must be positive".into()));
        }
        if self.laminar.n_p < 8 {
            return Err(bad("laminar.n_p must be >= 8".into()));
        }
        if self.fields.ny < 3 {
            return Err(bad("fields.ny must be >= 3".into()));
        }
        Ok(())
    }

    pub fn physical(&self) -> Result<PhysicalParameters, SolverError> {
        let rho = Density::from_spec(&self.rho)?;
        let b = Bernoulli::from_spec(&self.bernoulli, self.p0)?;
        let prof = StratificationProfile::new(self.p0, rho, b, self.rho_prime_l1)?;
        Ok(PhysicalParameters::new(self.g, self.d, self.sigma, prof)?)
    }

    pub fn laminar_options(&self) -> LaminarOptions {
        let l = &self.laminar;
        LaminarOptions { n_p: l.n_p, picard_tol: l.picard_tol, shoot_tol: l.shoot_tol, max_picard: l.max_picard }
    }

    pub fn dispersion_options(&self) -> DispersionOptions {
        let d = &self.dispersion;
        DispersionOptions {
            lambda_hat: d.lambda_hat,
            scan_points: d.scan_points,
            theta_hi_factor: d.theta_hi_factor,
            root_rtol: d.root_rtol,
            k_max: d.k_max,
            ..Default::default()
        }
    }

    pub fn continuation_options(&self) -> ContinuationOptions {
        let b = &self.branch;
        ContinuationOptions {
            n_steps: b.steps,
            ds: b.ds,
            ds_min: b.ds_min,
            newton: NewtonOptions { tol: b.newton_tol, max_iter: b.max_newton, ..Default::default() },
            ..Default::default()
        }
    }
}
