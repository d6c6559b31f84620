use thiserror::Error;

/// Failures of the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericalError {
    #[error("step size underflow at t = {at}")]
    StepUnderflow { at: f64 },
    #[error("step limit exceeded at t = {at}")]
    StepLimit { at: f64 },
    #[error("singular matrix (pivot {index})")]
    Singular { index: usize },
    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { what: &'static str, iterations: usize, residual: f64 },
    #[error("mu too close to mu_star: radicand {radicand:e} at p = {p}")]
    RadicandNonPositive { p: f64, radicand: f64 },
    #[error("elliptic regime left: min(h_p + H') = {min_hp:e}")]
    EllipticityLost { min_hp: f64 },
    #[error("no sign change of the Wronskian in [0, {theta_hi:e}]")]
    NoWronskianRoot { theta_hi: f64 },
    #[error("height {x} outside the water column [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("{0}")]
    Other(String),
}

/// Inconsistent or inadmissible input data.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("density {value} at p = {p} is below the floor {floor}")]
    DensityBelowFloor { p: f64, value: f64, floor: f64 },
    #[error("density is declared non-increasing but rises at p = {p}")]
    DensityNotDecreasing { p: f64 },
    #[error("non-monotone density: the L1 norm of its derivative must be supplied")]
    NeedRhoPrimeL1,
    #[error("profile must supply primitive: quadrature of beta failed near p = {p}")]
    NeedPrimitive { p: f64 },
    #[error("mu_star - 2 min B = {value:e} is negative; profile data inconsistent")]
    NegativeRadicand { value: f64 },
    #[error("RES2 violated: the RES3 denominator is {value:e}")]
    Res2Violated { value: f64 },
    #[error("table needs at least two strictly increasing abscissae covering [p0, 0]")]
    BadTable,
}

/// Top-level error for the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Numerical(#[from] NumericalError),
    #[error("condition {condition} failed: {detail}")]
    Condition { condition: &'static str, detail: String },
    #[error("configuration error: {0}")]
    Config(String),
}
