//! Steady periodic stratified capillary–gravity water waves.
//!
//! The pipeline runs bottom-up:
//!
//! * [`profiles`]: streamline density `ρ̄`, Bernoulli primitive `B`, and the
//!   admissibility checks;
//! * [`laminar`]: the flat-streamline background `H(p)` by fixed point
//!   iteration and shooting on `μ`;
//! * [`dispersion`]: the Sturm–Liouville/Wronskian route to `θ(λ) = C_D λ²`
//!   and the critical wavelength `λ* = 2π/√C_D`;
//! * [`branch`]: the discretised height-function equation and pseudo-arclength
//!   continuation of the bifurcating branch;
//! * [`fields`]: velocity, pressure and density in physical variables, with
//!   residuals of the steady Euler system.

pub mod branch;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod exec;
pub mod fields;
pub mod io;
pub mod laminar;
pub mod numerics;
pub mod profiles;

pub use error::{NumericalError, ProfileError, SolverError};
pub use exec::Exec;
