//! Numerical building blocks shared by the solver modules.

pub mod banded;
pub mod interp;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod spectral;
