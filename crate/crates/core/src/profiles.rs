//! Streamline density, Bernoulli primitive and admissibility conditions.

use serde::{Deserialize, Serialize};

use crate::error::ProfileError;
use crate::laminar::LaminarFlow;
use crate::numerics::interp::{pchip, Hermite};
use crate::numerics::quad::gauss_legendre;
use crate::numerics::roots;

/// Default number of uniform samples used for max/min of `B` and `ρ̄`.
pub const DEFAULT_SAMPLES: usize = 2048;

/// Density descriptor as it appears in JSON configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    Constant {
        value: f64,
    },
    /// `ρ̄(p) = rho0 + slope·p`
    Linear {
        rho0: f64,
        slope: f64,
    },
    /// `ρ̄(p) = rho0·exp(-rate·p)`
    Exp {
        rho0: f64,
        rate: f64,
    },
    /// `(p, ρ̄)` pairs, monotone cubic interpolation.
    Table {
        points: Vec<(f64, f64)>,
    },
}

/// Bernoulli descriptor. `B` is the primitive of `β` with `B(p0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BernoulliSpec {
    Zero,
    /// constant `β`, so `B(p) = beta·(p - p0)`
    Constant {
        beta: f64,
    },
    /// `β = c (p - p0)^{-1/2}`, so `B(p) = 2c (p - p0)^{1/2}`
    SqrtSingular {
        c: f64,
    },
    /// `(p, B)` pairs.
    #[serde(rename = "table_B")]
    TableB {
        points: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Constant(f64),
    Linear { rho0: f64, slope: f64 },
    Exp { rho0: f64, rate: f64 },
    Table(Hermite),
}

impl Density {
    pub fn from_spec(spec: &DensitySpec) -> Result<Self, ProfileError> {
        Ok(match spec {
            DensitySpec::Constant { value } => Density::Constant(*value),
            DensitySpec::Linear { rho0, slope } => Density::Linear { rho0: *rho0, slope: *slope },
            DensitySpec::Exp { rho0, rate } => Density::Exp { rho0: *rho0, rate: *rate },
            DensitySpec::Table { points } => Density::Table(table(points)?),
        })
    }

    #[inline]
    pub fn eval(&self, p: f64) -> f64 {
        match self {
            Density::Constant(v) => *v,
            Density::Linear { rho0, slope } => rho0 + slope * p,
            Density::Exp { rho0, rate } => rho0 * (-rate * p).exp(),
            Density::Table(h) => h.eval(p),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Density::Constant(_) => true,
            Density::Linear { slope, .. } => *slope == 0.0,
            Density::Exp { rate, .. } => *rate == 0.0,
            Density::Table(h) => h.y.iter().all(|v| *v == h.y[0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bernoulli {
    Zero,
    Constant {
        beta: f64,
        p0: f64,
    },
    SqrtSingular {
        c: f64,
        p0: f64,
    },
    /// With `singular`, the table abscissa is `s = ((p-p0)/|p0|)^{1/2}`.
    Table {
        table: Hermite,
        singular: bool,
        p0: f64,
    },
}

impl Bernoulli {
    pub fn from_spec(spec: &BernoulliSpec, p0: f64) -> Result<Self, ProfileError> {
        Ok(match spec {
            BernoulliSpec::Zero => Bernoulli::Zero,
            BernoulliSpec::Constant { beta } => Bernoulli::Constant { beta: *beta, p0 },
            BernoulliSpec::SqrtSingular { c } => Bernoulli::SqrtSingular { c: *c, p0 },
            BernoulliSpec::TableB { points } => Bernoulli::Table { table: table(points)?, singular: false, p0 },
        })
    }

    /// Build `B` from a (possibly singular but integrable) `β`. Panels are
    /// graded toward `p0` and integrated in the variable `s = ((p-p0)/|p0|)^{1/2}`,
    /// which removes inverse square-root endpoint behaviour.
    pub fn from_beta<F: Fn(f64) -> f64>(beta: F, p0: f64, panels: usize) -> Result<Self, ProfileError> {
        let (gx, gw) = gauss_legendre(8);
        let len = -p0;
        let mut ss = vec![0.0];
        let mut bs = vec![0.0];
        let mut acc = 0.0;
        for k in 0..panels {
            let (s0, s1) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
            let (m, r) = (0.5 * (s0 + s1), 0.5 * (s1 - s0));
            let mut part = 0.0;
            for (x, w) in gx.iter().zip(&gw) {
                let s = m + r * x;
                let p = p0 + len * s * s;
                let v = beta(p) * 2.0 * len * s;
                if !v.is_finite() {
                    return Err(ProfileError::NeedPrimitive { p });
                }
                part += w * v;
            }
            acc += part * r;
            ss.push(s1);
            bs.push(acc);
        }
        Ok(Bernoulli::Table { table: pchip(ss, bs), singular: true, p0 })
    }

    #[inline]
    pub fn eval(&self, p: f64) -> f64 {
        match self {
            Bernoulli::Zero => 0.0,
            Bernoulli::Constant { beta, p0 } => beta * (p - p0),
            Bernoulli::SqrtSingular { c, p0 } => 2.0 * c * (p - p0).max(0.0).sqrt(),
            Bernoulli::Table { table, singular: false, .. } => table.eval(p),
            Bernoulli::Table { table, singular: true, p0 } => table.eval(((p - p0) / -p0).max(0.0).sqrt()),
        }
    }

    /// Whether `β` blows up at `p0` (selects the graded laminar mesh).
    pub fn is_singular(&self) -> bool {
        matches!(self, Bernoulli::SqrtSingular { .. } | Bernoulli::Table { singular: true, .. })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Bernoulli::Zero => true,
            Bernoulli::Constant { beta, .. } => *beta == 0.0,
            Bernoulli::SqrtSingular { c, .. } => *c == 0.0,
            Bernoulli::Table { table, .. } => table.y.iter().all(|v| *v == 0.0),
        }
    }
}

fn table(points: &[(f64, f64)]) -> Result<Hermite, ProfileError> {
    if points.len() < 2 || points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(ProfileError::BadTable);
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    Ok(pchip(x, y))
}

/// Streamline density and Bernoulli primitive on `[p0, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StratificationProfile {
    pub p0: f64,
    pub rho: Density,
    pub bernoulli: Bernoulli,
    /// `ρ̄` non-increasing on the samples.
    pub rho_bar_decreasing: bool,
    pub rho_floor: f64,
    /// `‖ρ̄′‖_{L1(p0,0)}`
    pub rho_prime_l1: f64,
    pub samples: usize,
}

impl StratificationProfile {
    /// Validate and derive metadata. `rho_prime_l1` is required only when the
    /// sampled density is not monotone.
    pub fn new(p0: f64, rho: Density, bernoulli: Bernoulli, rho_prime_l1: Option<f64>) -> Result<Self, ProfileError> {
        Self::with_samples(p0, rho, bernoulli, rho_prime_l1, DEFAULT_SAMPLES)
    }

    pub fn with_samples(
        p0: f64,
        rho: Density,
        bernoulli: Bernoulli,
        rho_prime_l1: Option<f64>,
        samples: usize,
    ) -> Result<Self, ProfileError> {
        if !(p0 < 0.0 && p0.is_finite()) {
            return Err(ProfileError::InvalidParameter { name: "p0", reason: format!("must be negative, got {p0}") });
        }
        let ps = sample_grid(p0, samples);
        let vals: Vec<f64> = ps.iter().map(|&p| rho.eval(p)).collect();
        let mut floor = f64::INFINITY;
        for (p, v) in ps.iter().zip(&vals) {
            if !(v.is_finite() && *v > 0.0) {
                return Err(ProfileError::DensityBelowFloor { p: *p, value: *v, floor: 0.0 });
            }
            floor = floor.min(*v);
        }
        let tol = 1e-14 * vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let decreasing = vals.windows(2).all(|w| w[1] <= w[0] + tol);
        let increasing = vals.windows(2).all(|w| w[1] >= w[0] - tol);
        let l1 = match rho_prime_l1 {
            Some(v) if v >= 0.0 && v.is_finite() => v,
            Some(v) => {
                return Err(ProfileError::InvalidParameter {
                    name: "rho_prime_l1",
                    reason: format!("must be >= 0, got {v}"),
                })
            }
            None if decreasing || increasing => (rho.eval(p0) - rho.eval(0.0)).abs(),
            None => return Err(ProfileError::NeedRhoPrimeL1),
        };
        let b0 = bernoulli.eval(p0);
        let bscale = ps.iter().fold(1.0f64, |m, &p| m.max(bernoulli.eval(p).abs()));
        if b0.abs() > 1e-12 * bscale {
            return Err(ProfileError::InvalidParameter {
                name: "bernoulli",
                reason: format!("B(p0) must vanish, got {b0:e}"),
            });
        }
        for &p in &ps {
            if !bernoulli.eval(p).is_finite() {
                return Err(ProfileError::NeedPrimitive { p });
            }
        }
        Ok(Self { p0, rho, bernoulli, rho_bar_decreasing: decreasing, rho_floor: floor, rho_prime_l1: l1, samples })
    }

    #[inline]
    pub fn rho_bar(&self, p: f64) -> f64 {
        self.rho.eval(p)
    }

    #[inline]
    pub fn b(&self, p: f64) -> f64 {
        self.bernoulli.eval(p)
    }

    /// Sample grid used for extrema: uniform points plus both endpoints.
    pub fn sample_points(&self) -> Vec<f64> {
        sample_grid(self.p0, self.samples)
    }

    pub fn max_b(&self) -> f64 {
        self.sample_points().iter().map(|&p| self.b(p)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_b(&self) -> f64 {
        self.sample_points().iter().map(|&p| self.b(p)).fold(f64::INFINITY, f64::min)
    }

    /// Constant density and zero Bernoulli function.
    pub fn is_homogeneous_irrotational(&self) -> bool {
        self.rho.is_constant() && self.bernoulli.is_zero()
    }
}

fn sample_grid(p0: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut v: Vec<f64> = (0..n).map(|k| p0 - p0 * k as f64 / (n - 1) as f64).collect();
    v[0] = p0;
    v[n - 1] = 0.0;
    v
}

/// Gravity, depth, surface tension and the stratification.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParameters {
    pub g: f64,
    pub d: f64,
    pub sigma: f64,
    pub profile: StratificationProfile,
}

impl PhysicalParameters {
    pub fn new(g: f64, d: f64, sigma: f64, profile: StratificationProfile) -> Result<Self, ProfileError> {
        for (name, v) in [("g", g), ("d", d), ("sigma", sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ProfileError::InvalidParameter { name, reason: format!("must be positive, got {v}") });
            }
        }
        Ok(Self { g, d, sigma, profile })
    }

    pub fn p0(&self) -> f64 {
        self.profile.p0
    }

    /// Convenience: constant density, `β = 0`.
    pub fn homogeneous(g: f64, d: f64, sigma: f64, p0: f64, rho: f64) -> Result<Self, ProfileError> {
        let prof = StratificationProfile::new(p0, Density::Constant(rho), Bernoulli::Zero, None)?;
        Self::new(g, d, sigma, prof)
    }
}

/// `μ* = 2(g d ‖ρ̄′‖_{L1} + max B)`.
pub fn mu_star(params: &PhysicalParameters) -> f64 {
    2.0 * (params.g * params.d * params.profile.rho_prime_l1 + params.profile.max_b())
}

/// Positive root of `e^x - x = 5`.
pub fn x_star() -> f64 {
    roots::x_star()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Res2 {
    pub holds: bool,
    /// `d + p0/(μ* - 2 min B)^{1/2}`; `-inf` when the radicand vanishes.
    pub margin: f64,
}

pub fn check_res2(params: &PhysicalParameters) -> Result<Res2, ProfileError> {
    let rad = mu_star(params) - 2.0 * params.profile.min_b();
    // sampling noise can push an exact zero slightly negative
    let scale = 1e-12 * (1.0 + mu_star(params).abs());
    if rad < -scale {
        return Err(ProfileError::NegativeRadicand { value: rad });
    }
    if rad <= scale {
        return Ok(Res2 { holds: true, margin: f64::NEG_INFINITY });
    }
    let margin = params.d + params.p0() / rad.sqrt();
    Ok(Res2 { holds: margin < 0.0, margin })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Res3 {
    pub holds: bool,
    pub lhs: f64,
    pub bound: f64,
}

pub fn check_res3(params: &PhysicalParameters) -> Result<Res3, ProfileError> {
    let p0 = params.p0();
    let d = params.d;
    let rad = (mu_star(params) - 2.0 * params.profile.min_b()).max(0.0);
    let den = p0 * p0 - rad * d * d;
    if den <= 0.0 {
        return Err(ProfileError::Res2Violated { value: den });
    }
    let lhs = params.g * d.powi(3) * params.profile.rho_bar(p0) * p0.abs() / den.powf(1.5);
    let bound = 0.5 * x_star();
    Ok(Res3 { holds: lhs <= bound, lhs, bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CThe0 {
    pub holds: bool,
    /// `A(0)`
    pub a0: f64,
}

/// `e^{2A(0)} - 2A(0) ≤ 5`.
pub fn check_cthe0(flow: &LaminarFlow) -> CThe0 {
    cthe0_from_a0(flow.a_int_top())
}

pub fn cthe0_from_a0(a0: f64) -> CThe0 {
    CThe0 { holds: (2.0 * a0).exp() - 2.0 * a0 <= 5.0, a0 }
}
