//! Shape checks on computed profiles, singular values of the Jacobian, and
//! the small-amplitude fits near the bifurcation point.

use serde::Serialize;

use super::continuation::dot_w;
use super::discretization::{Discretization, Grid};
use crate::error::NumericalError;
use crate::numerics::banded::BandMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileDiagnostics {
    /// `η(q) = h(q, 0) + H(0) - d`
    pub eta_mean: f64,
    /// half the crest-to-trough height
    pub eta_amplitude: f64,
    /// `max |η|`
    pub eta_inf: f64,
    /// `max |η(q) - η(-q)|`
    pub even_defect: f64,
    pub crest_count: usize,
    /// one crest and one trough per period
    pub monotone_ok: bool,
    /// smallest discrete `h_p + H′` seen by the scheme
    pub min_hp_total: f64,
}

/// Surface profile on the full periodic grid.
pub fn surface(grid: &Grid, h: &[f64], depth_error: f64) -> Vec<f64> {
    grid.full_row(h, grid.np).into_iter().map(|v| v + depth_error).collect()
}

/// Sign changes of the periodic difference `η(q_{k+1}) - η(q_k)`, ignoring
/// differences below `1e-10` in magnitude.
pub fn sign_changes(eta: &[f64]) -> usize {
    let n = eta.len();
    let signs: Vec<f64> =
        (0..n).map(|k| eta[(k + 1) % n] - eta[k]).filter(|d| d.abs() > 1e-10).map(f64::signum).collect();
    if signs.is_empty() {
        return 0;
    }
    (0..signs.len()).filter(|&k| signs[k] != signs[(k + 1) % signs.len()]).count()
}

pub fn min_total_hp(disc: &Discretization, h: &[f64]) -> f64 {
    let gr = &disc.grid;
    let mut lo = f64::INFINITY;
    for j in 0..gr.np {
        for i in 0..gr.m {
            let d = (gr.at(h, i as isize, j + 1) - gr.at(h, i as isize, j)) / gr.dp;
            lo = lo.min(d + disc.hp_half[j]);
        }
    }
    let np = gr.np;
    for i in 0..gr.m {
        let ii = i as isize;
        let d = (3.0 * gr.at(h, ii, np) - 4.0 * gr.at(h, ii, np - 1) + gr.at(h, ii, np - 2)) / (2.0 * gr.dp);
        lo = lo.min(d + disc.hp_node[np]);
    }
    lo
}

pub fn profile_diagnostics(disc: &Discretization, h: &[f64], depth_error: f64) -> ProfileDiagnostics {
    let eta = surface(&disc.grid, h, depth_error);
    let n = eta.len();
    let eta_mean = eta.iter().sum::<f64>() / n as f64;
    let even_defect = (0..n).map(|k| (eta[k] - eta[(n - k) % n]).abs()).fold(0.0, f64::max);
    let hi = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = eta.iter().cloned().fold(f64::INFINITY, f64::min);
    let crest_count = sign_changes(&eta);
    ProfileDiagnostics {
        eta_mean,
        eta_amplitude: 0.5 * (hi - lo),
        eta_inf: hi.abs().max(lo.abs()),
        even_defect,
        crest_count,
        monotone_ok: crest_count == 2,
        min_hp_total: min_total_hp(disc, h),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub sigma_min: f64,
    pub sigma_2: f64,
    pub norm: f64,
    /// right singular vector for `sigma_min`
    #[serde(skip)]
    pub kernel: Vec<f64>,
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
    n
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two smallest singular values by block inverse iteration on `AᵀA`, and
/// `‖A‖₂` by power iteration. Deterministic starting vectors.
pub fn spectrum(a: &BandMatrix, iters: usize) -> Result<Spectrum, NumericalError> {
    let n = a.n;
    let lu = a.lu()?;
    let mut x1: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 104729) as f64 / 104729.0).collect();
    let mut x2: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.618_033_988_75).fract() - 0.5).collect();
    let ortho = |x1: &mut Vec<f64>, x2: &mut Vec<f64>| {
        normalize(x1);
        let c = dot(x1, x2);
        for (b, a) in x2.iter_mut().zip(x1.iter()) {
            *b -= c * a;
        }
        normalize(x2);
    };
    ortho(&mut x1, &mut x2);
    for _ in 0..iters {
        x1 = lu.solve(&lu.solve_t(&x1));
        x2 = lu.solve(&lu.solve_t(&x2));
        ortho(&mut x1, &mut x2);
    }
    // Rayleigh-Ritz on span{x1, x2}
    let y1 = a.matvec(&x1);
    let y2 = a.matvec(&x2);
    let (b11, b12, b22) = (dot(&y1, &y1), dot(&y1, &y2), dot(&y2, &y2));
    let tr = 0.5 * (b11 + b22);
    let det = ((0.5 * (b11 - b22)).powi(2) + b12 * b12).sqrt();
    let (e_lo, e_hi) = ((tr - det).max(0.0), tr + det);
    // eigenvector of the 2x2 for e_lo
    let (c1, c2) = if b12.abs() > 0.0 {
        (b12, e_lo - b11)
    } else if b11 <= b22 {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let mut kernel: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| c1 * a + c2 * b).collect();
    normalize(&mut kernel);
    // ‖A k‖ avoids the cancellation in tr - det when σ_min is tiny
    let sigma_min = a.matvec(&kernel).iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut v: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.754_877_666).fract() + 0.1).collect();
    normalize(&mut v);
    let mut norm = 0.0;
    for _ in 0..200 {
        let w = a.matvec_t(&a.matvec(&v));
        let nv = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let next = nv.sqrt();
        v = w;
        normalize(&mut v);
        if (next - norm).abs() <= 1e-10 * next {
            norm = next;
            break;
        }
        norm = next;
    }
    Ok(Spectrum { sigma_min, sigma_2: e_hi.sqrt(), norm, kernel })
}

/// Angle between `a` and `b` in the weighted inner product, folded into
/// `[0, π/2]` so the sign of either vector is irrelevant.
pub fn angle_w(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let c = dot_w(w, a, b) / (dot_w(w, a, a) * dot_w(w, b, b)).sqrt();
    c.abs().min(1.0).acos()
}

/// Least squares fit `y ≈ Σ c_k x^k`, `k < terms`, via normal equations
/// (only used for tiny systems).
pub fn polyfit(x: &[f64], y: &[f64], terms: usize) -> Vec<f64> {
    let mut a = vec![vec![0.0; terms + 1]; terms];
    for (xi, yi) in x.iter().zip(y) {
        let pw: Vec<f64> = (0..terms).map(|k| xi.powi(k as i32)).collect();
        for r in 0..terms {
            for c in 0..terms {
                a[r][c] += pw[r] * pw[c];
            }
            a[r][terms] += pw[r] * yi;
        }
    }
    for col in 0..terms {
        let piv = (col..terms).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..terms {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=terms {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..terms).map(|r| a[r][terms] / a[r][r]).collect()
}
