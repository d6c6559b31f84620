//! Finite-volume discretisation of `F(λ, h) = 0` on the even half period.
//!
//! Unknowns are `h(q_i, p_j)` for `i = 0..=N_q/2`, `j = 1..=N_p`, stored at
//! `(j-1)M + i` with `M = N_q/2 + 1`. Rows `j < N_p` carry the interior
//! divergence form; row `N_p` carries the nonlocal top condition.

use serde::Serialize;

use crate::error::NumericalError;
use crate::exec::Exec;
use crate::laminar::LaminarFlow;
use crate::numerics::banded::BandMatrix;
use crate::numerics::spectral::{derivative, inverse_helmholtz, operator_matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub nq: usize,
    pub np: usize,
    /// points per row of the half period
    pub m: usize,
    pub p0: f64,
    pub dq: f64,
    pub dp: f64,
}

impl Grid {
    pub fn new(nq: usize, np: usize, p0: f64) -> Self {
        assert!(nq >= 8 && nq % 2 == 0, "N_q must be even and at least 8");
        assert!(np >= 4, "N_p must be at least 4");
        Self { nq, np, m: nq / 2 + 1, p0, dq: 1.0 / nq as f64, dp: -p0 / np as f64 }
    }

    pub fn unknowns(&self) -> usize {
        self.m * self.np
    }

    #[inline]
    pub fn p(&self, j: usize) -> f64 {
        if j == self.np {
            0.0
        } else {
            self.p0 + j as f64 * self.dp
        }
    }

    #[inline]
    pub fn q(&self, i: usize) -> f64 {
        i as f64 * self.dq
    }

    /// Fold a periodic index onto the half period.
    #[inline]
    pub fn refl(&self, i: isize) -> usize {
        let n = self.nq as isize;
        let k = i.rem_euclid(n);
        (if k > n / 2 { n - k } else { k }) as usize
    }

    #[inline]
    pub fn col(&self, i: isize, j: usize) -> Option<usize> {
        if j == 0 {
            None
        } else {
            Some((j - 1) * self.m + self.refl(i))
        }
    }

    #[inline]
    pub fn at(&self, h: &[f64], i: isize, j: usize) -> f64 {
        match self.col(i, j) {
            Some(c) => h[c],
            None => 0.0,
        }
    }

    /// Full periodic row `j` (length `N_q`).
    pub fn full_row(&self, h: &[f64], j: usize) -> Vec<f64> {
        (0..self.nq).map(|i| self.at(h, i as isize, j)).collect()
    }

    /// Weights of the periodic trapezoid rule restricted to the half period.
    pub fn q_weights(&self) -> Vec<f64> {
        let n = self.nq as f64;
        (0..self.m).map(|i| if i == 0 || i == self.m - 1 { 1.0 / n } else { 2.0 / n }).collect()
    }

    /// Trapezoid weights in `p` for rows `1..=N_p` (the bottom row is zero).
    pub fn p_weights(&self) -> Vec<f64> {
        (1..=self.np).map(|j| if j == self.np { 0.5 * self.dp } else { self.dp }).collect()
    }

    /// Weights for the discrete `L²(Ω)` pairing on the unknown vector.
    pub fn weights(&self) -> Vec<f64> {
        let wq = self.q_weights();
        let wp = self.p_weights();
        let mut w = Vec::with_capacity(self.unknowns());
        for wpj in &wp {
            for wqi in &wq {
                w.push(wqi * wpj);
            }
        }
        w
    }

    /// Sample `f(q, p)` at the unknown nodes.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.unknowns());
        for j in 1..=self.np {
            for i in 0..self.m {
                v.push(f(self.q(i), self.p(j)));
            }
        }
        v
    }
}

/// A discrete height perturbation and its wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub h: Vec<f64>,
    pub lambda: f64,
}

/// Discrete operator with the laminar coefficients frozen on the grid.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub grid: Grid,
    pub g: f64,
    pub sigma: f64,
    pub rho_top: f64,
    /// `H′(p_j)`, `j = 0..=N_p`
    pub hp_node: Vec<f64>,
    /// `H′(p_{j+1/2})`, `j = 0..N_p`
    pub hp_half: Vec<f64>,
    pub rho_node: Vec<f64>,
    pub rho_half: Vec<f64>,
    d1: Vec<f64>,
    hinv: Vec<f64>,
    pub exec: Exec,
}

/// Top-row evaluation with optional Jacobian blocks (half-period columns).
struct TopEval {
    f: Vec<f64>,
    dl: Vec<f64>,
    /// `∂/∂` rows `N_p`, `N_p-1`, `N_p-2`, each `M×M` row-major
    blocks: Option<[Vec<f64>; 3]>,
}

#[inline]
fn push(grid: &Grid, out: &mut Vec<(usize, f64)>, i: isize, j: usize, c: f64) {
    if let Some(col) = grid.col(i, j) {
        out.push((col, c));
    }
}

impl Discretization {
    pub fn new(flow: &LaminarFlow, nq: usize, np: usize, exec: Exec) -> Self {
        let grid = Grid::new(nq, np, flow.grid.p0);
        let pr = &flow.params.profile;
        let hp_node: Vec<f64> = (0..=np).map(|j| flow.height_slope_at(grid.p(j))).collect();
        let half = |j: usize| grid.p0 + (j as f64 + 0.5) * grid.dp;
        let hp_half: Vec<f64> = (0..np).map(|j| flow.height_slope_at(half(j))).collect();
        let rho_node: Vec<f64> = (0..=np).map(|j| pr.rho_bar(grid.p(j))).collect();
        let rho_half: Vec<f64> = (0..np).map(|j| pr.rho_bar(half(j))).collect();
        let d1 = operator_matrix(nq, |r| derivative(r, 1));
        let hinv = operator_matrix(nq, inverse_helmholtz);
        Self {
            grid,
            g: flow.params.g,
            sigma: flow.params.sigma,
            rho_top: pr.rho_bar(0.0),
            hp_node,
            hp_half,
            rho_node,
            rho_half,
            d1,
            hinv,
            exec,
        }
    }

    pub fn n(&self) -> usize {
        self.grid.unknowns()
    }

    /// Band widths of the Jacobian.
    pub fn bandwidths(&self) -> (usize, usize) {
        (3 * self.grid.m, self.grid.m + 1)
    }

    /// Interior row `(i, j)`: value, `∂/∂λ`, and the derivative entries.
    fn interior(
        &self,
        h: &[f64],
        l: f64,
        i: usize,
        j: usize,
        out: &mut Vec<(usize, f64)>,
    ) -> Result<(f64, f64), NumericalError> {
        out.clear();
        let gr = &self.grid;
        let (dq, dp) = (gr.dq, gr.dp);
        let ii = i as isize;
        let l2 = l * l;
        let g = self.g;
        let mut val = 0.0;
        let mut dl = 0.0;
        // q-fluxes h_q/(h_p+H′) at i±1/2
        for (a, sgn) in [(ii, 1.0), (ii - 1, -1.0)] {
            let b = a + 1;
            let hq = (gr.at(h, b, j) - gr.at(h, a, j)) / dq;
            let hp = (gr.at(h, a, j + 1) - gr.at(h, a, j - 1) + gr.at(h, b, j + 1) - gr.at(h, b, j - 1)) / (4.0 * dp);
            let e = hp + self.hp_node[j];
            if !(e > 0.0) {
                return Err(NumericalError::EllipticityLost { min_hp: e });
            }
            val += sgn * hq / e / dq;
            let cq = sgn / (e * dq * dq);
            let cp = -sgn * hq / (e * e * dq * 4.0 * dp);
            push(gr, out, b, j, cq);
            push(gr, out, a, j, -cq);
            push(gr, out, a, j + 1, cp);
            push(gr, out, a, j - 1, -cp);
            push(gr, out, b, j + 1, cp);
            push(gr, out, b, j - 1, -cp);
        }
        // p-fluxes at j±1/2
        for (jl, sgn) in [(j, -1.0), (j - 1, 1.0)] {
            let ju = jl + 1;
            let hp = (gr.at(h, ii, ju) - gr.at(h, ii, jl)) / dp;
            let hq = (gr.at(h, ii + 1, jl) - gr.at(h, ii - 1, jl) + gr.at(h, ii + 1, ju) - gr.at(h, ii - 1, ju))
                / (4.0 * dq);
            let hbar = 0.5 * (gr.at(h, ii, jl) + gr.at(h, ii, ju));
            let hh = self.hp_half[jl];
            let e = hp + hh;
            if !(e > 0.0) {
                return Err(NumericalError::EllipticityLost { min_hp: e });
            }
            let rho = self.rho_half[jl];
            let num = l2 + hq * hq;
            let flux = num / (2.0 * e * e) - l2 / (2.0 * hh * hh) + l2 * g * rho * hbar;
            val += sgn * flux / dp;
            dl += sgn * (l / (e * e) - l / (hh * hh) + 2.0 * l * g * rho * hbar) / dp;
            let c_hq = sgn * hq / (e * e * dp * 4.0 * dq);
            let c_hp = -sgn * num / (e * e * e * dp * dp);
            let c_hb = 0.5 * sgn * l2 * g * rho / dp;
            push(gr, out, ii + 1, jl, c_hq);
            push(gr, out, ii - 1, jl, -c_hq);
            push(gr, out, ii + 1, ju, c_hq);
            push(gr, out, ii - 1, ju, -c_hq);
            push(gr, out, ii, ju, c_hp + c_hb);
            push(gr, out, ii, jl, -c_hp + c_hb);
        }
        let rho = self.rho_node[j];
        let hp = (gr.at(h, ii, j + 1) - gr.at(h, ii, j - 1)) / (2.0 * dp);
        val += l2 * g * rho * hp;
        dl += 2.0 * l * g * rho * hp;
        let c = l2 * g * rho / (2.0 * dp);
        push(gr, out, ii, j + 1, c);
        push(gr, out, ii, j - 1, -c);
        Ok((val, dl))
    }

    fn matvec_dense(&self, a: &[f64], x: &[f64]) -> Vec<f64> {
        let n = self.grid.nq;
        (0..n).map(|i| (0..n).map(|k| a[i * n + k] * x[k]).sum()).collect()
    }

    fn top(&self, h: &[f64], l: f64, want_jac: bool) -> Result<TopEval, NumericalError> {
        let gr = &self.grid;
        let (n, m, np, dp) = (gr.nq, gr.m, gr.np, gr.dp);
        let nf = n as f64;
        let r = gr.full_row(h, np);
        let u = gr.full_row(h, np - 1);
        let v = gr.full_row(h, np - 2);
        let hq = self.matvec_dense(&self.d1, &r);
        let l2 = l * l;
        let l3 = l2 * l;
        let s = self.sigma;
        let c = 2.0 * l2 * self.g * self.rho_top;
        let mut e = vec![0.0; n];
        let mut num = vec![0.0; n];
        let mut sv = vec![0.0; n];
        let mut kv = vec![0.0; n];
        for k in 0..n {
            e[k] = (3.0 * r[k] - 4.0 * u[k] + v[k]) / (2.0 * dp) + self.hp_node[np];
            if !(e[k] > 0.0) {
                return Err(NumericalError::EllipticityLost { min_hp: e[k] });
            }
            num[k] = l2 + hq[k] * hq[k];
            sv[k] = num[k] / (e[k] * e[k]);
            kv[k] = num[k].powf(1.5) / (2.0 * s * l3);
        }
        let ms = sv.iter().sum::<f64>() / nf;
        let bv: Vec<f64> = (0..n).map(|k| sv[k] + c * r[k] - ms).collect();
        let tv: Vec<f64> = (0..n).map(|k| r[k] - kv[k] * bv[k]).collect();
        let ht = self.matvec_dense(&self.hinv, &tv);
        let f: Vec<f64> = (0..m).map(|i| r[i] - ht[i]).collect();

        let ds: Vec<f64> = (0..n).map(|k| 2.0 * l / (e[k] * e[k])).collect();
        let mds = ds.iter().sum::<f64>() / nf;
        let dc = 4.0 * l * self.g * self.rho_top;
        let dt: Vec<f64> = (0..n)
            .map(|k| {
                let dk = -3.0 * num[k].sqrt() * hq[k] * hq[k] / (2.0 * s * l2 * l2);
                -(dk * bv[k] + kv[k] * (ds[k] + dc * r[k] - mds))
            })
            .collect();
        let hdt = self.matvec_dense(&self.hinv, &dt);
        let dl: Vec<f64> = (0..m).map(|i| -hdt[i]).collect();

        let blocks = if want_jac {
            let sq: Vec<f64> = (0..n).map(|k| 2.0 * hq[k] / (e[k] * e[k])).collect();
            let sp: Vec<f64> = (0..n).map(|k| -2.0 * num[k] / (e[k] * e[k] * e[k])).collect();
            let kq: Vec<f64> = (0..n).map(|k| 3.0 * hq[k] * num[k].sqrt() / (2.0 * s * l3)).collect();
            // ∂T/∂r, ∂T/∂u, ∂T/∂v on the full row
            let mut a_s = vec![0.0; n * n];
            for k in 0..n {
                for j in 0..n {
                    a_s[k * n + j] = sq[k] * self.d1[k * n + j];
                }
                a_s[k * n + k] += sp[k] * 1.5 / dp;
            }
            let a_m: Vec<f64> = (0..n).map(|j| (0..n).map(|k| a_s[k * n + j]).sum::<f64>() / nf).collect();
            let mut tr = vec![0.0; n * n];
            let mut tu = vec![0.0; n * n];
            let mut tw = vec![0.0; n * n];
            for k in 0..n {
                for j in 0..n {
                    let delta = if j == k { 1.0 } else { 0.0 };
                    tr[k * n + j] =
                        delta - kq[k] * bv[k] * self.d1[k * n + j] - kv[k] * (a_s[k * n + j] + c * delta - a_m[j]);
                    tu[k * n + j] = -kv[k] * (sp[k] * (-2.0 / dp) * delta - sp[j] * (-2.0 / dp) / nf);
                    tw[k * n + j] = -kv[k] * (sp[k] * (0.5 / dp) * delta - sp[j] * (0.5 / dp) / nf);
                }
            }
            let fold = |t: &[f64], ident: bool| -> Vec<f64> {
                let mut out = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..n {
                        let mut acc = 0.0;
                        for k in 0..n {
                            acc += self.hinv[i * n + k] * t[k * n + j];
                        }
                        let mut val = -acc;
                        if ident && i == j {
                            val += 1.0;
                        }
                        out[i * m + gr.refl(j as isize)] += val;
                    }
                }
                out
            };
            Some([fold(&tr, true), fold(&tu, false), fold(&tw, false)])
        } else {
            None
        };
        Ok(TopEval { f, dl, blocks })
    }

    /// Discrete residual (interior rows then the top row).
    pub fn residual(&self, h: &[f64], lambda: f64) -> Result<Vec<f64>, NumericalError> {
        let gr = self.grid;
        let rows: Vec<Result<Vec<f64>, NumericalError>> = self.exec.map(gr.np - 1, |jj| {
            let j = jj + 1;
            let mut scratch = Vec::with_capacity(32);
            (0..gr.m).map(|i| self.interior(h, lambda, i, j, &mut scratch).map(|v| v.0)).collect()
        });
        let mut out = Vec::with_capacity(gr.unknowns());
        for r in rows {
            out.extend(r?);
        }
        out.extend(self.top(h, lambda, false)?.f);
        Ok(out)
    }

    /// `‖F‖∞` split into interior and top rows.
    pub fn residual_parts(&self, h: &[f64], lambda: f64) -> Result<(f64, f64), NumericalError> {
        let r = self.residual(h, lambda)?;
        let split = (self.grid.np - 1) * self.grid.m;
        let inf = |s: &[f64]| s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((inf(&r[..split]), inf(&r[split..])))
    }

    /// Analytic Jacobian `∂_h F` (banded) and the column `∂_λ F`.
    pub fn jacobian(&self, h: &[f64], lambda: f64) -> Result<(BandMatrix, Vec<f64>), NumericalError> {
        let gr = self.grid;
        let (kl, ku) = self.bandwidths();
        let n = gr.unknowns();
        type Row = (Vec<(usize, usize, f64)>, Vec<f64>);
        let rows: Vec<Result<Row, NumericalError>> = self.exec.map(gr.np - 1, |jj| {
            let j = jj + 1;
            let mut entries = Vec::with_capacity(gr.m * 24);
            let mut dls = Vec::with_capacity(gr.m);
            let mut scratch = Vec::with_capacity(32);
            for i in 0..gr.m {
                let (_, dl) = self.interior(h, lambda, i, j, &mut scratch)?;
                dls.push(dl);
                let row = (j - 1) * gr.m + i;
                entries.extend(scratch.iter().map(|&(c, v)| (row, c, v)));
            }
            Ok((entries, dls))
        });
        let mut a = BandMatrix::zeros(n, kl, ku);
        let mut lcol = Vec::with_capacity(n);
        for r in rows {
            let (entries, dls) = r?;
            for (i, c, v) in entries {
                a.add(i, c, v);
            }
            lcol.extend(dls);
        }
        let top = self.top(h, lambda, true)?;
        lcol.extend(top.dl);
        let blocks = top.blocks.unwrap();
        let m = gr.m;
        let np = gr.np;
        for i in 0..m {
            let row = (np - 1) * m + i;
            for (b, jrow) in [(0usize, np), (1, np - 1), (2, np - 2)] {
                if jrow == 0 {
                    continue;
                }
                for k in 0..m {
                    let v = blocks[b][i * m + k];
                    if v != 0.0 {
                        a.add(row, (jrow - 1) * m + k, v);
                    }
                }
            }
        }
        Ok((a, lcol))
    }
}

/// Result of comparing the analytic Jacobian with central differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdCheck {
    pub directions: usize,
    pub max_rel_err: f64,
    pub lambda_rel_err: f64,
}

impl FdCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_err <= tol && self.lambda_rel_err <= tol
    }
}

/// Directional derivatives of the residual against `J·d` for `dirs`.
pub fn fd_check(disc: &Discretization, h: &[f64], lambda: f64, dirs: &[Vec<f64>]) -> Result<FdCheck, NumericalError> {
    let (jac, lcol) = disc.jacobian(h, lambda)?;
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut worst: f64 = 0.0;
    for d in dirs {
        let eps = 1e-6 / inf(d).max(1e-300);
        let hp: Vec<f64> = h.iter().zip(d).map(|(a, b)| a + eps * b).collect();
        let hm: Vec<f64> = h.iter().zip(d).map(|(a, b)| a - eps * b).collect();
        let fp = disc.residual(&hp, lambda)?;
        let fm = disc.residual(&hm, lambda)?;
        let fd: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let an = jac.matvec(d);
        let diff: Vec<f64> = an.iter().zip(&fd).map(|(a, b)| a - b).collect();
        worst = worst.max(inf(&diff) / inf(&an));
    }
    let el = 1e-6 * lambda;
    let fp = disc.residual(h, lambda + el)?;
    let fm = disc.residual(h, lambda - el)?;
    let fd: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * el)).collect();
    let diff: Vec<f64> = lcol.iter().zip(&fd).map(|(a, b)| a - b).collect();
    let lam_err = if inf(&lcol) == 0.0 { inf(&fd) } else { inf(&diff) / inf(&lcol) };
    Ok(FdCheck { directions: dirs.len(), max_rel_err: worst, lambda_rel_err: lam_err })
}
