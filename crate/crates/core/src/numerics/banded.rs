//! Banded matrices and LU with partial pivoting.

use crate::error::NumericalError;

/// Row-major band storage: entry `(i, j)` lives at `i * w + (j + kl - i)`
/// with `w = kl + ku + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[i * (self.kl + self.ku + 1) + j + self.kl - i]
        } else {
            0.0
        }
    }

    /// Add to an entry; panics outside the band (a bug in assembly).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku);
        let w = self.kl + self.ku + 1;
        self.data[i * w + j + self.kl - i] += v;
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row_range(i).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for j in self.row_range(i) {
                y[j] += self.get(i, j) * x[i];
            }
        }
        y
    }

    pub fn lu(&self) -> Result<BandLu, NumericalError> {
        BandLu::factor(self)
    }
}

/// LU factors. Row `i` stores columns `i - kl ..= i + ku + kl` (room for
/// pivoting fill-in); entries below the diagonal hold the multipliers.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.w + j + self.kl - i
    }

    pub fn factor(a: &BandMatrix) -> Result<Self, NumericalError> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let w = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, w, data: vec![0.0; n * w], piv: vec![0; n] };
        for i in 0..n {
            for j in a.row_range(i) {
                let idx = lu.at(i, j);
                lu.data[idx] = a.get(i, j);
            }
        }
        let uw = ku + kl;
        let mut amax: f64 = 0.0;
        for v in &lu.data {
            amax = amax.max(v.abs());
        }
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.data[lu.at(k, k)].abs();
            for i in k + 1..=last {
                let v = lu.data[lu.at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            lu.piv[k] = p;
            if best == 0.0 || best <= amax * 1e-300 {
                return Err(NumericalError::Singular { index: k });
            }
            let jend = (k + uw).min(n - 1);
            if p != k {
                for j in k..=jend {
                    let (a1, a2) = (lu.at(k, j), lu.at(p, j));
                    lu.data.swap(a1, a2);
                }
            }
            let pivot = lu.data[lu.at(k, k)];
            for i in k + 1..=last {
                let ik = lu.at(i, k);
                let l = lu.data[ik] / pivot;
                lu.data[ik] = l;
                if l != 0.0 && jend > k {
                    // row segments for columns k+1..=jend are contiguous
                    let rk = lu.at(k, k + 1);
                    let ri = lu.at(i, k + 1);
                    for off in 0..jend - k {
                        let v = lu.data[rk + off];
                        lu.data[ri + off] -= l * v;
                    }
                }
            }
        }
        Ok(lu)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    x[i] -= self.data[self.at(i, k)] * xk;
                }
            }
        }
        let uw = self.ku + self.kl;
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + uw).min(n - 1) {
                s -= self.data[self.at(k, j)] * x[j];
            }
            x[k] = s / self.data[self.at(k, k)];
        }
        x
    }

    /// Solve `A^T x = b`.
    pub fn solve_t(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let uw = self.ku + self.kl;
        let mut z = b.to_vec();
        for k in 0..n {
            let mut s = z[k];
            for i in k.saturating_sub(uw)..k {
                s -= self.data[self.at(i, k)] * z[i];
            }
            z[k] = s / self.data[self.at(k, k)];
        }
        for k in (0..n).rev() {
            let mut s = 0.0;
            for i in k + 1..=(k + self.kl).min(n - 1) {
                s += self.data[self.at(i, k)] * z[i];
            }
            z[k] -= s;
            let p = self.piv[k];
            if p != k {
                z.swap(k, p);
            }
        }
        z
    }
}
