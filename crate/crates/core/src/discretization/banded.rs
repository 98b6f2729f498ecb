//! Square band matrices and an in-place LU without pivoting.
//!
//! Only matrices that are SPD or column diagonally dominant are factored
//! here, and for those elimination without pivoting is stable.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    /// Row-major, `2 bw + 1` entries per row; entry `(i, j)` lives at
    /// `i (2 bw + 1) + (j + bw − i)`.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw);
        i * (2 * self.bw + 1) + j + self.bw - i
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// Columns `(lo, hi)` (inclusive) stored in row `i`.
    #[inline]
    fn row_span(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(self.bw), (i + self.bw).min(self.n - 1))
    }

    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (lo, hi) = self.row_span(i);
            let base = i * (2 * self.bw + 1) + self.bw - i;
            *o = (lo..=hi).map(|j| self.data[base + j] * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `self ← self + c · diag(d)`.
    pub fn add_diagonal(&mut self, c: f64, d: &[f64]) {
        for (i, &v) in d.iter().enumerate() {
            self.add(i, i, c * v);
        }
    }

    /// `self ← self · diag(d)`.
    pub fn scale_columns(&mut self, d: &[f64]) {
        for i in 0..self.n {
            let (lo, hi) = self.row_span(i);
            for j in lo..=hi {
                let s = self.slot(i, j);
                self.data[s] *= d[j];
            }
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let (n, bw) = (self.n, self.bw);
        for k in 0..n {
            let pivot = self.data[self.slot(k, k)];
            if !(pivot.abs() > 0.0) || !pivot.is_finite() {
                return Err(Error::Factorization(k));
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                self.data[sik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last {
                    let skj = self.slot(k, j);
                    let sij = self.slot(i, j);
                    self.data[sij] -= l * self.data[skj];
                }
            }
        }
        Ok(BandLu { lu: self })
    }
}

/// `L U` factors stored in one band (unit lower triangle implied).
#[derive(Debug, Clone, PartialEq)]
pub struct BandLu {
    lu: BandMatrix,
}

impl BandLu {
    pub fn dim(&self) -> usize {
        self.lu.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let a = &self.lu;
        let (n, bw) = (a.n, a.bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for j in lo..i {
                s -= a.data[a.slot(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=hi {
                s -= a.data[a.slot(i, j)] * x[j];
            }
            x[i] = s / a.data[a.slot(i, i)];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
