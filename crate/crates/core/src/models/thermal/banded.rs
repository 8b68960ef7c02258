use crate::error::{Error, Result};

/// Symmetric banded matrix, lower band stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BandedSym {
    n: usize,
    bw: usize,
    // data[i * (bw + 1) + (i - j)] = A[i][j] for i - bw <= j <= i
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    #[cfg(test)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to A[i][j] (and implicitly A[j][i]).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j <= self.bw {
            let k = self.idx(i, j);
            self.data[k] = v;
        }
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] += row[0] * x[i];
            for (off, &a) in row.iter().enumerate().skip(1) {
                if off > i {
                    break;
                }
                let j = i - off;
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
    }

    /// Replaces row and column `d` by the identity row.
    pub fn make_identity_row(&mut self, d: usize) {
        for j in d.saturating_sub(self.bw)..d {
            self.set(d, j, 0.0);
        }
        for i in d + 1..(d + self.bw + 1).min(self.n) {
            self.set(i, d, 0.0);
        }
        self.set(d, d, 1.0);
    }

    /// In-place banded Cholesky, A = L Lᵀ.
    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = self.data[self.idx(i, j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Singular(format!("non-positive pivot {s:e} at row {i}")));
                    }
                    let k = self.idx(i, i);
                    self.data[k] = s.sqrt();
                } else {
                    let k = self.idx(i, j);
                    self.data[k] = s / self.data[self.idx(j, j)];
                }
            }
        }
        Ok(BandedCholesky { factor: self })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandedCholesky {
    factor: BandedSym,
}

impl BandedCholesky {
    /// Solves A x = b in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let f = &self.factor;
        let (n, bw) = (f.n, f.bw);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= f.data[f.idx(i, k)] * b[k];
            }
            b[i] = s / f.data[f.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= f.data[f.idx(k, i)] * b[k];
            }
            b[i] = s / f.data[f.idx(i, i)];
        }
    }
}
