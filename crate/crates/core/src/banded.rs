//! Symmetric band matrices and a banded LU factorization with partial pivoting.

use crate::error::{Error, Result};

/// Symmetric matrix stored by diagonals: `bands[d][i] = A(i, i + d)` for `d ≤ bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSymMatrix {
    n: usize,
    bandwidth: usize,
    bands: Vec<Vec<f64>>,
}

impl BandedSymMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bands = (0..=bandwidth)
            .map(|d| vec![0.0; n.saturating_sub(d)])
            .collect();
        Self {
            n,
            bandwidth,
            bands,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bandwidth {
            0.0
        } else {
            self.bands[d][lo]
        }
    }

    /// Adds `v` to the stored entry `(i, j)` (which is also `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.bandwidth, "entry ({i}, {j}) outside the band");
        self.bands[d][lo] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (yi, (&di, &xi)) in y.iter_mut().zip(self.bands[0].iter().zip(x)) {
            *yi = di * xi;
        }
        for d in 1..=self.bandwidth {
            for (i, &v) in self.bands[d].iter().enumerate() {
                y[i] += v * x[i + d];
                y[i + d] += v * x[i];
            }
        }
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let ax = self.matvec(x);
        ax.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `a·self + b·other`; bandwidths may differ.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.n, other.n);
        let bw = self.bandwidth.max(other.bandwidth);
        let mut out = Self::zeros(self.n, bw);
        for (d, band) in out.bands.iter_mut().enumerate() {
            for (i, v) in band.iter_mut().enumerate() {
                let s = self.bands.get(d).map_or(0.0, |bd| bd[i]);
                let o = other.bands.get(d).map_or(0.0, |bd| bd[i]);
                *v = a * s + b * o;
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        let bands = self
            .bands
            .iter()
            .map(|b| b.iter().map(|v| a * v).collect())
            .collect();
        Self {
            n: self.n,
            bandwidth: self.bandwidth,
            bands,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.bands
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn factor(&self) -> Result<BandLu> {
        BandLu::new(self)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.factor()?.solve(rhs)
    }
}

/// LU factors of a band matrix with row interchanges (the `gbtrf` layout, row-major).
///
/// With lower bandwidth `b`, pivoting widens the upper band of `U` to `2b`; each row keeps
/// columns `i − b ..= i + 2b`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    bw: usize,
    width: usize,
    upper: Vec<f64>,
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.bw - i)
    }

    pub fn new(a: &BandedSymMatrix) -> Result<Self> {
        let n = a.n;
        let bw = a.bandwidth;
        let width = 3 * bw + 1;
        let mut lu = Self {
            n,
            bw,
            width,
            upper: vec![0.0; n * width],
            lower: vec![0.0; n * bw.max(1)],
            pivots: vec![0; n],
        };
        for i in 0..n {
            for j in i.saturating_sub(bw)..=(i + bw).min(n.saturating_sub(1)) {
                let k = lu.idx(i, j);
                lu.upper[k] = a.get(i, j);
            }
        }
        let threshold = 1e-14 * a.max_abs();
        for k in 0..n {
            let last_row = (k + bw).min(n - 1);
            let last_col = (k + 2 * bw).min(n - 1);
            let mut p = k;
            let mut best = lu.upper[lu.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = lu.upper[lu.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !best.is_finite() || best <= threshold || best == 0.0 {
                return Err(Error::LinearSolve(format!(
                    "singular band matrix: pivot {best:e} in column {k} of {n}"
                )));
            }
            lu.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (ik, ip) = (lu.idx(k, j), lu.idx(p, j));
                    lu.upper.swap(ik, ip);
                }
            }
            let pivot = lu.upper[lu.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = lu.idx(i, k);
                let l = lu.upper[ik] / pivot;
                lu.upper[ik] = 0.0;
                lu.lower[k * bw + (i - k - 1)] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = lu.upper[lu.idx(k, j)];
                    let ij = lu.idx(i, j);
                    lu.upper[ij] -= l * kj;
                }
            }
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::LinearSolve(format!(
                "right-hand side has length {}, expected {}",
                rhs.len(),
                self.n
            )));
        }
        let n = self.n;
        let bw = self.bw;
        let mut x = rhs.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            if xk == 0.0 {
                continue;
            }
            let hi = (k + bw).min(n - 1);
            for (off, xi) in x[k + 1..=hi].iter_mut().enumerate() {
                *xi -= self.lower[k * bw + off] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            let hi = (k + 2 * bw).min(n - 1);
            for (xj, j) in x[k + 1..=hi].iter().zip(k + 1..) {
                s -= self.upper[self.idx(k, j)] * xj;
            }
            x[k] = s / self.upper[self.idx(k, k)];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("non-finite solution".into()));
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_residual(a: &BandedSymMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.matvec(x);
        ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn tridiagonal_solve() {
        let mut a = BandedSymMatrix::zeros(4, 1);
        for i in 0..4 {
            a.add(i, i, 2.0);
            if i + 1 < 4 {
                a.add(i, i + 1, -1.0);
            }
        }
        let x = a.solve(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_needs_pivoting() {
        // zero diagonal: only solvable with row interchanges
        let mut a = BandedSymMatrix::zeros(4, 1);
        a.add(0, 1, 1.0);
        a.add(1, 2, 2.0);
        a.add(2, 3, 3.0);
        let b = [1.0, 2.0, 3.0, 4.0];
        let x = a.solve(&b).unwrap();
        assert!(dense_residual(&a, &x, &b) < 1e-13);
    }

    #[test]
    fn singular_is_reported() {
        let a = BandedSymMatrix::zeros(3, 1);
        assert!(matches!(a.factor(), Err(Error::LinearSolve(_))));
    }

    #[test]
    fn combine_and_quad_form() {
        let mut a = BandedSymMatrix::zeros(3, 1);
        let mut b = BandedSymMatrix::zeros(3, 2);
        for i in 0..3 {
            a.add(i, i, 1.0);
            b.add(i, i, 2.0);
        }
        b.add(0, 2, 1.0);
        let c = a.combine(3.0, &b, 0.5);
        assert_eq!(c.bandwidth(), 2);
        assert_eq!(c.get(1, 1), 4.0);
        assert_eq!(c.get(2, 0), 0.5);
        assert_eq!(c.quad_form(&[1.0, 0.0, 1.0]), 4.0 + 4.0 + 1.0);
    }

    proptest! {
        #[test]
        fn random_band_systems(
            n in 1usize..30,
            bw in 1usize..4,
            seed in proptest::collection::vec(-1.0f64..1.0, 200),
            shift in 0.0f64..3.0,
        ) {
            let mut a = BandedSymMatrix::zeros(n, bw);
            let mut it = seed.iter().cycle();
            for i in 0..n {
                a.add(i, i, shift + it.next().unwrap());
                for d in 1..=bw {
                    if i + d < n {
                        a.add(i, i + d, *it.next().unwrap());
                    }
                }
            }
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
            if let Ok(lu) = a.factor() {
                let x = lu.solve(&b).unwrap_or_default();
                if !x.is_empty() {
                    let xnorm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    let scale = 1.0 + a.max_abs() * xnorm;
                    prop_assert!(dense_residual(&a, &x, &b) < 1e-9 * scale);
                }
            }
        }
    }
}
