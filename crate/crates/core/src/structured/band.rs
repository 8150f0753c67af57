//! Square banded matrices in row-wise diagonal-offset storage, with an
//! in-place pivot-free LU, triangular solves and selected inversion.

use crate::{Error, Result, C64};

/// Pivots below this magnitude abort the factorization.
pub const PIVOT_TOL: f64 = 1e-14;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `n x n` matrix whose entries vanish outside `|i - j| <= bw`.
///
/// Row `i` stores columns `i - bw ..= i + bw` contiguously; slots that fall
/// outside `0..n` are kept at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![ZERO; n * (2 * bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.bw + 1
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i.abs_diff(j) <= self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width() + j + self.bw - i
    }

    /// Entry `(i, j)`; zero outside the band.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            ZERO
        }
    }

    /// Mutable entry `(i, j)`. Panics outside the band.
    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        assert!(self.in_band(i, j), "({i}, {j}) outside band of width {}", self.bw);
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// Leading `m x m` block.
    pub fn leading(&self, m: usize) -> BandMatrix {
        assert!(m <= self.n);
        let mut out = BandMatrix::zeros(m, self.bw);
        for i in 0..m {
            for j in i.saturating_sub(self.bw)..(i + self.bw + 1).min(m) {
                *out.at_mut(i, j) = self.get(i, j);
            }
        }
        out
    }

    /// Factorizes in place into a unit lower `L` (stored strictly below the
    /// diagonal) and an upper `U`. No pivoting, so fill stays in the band.
    pub fn lu_in_place(&mut self) -> Result<()> {
        let (n, bw) = (self.n, self.bw);
        for k in 0..n {
            let pivot = self.get(k, k);
            if !(pivot.norm() >= PIVOT_TOL) {
                return Err(Error::IllConditioned { row: k, pivot: pivot.norm() });
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                let l = self.get(i, k) / pivot;
                *self.at_mut(i, k) = l;
                if l == ZERO {
                    continue;
                }
                for j in k + 1..=last {
                    let ukj = self.get(k, j);
                    *self.at_mut(i, j) -= l * ukj;
                }
            }
        }
        Ok(())
    }

    /// Solves `L U x = b` in place, `self` holding the output of
    /// [`lu_in_place`](Self::lu_in_place).
    pub fn lu_solve_in_place(&self, b: &mut [C64]) {
        let (n, bw) = (self.n, self.bw);
        assert_eq!(b.len(), n);
        for i in 0..n {
            let mut acc = b[i];
            for j in i.saturating_sub(bw)..i {
                acc -= self.get(i, j) * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..(i + bw + 1).min(n) {
                acc -= self.get(i, j) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
    }

    /// In-band entries of `(L U)^{-1}` from packed LU factors, by the
    /// Takahashi recurrences run from the bottom-right corner upwards.
    ///
    /// With `LU = L D V` (`V` unit upper) the inverse `Z` satisfies
    /// `Z = D^{-1} L^{-1} + (I - V) Z` and `Z = V^{-1} D^{-1} + Z (I - L)`;
    /// restricted to the band both sums only touch band entries of `Z` with
    /// larger indices.
    pub fn lu_selected_inverse(&self) -> BandMatrix {
        let (n, bw) = (self.n, self.bw);
        let mut z = BandMatrix::zeros(n, bw);
        for i in (0..n).rev() {
            let d = self.get(i, i);
            let hi = (i + bw).min(n - 1);
            for j in i + 1..=hi {
                let mut upper = ZERO;
                let mut lower = ZERO;
                for k in i + 1..=hi {
                    upper -= self.get(i, k) / d * z.get(k, j);
                    lower -= z.get(j, k) * self.get(k, i);
                }
                *z.at_mut(i, j) = upper;
                *z.at_mut(j, i) = lower;
            }
            let mut diag = C64::new(1.0, 0.0) / d;
            for k in i + 1..=hi {
                diag -= self.get(i, k) / d * z.get(k, i);
            }
            *z.at_mut(i, i) = diag;
        }
        z
    }

    /// Dense copy, test scale.
    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}
