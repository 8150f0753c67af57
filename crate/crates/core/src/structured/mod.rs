//! Fast inversion of the quasi-banded matrix `Psi = G / v1 + I / v0` with
//! `G = H0^H H0`.
//!
//! `G` couples symbols whose delays differ by at most `l_max`, so it is
//! banded except for two `l_max x l_max` corners produced by the cyclic wrap
//! of the delay shift. Partitioning
//!
//! ```text
//! Psi = [ T  B ]     T: (n - l) x (n - l), banded
//!       [ S  C ]     C: l x l
//! ```
//!
//! leaves a purely banded `T`, which is LU-factorized in band storage; the
//! corners are then absorbed through the `l x l` Schur complement
//! `K = (C - S T^{-1} B)^{-1}`. See [`factorize`], [`BandedFactors::solve`]
//! and [`BandedFactors::trace_inverse`].

mod band;
mod dense;
mod factor;

pub use band::{BandMatrix, PIVOT_TOL};
pub use dense::{dense_inverse, dense_inverse_oracle, DEFAULT_ORACLE_CAP};
pub use factor::{factorize, BandedFactors};

use nalgebra::DMatrix;

use crate::model::DelayDopplerChannel;
use crate::{Error, Result, C64};

/// Hermitian band-plus-corners matrix.
///
/// Entry `(i, j)` is the band value when `|i - j| <= l` plus the top-right
/// corner value when `i < l, j >= n - l`, plus the bottom-left corner value
/// when `i >= n - l, j < l`. For `n <= 3l` the corner blocks overlap the band
/// region; assembly routes every entry to exactly one store.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiBandedMatrix {
    band: BandMatrix,
    /// rows `0..l`, columns `n-l..n`
    corner_tr: DMatrix<C64>,
    /// rows `n-l..n`, columns `0..l`
    corner_bl: DMatrix<C64>,
}

impl QuasiBandedMatrix {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDims("empty matrix".into()));
        }
        if half_bandwidth > 0 && 2 * half_bandwidth >= n {
            return Err(Error::InvalidParameter(format!(
                "half bandwidth {half_bandwidth} must be < n/2 = {}",
                n as f64 / 2.0
            )));
        }
        let l = half_bandwidth;
        Ok(Self {
            band: BandMatrix::zeros(n, l),
            corner_tr: DMatrix::zeros(l, l),
            corner_bl: DMatrix::zeros(l, l),
        })
    }

    pub fn dim(&self) -> usize {
        self.band.dim()
    }

    pub fn half_bandwidth(&self) -> usize {
        self.band.half_bandwidth()
    }

    pub fn band(&self) -> &BandMatrix {
        &self.band
    }

    pub fn corner_tr(&self) -> &DMatrix<C64> {
        &self.corner_tr
    }

    pub fn corner_bl(&self) -> &DMatrix<C64> {
        &self.corner_bl
    }

    fn in_tr(&self, i: usize, j: usize) -> bool {
        let (n, l) = (self.dim(), self.half_bandwidth());
        i < l && j >= n - l && j < n
    }

    fn in_bl(&self, i: usize, j: usize) -> bool {
        let (n, l) = (self.dim(), self.half_bandwidth());
        j < l && i >= n - l && i < n
    }

    /// Whether `(i, j)` may hold a nonzero in band or corner storage.
    pub fn in_structure(&self, i: usize, j: usize) -> bool {
        self.band.in_band(i, j) || self.in_tr(i, j) || self.in_bl(i, j)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (n, l) = (self.dim(), self.half_bandwidth());
        let mut v = self.band.get(i, j);
        if self.in_tr(i, j) {
            v += self.corner_tr[(i, j - (n - l))];
        }
        if self.in_bl(i, j) {
            v += self.corner_bl[(i - (n - l), j)];
        }
        v
    }

    /// Adds `v` at `(i, j)`; band positions take precedence over corners.
    pub fn add(&mut self, i: usize, j: usize, v: C64) -> Result<()> {
        let (n, l) = (self.dim(), self.half_bandwidth());
        if self.band.in_band(i, j) {
            *self.band.at_mut(i, j) += v;
        } else if self.in_tr(i, j) {
            self.corner_tr[(i, j - (n - l))] += v;
        } else if self.in_bl(i, j) {
            self.corner_bl[(i - (n - l), j)] += v;
        } else {
            let offset = i.abs_diff(j).min(n - i.abs_diff(j));
            return Err(Error::BandOverflow { offset, half_bandwidth: l });
        }
        Ok(())
    }

    /// Copies a dense matrix, rejecting nonzeros outside the structure.
    pub fn from_dense(d: &DMatrix<C64>, half_bandwidth: usize) -> Result<Self> {
        if d.nrows() != d.ncols() {
            return Err(Error::DimensionMismatch { expected: d.nrows(), got: d.ncols() });
        }
        let mut q = Self::zeros(d.nrows(), half_bandwidth)?;
        for j in 0..d.ncols() {
            for i in 0..d.nrows() {
                let v = d[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    q.add(i, j, v)?;
                }
            }
        }
        Ok(q)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.get(i, j))
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let (n, l) = (self.dim(), self.half_bandwidth());
        assert_eq!(x.len(), n);
        let mut y = vec![C64::new(0.0, 0.0); n];
        for (i, yi) in y.iter_mut().enumerate() {
            for j in i.saturating_sub(l)..(i + l + 1).min(n) {
                *yi += self.band.get(i, j) * x[j];
            }
        }
        for a in 0..l {
            for b in 0..l {
                y[a] += self.corner_tr[(a, b)] * x[n - l + b];
                y[n - l + a] += self.corner_bl[(a, b)] * x[b];
            }
        }
        y
    }

    /// Max deviation from Hermitian symmetry over stored entries.
    pub fn hermitian_defect(&self) -> f64 {
        let (n, l) = (self.dim(), self.half_bandwidth());
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i.saturating_sub(l)..(i + l + 1).min(n) {
                worst = worst.max((self.band.get(i, j) - self.band.get(j, i).conj()).norm());
            }
        }
        worst.max((&self.corner_tr - self.corner_bl.adjoint()).norm())
    }
}

/// `G = H0^H H0` in quasi-banded storage with half bandwidth `l_max`,
/// in `O(P^2 MN)`.
pub fn assemble_gram(h0: &DelayDopplerChannel, l_max: usize) -> Result<QuasiBandedMatrix> {
    let n = h0.dims().mn();
    let terms: Vec<(C64, usize, usize)> = h0.path_terms().collect();
    if let Some(&(_, d, _)) = terms.iter().find(|(_, d, _)| *d > l_max) {
        return Err(Error::BandOverflow { offset: d, half_bandwidth: l_max });
    }
    let mut g = QuasiBandedMatrix::zeros(n, l_max)?;
    let roots = h0.roots();
    // Column c of H0 holds h_j z^{k_j c} at row (c + l_j) mod n; path i meets
    // it from column c' = (c + l_j - l_i) mod n.
    for c in 0..n {
        for &(hj, lj, kj) in &terms {
            let colj = hj * roots[(kj * c) % n];
            for &(hi, li, ki) in &terms {
                let cp = (c + lj + n - li) % n;
                let coli = hi * roots[(ki * cp) % n];
                g.add(cp, c, coli.conj() * colj)?;
            }
        }
    }
    Ok(g)
}

/// `Psi = G / v1 + I / v0`.
pub fn assemble_psi(gram: &QuasiBandedMatrix, v1: f64, v0: f64) -> Result<QuasiBandedMatrix> {
    if !(v1 > 0.0 && v0 > 0.0) {
        return Err(Error::InvalidParameter(format!("variances must be positive (v1 = {v1}, v0 = {v0})")));
    }
    let mut psi = gram.clone();
    let s = 1.0 / v1;
    psi.band.scale(s);
    psi.corner_tr *= C64::new(s, 0.0);
    psi.corner_bl *= C64::new(s, 0.0);
    let d = C64::new(1.0 / v0, 0.0);
    for i in 0..psi.dim() {
        *psi.band.at_mut(i, i) += d;
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{draw_channel, ChannelPath, ChannelRealization, OtfsDims};
    use crate::oracles;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn channel(paths: Vec<(f64, usize, i64)>, dims: OtfsDims) -> DelayDopplerChannel {
        let paths = paths
            .into_iter()
            .map(|(g, l, k)| ChannelPath { gain: C64::new(g, 0.3 * g), delay_tap: l, doppler_tap: k })
            .collect();
        DelayDopplerChannel::new(&ChannelRealization { paths, l_max: 3, k_max: 2 }, dims).unwrap()
    }

    #[test]
    fn gram_of_identity_and_single_path() {
        let dims = OtfsDims::new(4, 2).unwrap();
        let h0 = DelayDopplerChannel::new(
            &ChannelRealization {
                paths: vec![ChannelPath { gain: C64::new(1.0, 0.0), delay_tap: 0, doppler_tap: 0 }],
                l_max: 1,
                k_max: 0,
            },
            dims,
        )
        .unwrap();
        assert_eq!(assemble_gram(&h0, 2).unwrap().to_dense(), DMatrix::identity(8, 8));
        let h0 = channel(vec![(0.8, 2, -1)], dims);
        let g = assemble_gram(&h0, 2).unwrap().to_dense();
        let expect = DMatrix::<C64>::identity(8, 8) * C64::new(0.8 * 0.8 * 1.09, 0.0);
        assert!((g - expect).norm() < 1e-14);
    }

    #[test]
    fn gram_matches_dense() {
        let dims = OtfsDims::new(8, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let ch = draw_channel(&mut rng, 4, 3, 2).unwrap();
            let h0 = DelayDopplerChannel::new(&ch, dims).unwrap();
            let g = assemble_gram(&h0, 3).unwrap();
            let d = oracles::dense_h0(&ch, dims);
            let expect = d.adjoint() * &d;
            assert!((g.to_dense() - &expect).norm() < 1e-12);
            assert!(g.hermitian_defect() < 1e-14);
        }
    }

    #[test]
    fn gram_rejects_overflow() {
        let dims = OtfsDims::new(8, 4).unwrap();
        let h0 = channel(vec![(1.0, 0, 0), (0.5, 3, 1)], dims);
        assert!(matches!(assemble_gram(&h0, 2), Err(Error::BandOverflow { .. })));
        assert!(QuasiBandedMatrix::zeros(8, 4).is_err());
    }

    #[test]
    fn psi_examples() {
        let g = QuasiBandedMatrix::zeros(6, 2).unwrap();
        let psi = assemble_psi(&g, 1.0, 0.25).unwrap();
        assert_eq!(psi.to_dense(), DMatrix::identity(6, 6) * C64::new(4.0, 0.0));
        let id = QuasiBandedMatrix::from_dense(&DMatrix::identity(6, 6), 2).unwrap();
        assert_eq!(assemble_psi(&id, 1.0, 1.0).unwrap().to_dense(), DMatrix::identity(6, 6) * C64::new(2.0, 0.0));
        assert!(assemble_psi(&g, 0.0, 1.0).is_err());
        assert!(assemble_psi(&g, 1.0, -1.0).is_err());
    }

    #[test]
    fn psi_eigenvalues_bounded_below() {
        let dims = OtfsDims::new(8, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for v0 in [0.1, 1.0, 7.0] {
            let ch = draw_channel(&mut rng, 5, 3, 3).unwrap();
            let g = assemble_gram(&DelayDopplerChannel::new(&ch, dims).unwrap(), 3).unwrap();
            let psi = assemble_psi(&g, 0.3, v0).unwrap().to_dense();
            let eig = psi.symmetric_eigenvalues();
            assert!(eig.iter().all(|&e| e >= 1.0 / v0 - 1e-10), "{eig}");
        }
    }

    #[test]
    fn from_dense_rejects_off_structure() {
        let mut d = DMatrix::<C64>::identity(10, 10);
        d[(0, 5)] = C64::new(1.0, 0.0);
        assert!(QuasiBandedMatrix::from_dense(&d, 2).is_err());
        d[(0, 5)] = C64::new(0.0, 0.0);
        d[(1, 9)] = C64::new(1.0, 0.0);
        let q = QuasiBandedMatrix::from_dense(&d, 2).unwrap();
        assert_eq!(q.to_dense(), d);
    }
}
