//! Delay-Doppler channel, Doppler-axis DFT and the effective channel seen by
//! the ADC.
//!
//! Vectors of length `MN` hold an `M x N` grid column-major with the delay
//! index fastest: element `(m, n)` lives at `m + M * n`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OtfsDims {
    m: usize,
    n: usize,
}

impl OtfsDims {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidDims(format!("M = {m}, N = {n}; both must be >= 1")));
        }
        Ok(Self { m, n })
    }

    /// Subcarriers (delay bins).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Time slots (Doppler bins).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.mn() {
            return Err(Error::DimensionMismatch { expected: self.mn(), got: len });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelPath {
    pub gain: C64,
    pub delay_tap: usize,
    pub doppler_tap: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<ChannelPath>,
    pub l_max: usize,
    pub k_max: usize,
}

impl ChannelRealization {
    /// Largest delay tap actually present.
    pub fn max_delay(&self) -> usize {
        self.paths.iter().map(|p| p.delay_tap).max().unwrap_or(0)
    }

    /// `sum |h_i|^2`, the expected per-sample energy of `H0 x` for unit-energy
    /// symbols.
    pub fn energy(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }
}

/// Draws a `P`-path channel: `l_1 = 0`, `l_i ~ U[1, l_max]` for `i >= 2`,
/// `k_i ~ U[-k_max, k_max]` and `h_i ~ CN(0, 1/P)`.
pub fn draw_channel<R: Rng + ?Sized>(
    rng: &mut R,
    paths: usize,
    l_max: usize,
    k_max: usize,
) -> Result<ChannelRealization> {
    if paths == 0 {
        return Err(Error::InvalidParameter("path count must be >= 1".into()));
    }
    if l_max == 0 {
        return Err(Error::InvalidParameter("l_max must be >= 1".into()));
    }
    let sd = (0.5 / paths as f64).sqrt();
    let k_max_i = k_max as i64;
    let paths = (0..paths)
        .map(|i| {
            let delay_tap = if i == 0 { 0 } else { rng.random_range(1..=l_max) };
            let doppler_tap = rng.random_range(-k_max_i..=k_max_i);
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            ChannelPath { gain: C64::new(re * sd, im * sd), delay_tap, doppler_tap }
        })
        .collect();
    Ok(ChannelRealization { paths, l_max, k_max })
}

/// `z^t` for `z = exp(j 2 pi / MN)`, `t = 0..MN`.
fn unit_roots(mn: usize) -> Vec<C64> {
    (0..mn).map(|t| C64::from_polar(1.0, 2.0 * PI * t as f64 / mn as f64)).collect()
}

#[derive(Clone, Debug)]
struct PathOp {
    gain: C64,
    delay: usize,
    /// Doppler tap reduced mod MN.
    doppler: usize,
}

/// `H0 = sum_i h_i Pi^{l_i} Delta^{k_i}` stored per path as a cyclic offset
/// and a phase ramp, so that one multiply costs `O(P MN)`.
#[derive(Clone)]
pub struct DelayDopplerChannel {
    dims: OtfsDims,
    paths: Vec<PathOp>,
    roots: Arc<Vec<C64>>,
    realization: ChannelRealization,
}

impl fmt::Debug for DelayDopplerChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DelayDopplerChannel")
            .field("dims", &self.dims)
            .field("realization", &self.realization)
            .finish()
    }
}

impl DelayDopplerChannel {
    /// Builds `H0` for `channel` on a grid of size `dims`.
    pub fn new(channel: &ChannelRealization, dims: OtfsDims) -> Result<Self> {
        let mn = dims.mn();
        if channel.paths.is_empty() {
            return Err(Error::InvalidParameter("channel has no paths".into()));
        }
        let mut paths = Vec::with_capacity(channel.paths.len());
        for (i, p) in channel.paths.iter().enumerate() {
            if p.delay_tap >= mn {
                return Err(Error::TapOutOfRange {
                    path: i,
                    what: format!("delay tap {} >= MN = {mn}", p.delay_tap),
                });
            }
            if p.doppler_tap.unsigned_abs() as usize >= mn {
                return Err(Error::TapOutOfRange {
                    path: i,
                    what: format!("|doppler tap {}| >= MN = {mn}", p.doppler_tap),
                });
            }
            paths.push(PathOp {
                gain: p.gain,
                delay: p.delay_tap,
                doppler: p.doppler_tap.rem_euclid(mn as i64) as usize,
            });
        }
        Ok(Self { dims, paths, roots: Arc::new(unit_roots(mn)), realization: channel.clone() })
    }

    pub fn dims(&self) -> OtfsDims {
        self.dims
    }

    pub fn realization(&self) -> &ChannelRealization {
        &self.realization
    }

    /// `z^(k c)` with `k` already reduced mod MN.
    #[inline]
    fn phase(&self, doppler: usize, col: usize) -> C64 {
        let mn = self.dims.mn();
        self.roots[(doppler * col) % mn]
    }

    /// `H0 x`.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.dims.check_len(x.len())?;
        let mn = self.dims.mn();
        let mut out = vec![C64::new(0.0, 0.0); mn];
        for p in &self.paths {
            for c in 0..mn {
                let r = (c + p.delay) % mn;
                out[r] += p.gain * self.phase(p.doppler, c) * x[c];
            }
        }
        Ok(out)
    }

    /// `H0^H y`.
    pub fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        self.dims.check_len(y.len())?;
        let mn = self.dims.mn();
        let mut out = vec![C64::new(0.0, 0.0); mn];
        for p in &self.paths {
            for c in 0..mn {
                let r = (c + p.delay) % mn;
                out[c] += (p.gain * self.phase(p.doppler, c)).conj() * y[r];
            }
        }
        Ok(out)
    }

    /// Nonzero entries of column `c` as `(row, value)`, duplicates merged.
    pub fn column(&self, c: usize) -> Vec<(usize, C64)> {
        let mn = self.dims.mn();
        let mut entries: Vec<(usize, C64)> = Vec::with_capacity(self.paths.len());
        for p in &self.paths {
            let r = (c + p.delay) % mn;
            let v = p.gain * self.phase(p.doppler, c);
            match entries.iter_mut().find(|(row, _)| *row == r) {
                Some((_, acc)) => *acc += v,
                None => entries.push((r, v)),
            }
        }
        entries
    }

    /// `||H0||_F^2`, which also equals `||H||_F^2`.
    pub fn frobenius_norm_sq(&self) -> f64 {
        (0..self.dims.mn())
            .map(|c| self.column(c).iter().map(|(_, v)| v.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mn = self.dims.mn();
        let mut h = DMatrix::zeros(mn, mn);
        for c in 0..mn {
            for (r, v) in self.column(c) {
                h[(r, c)] += v;
            }
        }
        h
    }

    /// Per-path `(gain, delay, doppler mod MN)` triples, used by Gram assembly.
    pub(crate) fn path_terms(&self) -> impl Iterator<Item = (C64, usize, usize)> + '_ {
        self.paths.iter().map(|p| (p.gain, p.delay, p.doppler))
    }

    pub(crate) fn roots(&self) -> &[C64] {
        &self.roots
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DftDirection {
    /// `F_N ⊗ I_M`
    Forward,
    /// `F_N^H ⊗ I_M`
    Adjoint,
}

/// Normalized `N`-point DFT along the Doppler axis of each delay row.
#[derive(Clone)]
pub struct DopplerDft {
    dims: OtfsDims,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DopplerDft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DopplerDft").field("dims", &self.dims).finish()
    }
}

impl DopplerDft {
    pub fn new(dims: OtfsDims) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims,
            forward: planner.plan_fft(dims.n(), FftDirection::Forward),
            inverse: planner.plan_fft(dims.n(), FftDirection::Inverse),
        }
    }

    pub fn apply(&self, x: &[C64], direction: DftDirection) -> Result<Vec<C64>> {
        self.dims.check_len(x.len())?;
        let (m, n) = (self.dims.m(), self.dims.n());
        if n == 1 {
            return Ok(x.to_vec());
        }
        // Transpose so every delay row is contiguous, transform all rows in
        // one call, transpose back.
        let mut rows = vec![C64::new(0.0, 0.0); m * n];
        for col in 0..n {
            for d in 0..m {
                rows[d * n + col] = x[d + m * col];
            }
        }
        match direction {
            DftDirection::Forward => self.forward.process(&mut rows),
            DftDirection::Adjoint => self.inverse.process(&mut rows),
        }
        let scale = 1.0 / (n as f64).sqrt();
        let mut out = vec![C64::new(0.0, 0.0); m * n];
        for col in 0..n {
            for d in 0..m {
                out[d + m * col] = rows[d * n + col] * scale;
            }
        }
        Ok(out)
    }
}

/// Applies `F_N ⊗ I_M` or its adjoint to `x`.
pub fn kron_dft_apply(x: &[C64], dims: OtfsDims, direction: DftDirection) -> Result<Vec<C64>> {
    DopplerDft::new(dims).apply(x, direction)
}

/// The effective channel `H = H0 (F_N^H ⊗ I_M)` between delay-Doppler
/// symbols and the pre-quantization samples.
#[derive(Clone, Debug)]
pub struct EffectiveChannel {
    h0: DelayDopplerChannel,
    dft: DopplerDft,
}

impl EffectiveChannel {
    pub fn new(h0: DelayDopplerChannel) -> Self {
        let dft = DopplerDft::new(h0.dims());
        Self { h0, dft }
    }

    pub fn from_realization(channel: &ChannelRealization, dims: OtfsDims) -> Result<Self> {
        Ok(Self::new(DelayDopplerChannel::new(channel, dims)?))
    }

    pub fn h0(&self) -> &DelayDopplerChannel {
        &self.h0
    }

    pub fn dft(&self) -> &DopplerDft {
        &self.dft
    }

    pub fn dims(&self) -> OtfsDims {
        self.h0.dims()
    }

    /// `H x`.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.h0.apply(&self.dft.apply(x, DftDirection::Adjoint)?)
    }

    /// `H^H y = (F_N ⊗ I_M) H0^H y`.
    pub fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        self.dft.apply(&self.h0.apply_adjoint(y)?, DftDirection::Forward)
    }

    /// Dense `H`, column by column.
    pub fn to_dense(&self) -> DMatrix<C64> {
        dense_from_columns(self.dims().mn(), |e| self.apply(e).expect("length checked"))
    }
}

/// Free-function form of [`EffectiveChannel::apply`].
pub fn effective_apply(h0: &DelayDopplerChannel, x: &[C64]) -> Result<Vec<C64>> {
    h0.apply(&kron_dft_apply(x, h0.dims(), DftDirection::Adjoint)?)
}

/// Free-function form of [`EffectiveChannel::apply_adjoint`].
pub fn effective_apply_adjoint(h0: &DelayDopplerChannel, y: &[C64]) -> Result<Vec<C64>> {
    kron_dft_apply(&h0.apply_adjoint(y)?, h0.dims(), DftDirection::Forward)
}

/// `H_ideal = (F_N ⊗ I_M) H0 (F_N^H ⊗ I_M)`, materialized. Test scale only.
pub fn ideal_channel_matrix(h0: &DelayDopplerChannel) -> DMatrix<C64> {
    let dft = DopplerDft::new(h0.dims());
    dense_from_columns(h0.dims().mn(), |e| {
        let t = dft.apply(e, DftDirection::Adjoint).expect("length checked");
        let t = h0.apply(&t).expect("length checked");
        dft.apply(&t, DftDirection::Forward).expect("length checked")
    })
}

pub(crate) fn dense_from_columns(n: usize, mut col: impl FnMut(&[C64]) -> Vec<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        let c = col(&e);
        out.set_column(j, &nalgebra::DVector::from_vec(c));
        e[j] = C64::new(0.0, 0.0);
    }
    out
}
