use nalgebra::DMatrix;

use super::band::BandMatrix;
use super::dense::dense_inverse;
use super::QuasiBandedMatrix;
use crate::{Error, Result, C64};

/// Blockwise factorization of a Hermitian positive definite quasi-banded
/// matrix.
///
/// Holds the packed band LU of the leading block `T`, the panel
/// `E = T^{-1} B`, the bottom-left block `S` and the inverse Schur complement
/// `K = (C - S E)^{-1}`. The panel costs `O(l n)` memory and is shared by
/// [`solve`](Self::solve) and [`trace_inverse`](Self::trace_inverse).
#[derive(Clone, Debug)]
pub struct BandedFactors {
    n: usize,
    l: usize,
    lu: BandMatrix,
    e: DMatrix<C64>,
    s: DMatrix<C64>,
    schur_inv: DMatrix<C64>,
}

/// Factorizes `psi` in `O(l^2 n + l^3)`.
pub fn factorize(psi: &QuasiBandedMatrix) -> Result<BandedFactors> {
    let n = psi.dim();
    let l = psi.half_bandwidth();
    let nt = n - l;

    let mut lu = psi.band().leading(nt);
    lu.lu_in_place()?;

    // B's nonzeros: the band tail near row nt and the top-right corner.
    let mut e = DMatrix::<C64>::zeros(nt, l);
    for c in 0..l {
        let col = &mut e.as_mut_slice()[c * nt..(c + 1) * nt];
        for (i, v) in col.iter_mut().enumerate() {
            let j = nt + c;
            if i + l >= j || i < l {
                *v = psi.get(i, j);
            }
        }
        lu.lu_solve_in_place(col);
    }

    let mut s = DMatrix::<C64>::zeros(l, nt);
    for r in 0..l {
        let i = nt + r;
        for j in (0..l).chain(i.saturating_sub(l)..nt) {
            s[(r, j)] = psi.get(i, j);
        }
    }

    let c = DMatrix::from_fn(l, l, |a, b| psi.get(nt + a, nt + b));
    let schur = c - &s * &e;
    let schur_inv = if l == 0 { schur } else { dense_inverse(&schur)? };

    Ok(BandedFactors { n, l, lu, e, s, schur_inv })
}

impl BandedFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.l
    }

    /// Unit lower factor of `T`, dense. Test scale.
    pub fn lower_dense(&self) -> DMatrix<C64> {
        let nt = self.n - self.l;
        DMatrix::from_fn(nt, nt, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => C64::new(1.0, 0.0),
            std::cmp::Ordering::Greater => self.lu.get(i, j),
            std::cmp::Ordering::Less => C64::new(0.0, 0.0),
        })
    }

    /// Upper factor of `T`, dense. Test scale.
    pub fn upper_dense(&self) -> DMatrix<C64> {
        let nt = self.n - self.l;
        DMatrix::from_fn(nt, nt, |i, j| if i <= j { self.lu.get(i, j) } else { C64::new(0.0, 0.0) })
    }

    /// `E = T^{-1} B`.
    pub fn panel(&self) -> &DMatrix<C64> {
        &self.e
    }

    /// `K = (C - S T^{-1} B)^{-1}`.
    pub fn schur_inv(&self) -> &DMatrix<C64> {
        &self.schur_inv
    }

    /// Solves `Psi u = r` in `O(l n)` without forming `Psi^{-1}`:
    /// `t = T^{-1} r1`, `u2 = K (r2 - S t)`, `u1 = t - E u2`.
    pub fn solve(&self, r: &[C64]) -> Result<Vec<C64>> {
        if r.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: r.len() });
        }
        let nt = self.n - self.l;
        let mut u = r.to_vec();
        let (t, tail) = u.split_at_mut(nt);
        self.lu.lu_solve_in_place(t);
        if self.l == 0 {
            return Ok(u);
        }
        let mut w: Vec<C64> = tail.to_vec();
        for (a, wa) in w.iter_mut().enumerate() {
            for j in 0..nt {
                let sv = self.s[(a, j)];
                if sv != C64::new(0.0, 0.0) {
                    *wa -= sv * t[j];
                }
            }
        }
        for (a, ua) in tail.iter_mut().enumerate() {
            *ua = (0..self.l).map(|b| self.schur_inv[(a, b)] * w[b]).sum();
        }
        for c in 0..self.l {
            let col = &self.e.as_slice()[c * nt..(c + 1) * nt];
            let uc = tail[c];
            for (ti, ec) in t.iter_mut().zip(col) {
                *ti -= ec * uc;
            }
        }
        Ok(u)
    }

    /// `tr(Psi^{-1}) = tr(T^{-1}) + tr(E K E^H) + tr(K)`, using `S = B^H`.
    ///
    /// `tr(T^{-1})` comes from the in-band selected inverse of the LU
    /// factors, so the whole trace costs `O(l^2 n + l^3)`.
    pub fn trace_inverse(&self) -> Result<f64> {
        let nt = self.n - self.l;
        let z = self.lu.lu_selected_inverse();
        let mut tr: C64 = (0..nt).map(|i| z.get(i, i)).sum();
        if self.l > 0 {
            let ek = &self.e * &self.schur_inv;
            tr += ek.iter().zip(self.e.iter()).map(|(a, b)| a * b.conj()).sum::<C64>();
            tr += self.schur_inv.trace();
        }
        if !(tr.re > 0.0 && tr.re.is_finite()) || tr.im.abs() > 1e-8 * tr.re.abs() {
            return Err(Error::Internal(format!("trace of inverse {tr} is not real positive")));
        }
        Ok(tr.re)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{assemble_gram, assemble_psi, dense_inverse_oracle, DEFAULT_ORACLE_CAP};
    use super::*;
    use crate::model::{draw_channel, DelayDopplerChannel, OtfsDims};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_psi(m: usize, n: usize, paths: usize, l: usize, seed: u64) -> QuasiBandedMatrix {
        let dims = OtfsDims::new(m, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = draw_channel(&mut rng, paths, l, 3).unwrap();
        let g = assemble_gram(&DelayDopplerChannel::new(&ch, dims).unwrap(), l).unwrap();
        assemble_psi(&g, 0.37, 1.9).unwrap()
    }

    fn rel_err(a: &[C64], b: &[C64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn identity_factors() {
        let id = QuasiBandedMatrix::from_dense(&DMatrix::identity(9, 9), 2).unwrap();
        let f = factorize(&id).unwrap();
        assert_eq!(f.lower_dense(), DMatrix::identity(7, 7));
        assert_eq!(f.upper_dense(), DMatrix::identity(7, 7));
        assert!(f.panel().iter().all(|v| v.norm() == 0.0));
        assert_eq!(f.schur_inv(), &DMatrix::<C64>::identity(2, 2));
        let r: Vec<C64> = (0..9).map(|i| C64::new(i as f64, 2.0)).collect();
        assert_eq!(f.solve(&r).unwrap(), r);
        assert!((f.trace_inverse().unwrap() - 9.0).abs() < 1e-14);
    }

    #[test]
    fn scaled_identity() {
        let psi = QuasiBandedMatrix::from_dense(&(DMatrix::identity(12, 12) * C64::new(2.0, 0.0)), 3).unwrap();
        let f = factorize(&psi).unwrap();
        let r: Vec<C64> = (0..12).map(|i| C64::new(1.0, i as f64)).collect();
        let u = f.solve(&r).unwrap();
        assert!(u.iter().zip(&r).all(|(a, b)| (a - b / 2.0).norm() < 1e-15));
        assert!((f.trace_inverse().unwrap() - 6.0).abs() < 1e-13);
        assert!(f.solve(&r[..5]).is_err());
    }

    #[test]
    fn diagonal_without_corners() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
            C64::new(4.0, 0.0),
        ]));
        let f = factorize(&QuasiBandedMatrix::from_dense(&d, 0).unwrap()).unwrap();
        assert!((f.trace_inverse().unwrap() - 1.75).abs() < 1e-15);
    }

    #[test]
    fn factors_reconstruct_leading_block() {
        let psi = random_psi(6, 4, 5, 3, 2);
        let f = factorize(&psi).unwrap();
        let t = psi.to_dense().view((0, 0), (21, 21)).into_owned();
        assert!((f.lower_dense() * f.upper_dense() - &t).norm() / t.norm() < 1e-10);
    }

    #[test]
    fn blockwise_inverse_matches_dense() {
        let psi = random_psi(6, 4, 5, 3, 8);
        let f = factorize(&psi).unwrap();
        let inv = dense_inverse_oracle(&psi, DEFAULT_ORACLE_CAP).unwrap();
        let mut rebuilt = DMatrix::<C64>::zeros(24, 24);
        let mut e = vec![C64::new(0.0, 0.0); 24];
        for j in 0..24 {
            e[j] = C64::new(1.0, 0.0);
            rebuilt.set_column(j, &nalgebra::DVector::from_vec(f.solve(&e).unwrap()));
            e[j] = C64::new(0.0, 0.0);
        }
        assert!((rebuilt - &inv).norm() / inv.norm() < 1e-10);
    }

    #[test]
    fn wide_band_relative_to_n() {
        // n < 3l: the corner blocks overlap band positions.
        let psi = random_psi(8, 4, 14, 14, 5);
        let f = factorize(&psi).unwrap();
        let inv = dense_inverse_oracle(&psi, DEFAULT_ORACLE_CAP).unwrap();
        let r: Vec<C64> = (0..32).map(|i| C64::new((i as f64).sin(), 1.0)).collect();
        let expect: Vec<C64> = (&inv * nalgebra::DVector::from_vec(r.clone())).iter().copied().collect();
        assert!(rel_err(&f.solve(&r).unwrap(), &expect) < 1e-10);
        let tr = inv.trace().re;
        assert!((f.trace_inverse().unwrap() - tr).abs() / tr < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn solve_and_trace_match_dense(paths in 1usize..7, l in 1usize..5, seed in 0u64..1000) {
            let psi = random_psi(8, 4, paths, l, seed);
            let f = factorize(&psi).unwrap();
            let inv = dense_inverse_oracle(&psi, DEFAULT_ORACLE_CAP).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            for _ in 0..5 {
                let r: Vec<C64> = (0..32).map(|_| {
                    use rand::Rng;
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                }).collect();
                let u = f.solve(&r).unwrap();
                let back = psi.mul_vec(&u);
                prop_assert!(rel_err(&back, &r) < 1e-10);
            }
            let tr = inv.trace().re;
            prop_assert!((f.trace_inverse().unwrap() - tr).abs() / tr < 1e-9);
        }
    }
}
