//! Gray-labelled unit-energy constellations.
//!
//! QPSK table (first bit selects the real sign, second bit the imaginary
//! sign, `0 -> +`):
//!
//! | bits | symbol          |
//! |------|-----------------|
//! | 00   | `(+1 + 1j)/√2`  |
//! | 01   | `(+1 - 1j)/√2`  |
//! | 10   | `(-1 + 1j)/√2`  |
//! | 11   | `(-1 - 1j)/√2`  |
//!
//! 16-QAM uses two bits per axis (real first) with the Gray PAM map
//! `00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3`, scaled by `1/√10`.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    name: &'static str,
    points: Vec<C64>,
    /// `labels[i]` is the bit label of `points[i]`, MSB first.
    labels: Vec<u32>,
    bits_per_symbol: usize,
}

impl Constellation {
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let points = (0..4u32)
            .map(|label| {
                let re = if label & 0b10 == 0 { a } else { -a };
                let im = if label & 0b01 == 0 { a } else { -a };
                C64::new(re, im)
            })
            .collect();
        Self { name: "qpsk", points, labels: (0..4).collect(), bits_per_symbol: 2 }
    }

    pub fn qam16() -> Self {
        let pam = |b: u32| match b {
            0b00 => -3.0,
            0b01 => -1.0,
            0b11 => 1.0,
            _ => 3.0,
        };
        let s = 1.0 / 10f64.sqrt();
        let points = (0..16u32).map(|label| C64::new(pam(label >> 2) * s, pam(label & 0b11) * s)).collect();
        Self { name: "qam16", points, labels: (0..16).collect(), bits_per_symbol: 4 }
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.size() as f64
    }

    /// Index of the point closest to `x`.
    pub fn nearest(&self, x: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (x - p).norm_sqr();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Maps bits (one `u8` per bit, 0 or 1) to symbols.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let k = self.bits_per_symbol;
        if bits.len() % k != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} bits is not a multiple of {k} bits per symbol",
                bits.len()
            )));
        }
        bits.chunks(k)
            .map(|chunk| {
                let mut label = 0u32;
                for &b in chunk {
                    if b > 1 {
                        return Err(Error::InvalidParameter(format!("bit value {b}")));
                    }
                    label = (label << 1) | b as u32;
                }
                let idx = self.labels.iter().position(|&l| l == label).expect("complete label table");
                Ok(self.points[idx])
            })
            .collect()
    }

    /// Nearest-point decisions, returned as bits.
    pub fn hard_demap(&self, symbols: &[C64]) -> Vec<u8> {
        let k = self.bits_per_symbol;
        let mut out = Vec::with_capacity(symbols.len() * k);
        for &x in symbols {
            let label = self.labels[self.nearest(x)];
            out.extend((0..k).rev().map(|s| ((label >> s) & 1) as u8));
        }
        out
    }

    /// Nearest-point decisions, returned as symbols.
    pub fn hard_decide(&self, symbols: &[C64]) -> Vec<C64> {
        symbols.iter().map(|&x| self.points[self.nearest(x)]).collect()
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Self::qpsk()),
            "qam16" | "16qam" => Ok(Self::qam16()),
            other => Err(Error::Config(format!("unknown constellation '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn qpsk_table() {
        let q = Constellation::qpsk();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(q.modulate(&[0, 0]).unwrap(), vec![C64::new(a, a)]);
        assert_eq!(q.modulate(&[1, 1]).unwrap(), vec![C64::new(-a, -a)]);
        assert_eq!(q.hard_demap(&[C64::new(0.9, 0.8)]), vec![0, 0]);
        assert!(q.modulate(&[0, 1, 1]).is_err());
    }

    #[test]
    fn unit_energy() {
        assert!((Constellation::qpsk().mean_energy() - 1.0).abs() < 1e-15);
        assert!((Constellation::qam16().mean_energy() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for c in [Constellation::qpsk(), Constellation::qam16()] {
            let pts = c.points();
            let dmin = pts
                .iter()
                .enumerate()
                .flat_map(|(i, a)| pts[i + 1..].iter().map(move |b| (a - b).norm()))
                .fold(f64::INFINITY, f64::min);
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    if i != j && ((pts[i] - pts[j]).norm() - dmin).abs() < 1e-12 {
                        assert_eq!((c.labels[i] ^ c.labels[j]).count_ones(), 1);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn demap_inverts_modulate(bits in proptest::collection::vec(0u8..2, 0..64)) {
            for c in [Constellation::qpsk(), Constellation::qam16()] {
                let n = bits.len() - bits.len() % c.bits_per_symbol();
                let b = &bits[..n];
                prop_assert_eq!(c.hard_demap(&c.modulate(b).unwrap()), b.to_vec());
            }
        }
    }
}
