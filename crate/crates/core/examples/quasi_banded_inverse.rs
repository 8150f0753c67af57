//! Factorizes the quasi-banded matrix `G / v1 + I / v0` and checks the
//! solve and trace against a dense inverse.

use nalgebra::DVector;
use otfs_detect::model::{draw_channel, DelayDopplerChannel, OtfsDims};
use otfs_detect::structured::{assemble_gram, assemble_psi, dense_inverse, factorize};
use otfs_detect::{Result, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let dims = OtfsDims::new(32, 8)?;
    let l_max = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let real = draw_channel(&mut rng, 5, l_max, 3)?;
    let h0 = DelayDopplerChannel::new(&real, dims)?;
    let psi = assemble_psi(&assemble_gram(&h0, l_max)?, 0.8, 2.0)?;
    println!("dim {}, half bandwidth {}", psi.dim(), psi.half_bandwidth());

    let f = factorize(&psi)?;
    let r: Vec<C64> = (0..dims.mn()).map(|i| C64::new(1.0, (i % 5) as f64)).collect();
    let u = f.solve(&r)?;
    let tr = f.trace_inverse()?;

    let inv = dense_inverse(&psi.to_dense())?;
    let u_ref = &inv * DVector::from_column_slice(&r);
    let err = u.iter().zip(u_ref.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("solve max abs error {err:.2e}");
    println!("trace {tr:.10} vs dense {:.10}", inv.trace().re);
    Ok(())
}
