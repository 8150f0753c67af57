//! Draws a random delay-Doppler channel, applies the effective operator
//! and compares it with its dense form.

use otfs_detect::model::{draw_channel, ideal_channel_matrix, EffectiveChannel, OtfsDims};
use otfs_detect::{Result, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let dims = OtfsDims::new(16, 8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let real = draw_channel(&mut rng, 4, 5, 2)?;
    for p in &real.paths {
        println!("path gain {:.3} delay {} doppler {}", p.gain, p.delay_tap, p.doppler_tap);
    }
    println!("channel energy {:.4}", real.energy());

    let h = EffectiveChannel::from_realization(&real, dims)?;
    let x: Vec<C64> = (0..dims.mn()).map(|i| C64::new((i % 3) as f64 - 1.0, (i % 2) as f64)).collect();
    let y = h.apply(&x)?;
    let dense = h.to_dense();
    let y_dense = &dense * nalgebra::DVector::from_column_slice(&x);
    let err = y.iter().zip(y_dense.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("operator vs dense matrix: max abs difference {err:.2e}");

    let ideal = ideal_channel_matrix(h.h0());
    println!("||H||_F^2 = {:.3}, ||H_ideal||_F^2 = {:.3}", dense.norm_squared(), ideal.norm_squared());
    Ok(())
}
