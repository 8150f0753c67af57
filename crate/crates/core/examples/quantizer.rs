//! Builds Gaussian-optimal uniform quantizers and evaluates the posterior
//! moments of the quantized output channel.

use otfs_detect::quant::{choose_step, output_posterior_moments, quantize, Bits, NoiseSpec, QuantizerSpec};
use otfs_detect::{Result, C64};

fn main() -> Result<()> {
    for bits in 1..=4u32 {
        let q = QuantizerSpec::for_input_power(Bits::Finite(bits), 0.5, None)?;
        println!("{bits}-bit: step {:.4}, levels {:?}", q.step(), q.levels());
    }

    let q = QuantizerSpec::new(3, choose_step(3, 0.5)?)?;
    let z = [C64::new(0.31, -1.7), C64::new(-0.05, 0.9)];
    let y = quantize(&z, &q);
    println!("quantize {z:?} -> {y:?}");

    let noise = NoiseSpec::new(0.05)?;
    for &v in &[0.01, 0.1, 1.0] {
        let (m, var) = output_posterior_moments(y[0], C64::new(0.2, -1.5), v, noise, &q)?;
        println!("cavity var {v}: posterior mean {m:.4}, variance {var:.4}");
    }
    Ok(())
}
