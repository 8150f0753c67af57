//! Detects one quantized OTFS frame with GEC-SR and prints the NMSE after
//! each iteration.

use otfs_detect::constellation::Constellation;
use otfs_detect::detect::{gec_sr_detect, DetectorConfig, Observation, Prior};
use otfs_detect::model::OtfsDims;
use otfs_detect::quant::Bits;
use otfs_detect::sim::{compute_ser, draw_instance};
use otfs_detect::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let dims = OtfsDims::new(32, 8)?;
    let qpsk = Constellation::qpsk();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let inst = draw_instance(&mut rng, dims, &qpsk, 6, 14, 6)?;
    let (y, output) = inst.observe(12.0, Bits::Finite(3), None)?;

    let obs = Observation { y: &y, channel: &inst.channel, output: &output };
    let res = gec_sr_detect(&obs, &Prior::Discrete(qpsk.clone()), &DetectorConfig::default(), Some(&inst.x))?;
    for (t, e) in res.per_iter_nmse.unwrap_or_default().iter().enumerate() {
        println!("iteration {:2}: nmse {:7.2} dB", t + 1, 10.0 * e.log10());
    }
    println!("iterations run {}, SER {:.4}", res.iters_run, compute_ser(&res.x_soft, &inst.x, &qpsk)?);
    println!("time: linear {:?}, output {:?}, prior {:?}", res.times.linear, res.times.output, res.times.prior);
    Ok(())
}
