//! Runs GEC-SR, GAMP and LMMSE on the same quantized frame.

use otfs_detect::constellation::Constellation;
use otfs_detect::detect::{gamp_detect, gec_sr_detect, lmmse_detect, DetectorConfig, Observation, Prior};
use otfs_detect::model::OtfsDims;
use otfs_detect::quant::Bits;
use otfs_detect::sim::{compute_nmse, draw_instance};
use otfs_detect::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let dims = OtfsDims::new(32, 8)?;
    let qpsk = Constellation::qpsk();
    let prior = Prior::Discrete(qpsk.clone());
    let cfg = DetectorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = draw_instance(&mut rng, dims, &qpsk, 6, 14, 6)?;

    for snr in [4.0, 12.0] {
        let (y, output) = inst.observe(snr, Bits::Finite(3), None)?;
        let obs = Observation { y: &y, channel: &inst.channel, output: &output };
        let db = |x: &[_]| compute_nmse(x, &inst.x).map(|e| 10.0 * e.log10());
        let gec = gec_sr_detect(&obs, &prior, &cfg, None)?;
        let gamp = gamp_detect(&obs, &prior, &cfg, Some(&inst.x))?;
        let lmmse = lmmse_detect(&obs, &prior)?;
        println!(
            "{snr:4} dB  gec_sr {:7.2}  gamp {:7.2}{}  lmmse {:7.2}",
            db(&gec.x_soft)?,
            db(&gamp.x_soft)?,
            if gamp.diverged { " (diverged)" } else { "" },
            db(&lmmse.x_soft)?
        );
    }
    Ok(())
}
