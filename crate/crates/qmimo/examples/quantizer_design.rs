//! Inspect the DAC model itself: quantizer sizing, Bussgang gain, and the
//! split of transmit power into useful signal and distortion, per
//! resolution.
//!
//! ```bash
//! cargo run --release --example quantizer_design
//! ```

use qmimo::config::SystemConfig;
use qmimo::montecarlo::trial_rng;
use qmimo::{channel, dac, distortion, precoding};

fn main() -> Result<(), qmimo::Error> {
    let mut cfg = SystemConfig::preset("desk")?;
    let mut rng = trial_rng(cfg.seed, 0);
    let ch = channel::draw_channel(&cfg, &mut rng);

    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>12} {:>12}",
        "L", "step", "scale", "gain", "signal pow", "distortion"
    );
    for bits in 1u32..=6 {
        cfg.l = 1usize << bits;
        let spec = dac::design_quantizer(&cfg);
        let prec = precoding::build(&ch.est_freq, &cfg)?;
        let cz = distortion::cov_z(&prec).to_lag()?;
        let gain = distortion::bussgang_gain(&cz, &spec)?;
        let cd = distortion::rounding_cov_d(&cz, &spec, &gain, None)?;

        // per-antenna averages of the linear (g²σ²) and distortion powers
        let powers = cz.antenna_powers()?;
        let b = cfg.b as f64;
        let lin: f64 = powers
            .iter()
            .zip(&gain.g)
            .map(|(s2, g)| g * g * s2)
            .sum::<f64>()
            / b;
        let dis: f64 = (0..cfg.b).map(|m| cd.blocks[0][(m, m)].re).sum::<f64>() / b;
        let gbar: f64 = gain.g.iter().sum::<f64>() / b;

        println!(
            "{:>5} {:>10.4} {:>10.4} {:>10.4} {:>12.5} {:>12.5e}",
            cfg.l, spec.delta, spec.alpha, gbar, lin, dis
        );
    }
    println!("\nnominal per-antenna power: {:.5}", cfg.nominal_power());
    Ok(())
}
