//! Impact of imperfect channel-state information: BER versus the CSI error
//! parameter ε (0 = perfect estimate, 1 = estimate independent of truth).
//!
//! ```bash
//! cargo run --release --example csi_error
//! ```

use qmimo::config::SystemConfig;
use qmimo::montecarlo::{sweep, Axis, SweepOpts};

fn main() -> Result<(), qmimo::Error> {
    let mut cfg = SystemConfig::preset("desk")?;
    cfg.l = 4; // 2-bit DACs
    cfg.n0 = cfg.p / 10.0f64.powf(1.0); // 10 dB SNR

    let eps: Vec<f64> = (0..9).map(|i| 0.1 * i as f64).collect();
    let opts = SweepOpts {
        trials: 20,
        symbols_per_trial: 8,
        analytic_realizations: 20,
    };
    let points = sweep(&cfg, Axis::Eps, &eps, &opts)?;

    println!("{:>5} {:>14} {:>14} {:>10}", "eps", "analytic BER", "empirical BER", "rate");
    for p in &points {
        println!(
            "{:>5.1} {:>14.6e} {:>14.6e} {:>10.3}",
            p.value,
            p.ber_rounding,
            p.empirical_ber.unwrap(),
            p.rate_rounding,
        );
    }
    Ok(())
}
