//! Uncoded QPSK BER versus SNR: analytic covariance models against
//! Monte-Carlo bit counting, at the small "desk" scale with 1-bit ZF.
//!
//! ```bash
//! cargo run --release --example ber_vs_snr
//! ```

use qmimo::config::SystemConfig;
use qmimo::montecarlo::{sweep, Axis, SweepOpts};

fn main() -> Result<(), qmimo::Error> {
    let mut cfg = SystemConfig::preset("desk")?;
    cfg.l = 2; // 1-bit DACs

    let snr_db: Vec<f64> = (0..13).map(|i| -10.0 + 2.0 * i as f64).collect();
    let opts = SweepOpts {
        trials: 20,
        symbols_per_trial: 8,
        analytic_realizations: 20,
    };
    let points = sweep(&cfg, Axis::Snr, &snr_db, &opts)?;

    println!("{:>7} {:>14} {:>14} {:>14}", "SNR dB", "rounding", "diagonal", "empirical");
    for p in &points {
        println!(
            "{:>7} {:>14.6e} {:>14.6e} {:>14.6e}",
            p.value,
            p.ber_rounding,
            p.ber_diagonal,
            p.empirical_ber.unwrap(),
        );
    }
    Ok(())
}
