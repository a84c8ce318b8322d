//! Effect of the oversampling ratio ξ = N/S on 1-bit performance: the
//! sweep varies the number of occupied subcarriers S at fixed DFT size N.
//!
//! ```bash
//! cargo run --release --example oversampling
//! ```

use qmimo::config::SystemConfig;
use qmimo::montecarlo::{sweep, Axis, SweepOpts};

fn main() -> Result<(), qmimo::Error> {
    let mut cfg = SystemConfig::preset("desk")?;
    cfg.l = 2;
    cfg.n0 = cfg.p / 10.0f64.powf(1.0); // 10 dB SNR

    let osr = [1.5, 2.0, 3.0, 4.0, 6.0];
    let opts = SweepOpts {
        trials: 20,
        symbols_per_trial: 8,
        analytic_realizations: 20,
    };
    let points = sweep(&cfg, Axis::Osr, &osr, &opts)?;

    println!(
        "{:>5} {:>5} {:>14} {:>14} {:>10}",
        "osr", "S", "analytic BER", "empirical BER", "rate"
    );
    for p in &points {
        let s = (cfg.n as f64 / p.value).round() as usize;
        println!(
            "{:>5.1} {:>5} {:>14.6e} {:>14.6e} {:>10.3}",
            p.value,
            s,
            p.ber_rounding,
            p.empirical_ber.unwrap(),
            p.rate_rounding,
        );
    }
    Ok(())
}
