//! Transmit power spectral density with low-resolution DACs: how coarse
//! quantization lifts the out-of-band floor, and how well the analytic
//! rounding model predicts the measured periodogram.
//!
//! ```bash
//! cargo run --release --example transmit_psd
//! ```

use qmimo::config::SystemConfig;
use qmimo::montecarlo::psd_run;

fn db(x: f64) -> f64 {
    10.0 * x.max(1e-300).log10()
}

fn main() -> Result<(), qmimo::Error> {
    let mut cfg = SystemConfig::preset("desk")?;
    let occupied = cfg.occupied()?;

    for bits in [1u32, 3] {
        cfg.l = 1usize << bits;
        let res = psd_run(&cfg, 50, 10)?;
        let guard: Vec<f64> = (0..cfg.n)
            .filter(|k| !occupied.contains(k))
            .map(|k| res.analytic_rounding[k])
            .collect();
        let floor = db(guard.iter().sum::<f64>() / guard.len() as f64);
        println!("--- {bits}-bit DACs (guard-band floor {floor:.1} dB) ---");
        println!("{:>5} {:>12} {:>12}", "bin", "analytic dB", "measured dB");
        // print every 16th bin to keep the table small
        for k in (0..cfg.n).step_by(16) {
            println!(
                "{k:>5} {:>12.2} {:>12.2}",
                db(res.analytic_rounding[k]),
                db(res.empirical[k])
            );
        }
    }
    Ok(())
}
