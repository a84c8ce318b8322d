//! Ergodic sum rate versus SNR for several DAC resolutions, plus the
//! infinite-resolution reference. Shows the rate saturation caused by
//! quantization distortion.
//!
//! ```bash
//! cargo run --release --example sum_rate
//! ```

use qmimo::config::SystemConfig;
use qmimo::montecarlo::{analytic_curves, Model};

fn main() -> Result<(), qmimo::Error> {
    let mut cfg = SystemConfig::preset("desk")?;
    let snr_db: Vec<f64> = (0..9).map(|i| -10.0 + 4.0 * i as f64).collect();
    let realizations = 20;

    let mut columns = Vec::new();
    for bits in [1u32, 2, 3, 4] {
        cfg.l = 1usize << bits;
        columns.push(analytic_curves(&cfg, &snr_db, realizations, Model::Rounding, 0)?);
    }
    let infinite = analytic_curves(&cfg, &snr_db, realizations, Model::Infinite, 0)?;

    println!(
        "{:>7} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "SNR dB", "1 bit", "2 bit", "3 bit", "4 bit", "infinite"
    );
    for (i, &db) in snr_db.iter().enumerate() {
        print!("{db:>7}");
        for col in &columns {
            print!(" {:>10.3}", col[i].rate);
        }
        println!(" {:>10.3}", infinite[i].rate);
    }
    println!("\nsum rate in bits per channel use, {} users", cfg.u);
    Ok(())
}
