//! Command-line interface for the batch simulator.
//!
//! Subcommands: `ber`, `rate`, `psd`, `sweep`, and `selftest`. Every run
//! writes a CSV table to `--out` (or stdout) plus a JSON sidecar with the
//! fully resolved configuration next to the CSV, so results remain
//! reproducible from the artifacts alone.
//!
//! # Example
//!
//! ```no_run
//! let code = qmimo::cli::run(["qmimo", "ber", "--preset", "desk", "--snr-db", "-10:2:14"]);
//! std::process::exit(code);
//! ```

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::metrics;
use crate::montecarlo::{self, Axis, Model, SweepOpts};

/// Massive MU-MIMO-OFDM downlink simulator with low-resolution DACs.
#[derive(Parser, Debug)]
#[command(name = "qmimo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// JSON configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset: "lte5" or "desk".
    #[arg(long)]
    preset: Option<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the DAC resolution in bits (L = 2^bits).
    #[arg(long)]
    bits: Option<u32>,
    /// Override the CSI error parameter.
    #[arg(long)]
    eps: Option<f64>,
    /// Override the oversampling ratio (sets S = round(N/osr)).
    #[arg(long)]
    osr: Option<f64>,
    /// Override the precoder ("mrt" or "zf").
    #[arg(long)]
    precoder: Option<String>,
    /// Output CSV path (stdout if omitted). A JSON sidecar with the
    /// resolved configuration is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<SystemConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => SystemConfig::from_json_file(path)?,
            (None, Some(name)) => SystemConfig::preset(name)?,
            (None, None) => SystemConfig::preset("desk")?,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(bits) = self.bits {
            cfg = crate::montecarlo::apply_axis(&cfg, Axis::Bits, bits as f64)?;
        }
        if let Some(eps) = self.eps {
            cfg.eps = eps;
        }
        if let Some(osr) = self.osr {
            cfg = crate::montecarlo::apply_axis(&cfg, Axis::Osr, osr)?;
        }
        if let Some(p) = &self.precoder {
            cfg.precoder = match p.as_str() {
                "mrt" => crate::config::Precoder::Mrt,
                "zf" => crate::config::Precoder::Zf,
                other => {
                    return Err(Error::Config(format!(
                        "precoder: unknown value {other:?} (expected mrt|zf)"
                    )))
                }
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Uncoded BER versus SNR: analytic models plus Monte-Carlo counts.
    Ber {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// SNR grid in dB: "start:step:stop" or a comma list.
        #[arg(long, default_value = "-10:2:14")]
        snr_db: String,
        /// Monte-Carlo trials (channel draws); 0 for analytic-only.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        /// OFDM symbols per trial.
        #[arg(long, default_value_t = 1)]
        symbols: usize,
        /// Channel draws for the analytic averages when trials = 0.
        #[arg(long, default_value_t = 100)]
        realizations: usize,
    },
    /// Ergodic sum rate versus SNR for one analytic model.
    Rate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// SNR grid in dB: "start:step:stop" or a comma list.
        #[arg(long, default_value = "-10:2:14")]
        snr_db: String,
        /// Distortion model: rounding|diagonal|arcsine|infinite.
        #[arg(long, default_value = "rounding")]
        model: String,
        /// Channel draws for the ergodic average.
        #[arg(long, default_value_t = 100)]
        realizations: usize,
    },
    /// Transmit power spectral density: analytic models versus periodogram.
    Psd {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Channel draws to average over.
        #[arg(long, default_value_t = 100)]
        realizations: usize,
        /// OFDM symbols per draw for the periodogram.
        #[arg(long, default_value_t = 10)]
        symbols: usize,
    },
    /// Sweep an axis (snr|bits|eps|osr) with analytic and empirical columns.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Axis to sweep: snr|bits|eps|osr.
        #[arg(long)]
        axis: String,
        /// Axis values: "start:step:stop" or a comma list.
        #[arg(long)]
        values: String,
        /// Monte-Carlo trials per point; 0 for analytic-only.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        /// OFDM symbols per trial.
        #[arg(long, default_value_t = 1)]
        symbols: usize,
        /// Channel draws for the analytic averages when trials = 0.
        #[arg(long, default_value_t = 100)]
        realizations: usize,
    },
    /// Quick internal consistency checks (exit 0 on success).
    Selftest,
}

/// Parse "start:step:stop" or a comma-separated list into a value grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::Config(format!("grid {text:?}: {msg}"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:step:stop"));
        }
        let start: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
        let step: f64 = parts[1].parse().map_err(|_| bad("bad step"))?;
        let stop: f64 = parts[2].parse().map_err(|_| bad("bad stop"))?;
        if step <= 0.0 {
            return Err(bad("step must be positive"));
        }
        if stop < start {
            return Err(bad("stop must be >= start"));
        }
        let count = ((stop - start) / step + 1.5).floor() as usize;
        Ok((0..count).map(|i| start + step * i as f64).collect())
    } else {
        text.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad("bad number")))
            .collect()
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10e}")).unwrap_or_default()
}

fn write_output(out: &Option<PathBuf>, csv: &str, cfg: &SystemConfig) -> Result<()> {
    match out {
        None => {
            print!("{csv}");
            std::io::stdout().flush()?;
        }
        Some(path) => {
            std::fs::write(path, csv)?;
            let sidecar = sidecar_path(path);
            std::fs::write(&sidecar, serde_json::to_string_pretty(cfg)? + "\n")?;
        }
    }
    Ok(())
}

/// JSON sidecar path for a CSV output path.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn sweep_csv(axis_name: &str, points: &[montecarlo::SweepPoint]) -> String {
    let mut s = format!(
        "{axis_name},ber_rounding,ber_diagonal,rate_rounding,rate_diagonal,\
         ber_empirical,ci_low,ci_high\n"
    );
    for p in points {
        s.push_str(&format!(
            "{},{:.10e},{:.10e},{:.10e},{:.10e},{},{},{}\n",
            p.value,
            p.ber_rounding,
            p.ber_diagonal,
            p.rate_rounding,
            p.rate_diagonal,
            opt_cell(p.empirical_ber),
            opt_cell(p.ci_low),
            opt_cell(p.ci_high),
        ));
    }
    s
}

fn run_command(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ber {
            cfg,
            snr_db,
            trials,
            symbols,
            realizations,
        } => {
            let sys = cfg.resolve()?;
            let grid = parse_grid(&snr_db)?;
            let opts = SweepOpts {
                trials,
                symbols_per_trial: symbols,
                analytic_realizations: realizations,
            };
            let pts = montecarlo::sweep(&sys, Axis::Snr, &grid, &opts)?;
            write_output(&cfg.out, &sweep_csv("snr_db", &pts), &sys)
        }
        Command::Rate {
            cfg,
            snr_db,
            model,
            realizations,
        } => {
            let sys = cfg.resolve()?;
            let grid = parse_grid(&snr_db)?;
            let model: Model = model.parse()?;
            let pts = montecarlo::analytic_curves(&sys, &grid, realizations, model, 0)?;
            let mut csv = String::from("snr_db,rate,ber\n");
            for p in &pts {
                csv.push_str(&format!("{},{:.10e},{:.10e}\n", p.snr_db, p.rate, p.ber));
            }
            write_output(&cfg.out, &csv, &sys)
        }
        Command::Psd {
            cfg,
            realizations,
            symbols,
        } => {
            let sys = cfg.resolve()?;
            let res = montecarlo::psd_run(&sys, realizations, symbols)?;
            let mut csv = String::from("subcarrier,analytic_rounding,analytic_diagonal,empirical\n");
            for k in 0..sys.n {
                csv.push_str(&format!(
                    "{k},{:.10e},{:.10e},{:.10e}\n",
                    res.analytic_rounding[k], res.analytic_diagonal[k], res.empirical[k]
                ));
            }
            write_output(&cfg.out, &csv, &sys)
        }
        Command::Sweep {
            cfg,
            axis,
            values,
            trials,
            symbols,
            realizations,
        } => {
            let sys = cfg.resolve()?;
            let axis: Axis = axis.parse()?;
            let grid = parse_grid(&values)?;
            let opts = SweepOpts {
                trials,
                symbols_per_trial: symbols,
                analytic_realizations: realizations,
            };
            let pts = montecarlo::sweep(&sys, axis, &grid, &opts)?;
            let name = match axis {
                Axis::Snr => "snr_db",
                Axis::Bits => "bits",
                Axis::Eps => "eps",
                Axis::Osr => "osr",
            };
            write_output(&cfg.out, &sweep_csv(name, &pts), &sys)
        }
        Command::Selftest => selftest(),
    }
}

fn selftest() -> Result<()> {
    let mut cfg = SystemConfig::preset("desk")?;
    cfg.b = 8;
    cfg.u = 2;
    cfg.n = 32;
    cfg.s = 9;
    let check = |name: &str, ok: bool| -> Result<()> {
        println!("{}: {}", name, if ok { "ok" } else { "FAIL" });
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("selftest: {name} failed")))
        }
    };

    // one-bit Bussgang gain closed form
    let mut rng = montecarlo::trial_rng(cfg.seed, 0);
    let ch = crate::channel::draw_channel(&cfg, &mut rng);
    let prec = crate::precoding::build(&ch.est_freq, &cfg)?;
    let spec = crate::dac::design_quantizer(&cfg);
    let cz = crate::distortion::cov_z(&prec).to_lag()?;
    let gain = crate::distortion::bussgang_gain(&cz, &spec)?;
    // closed form at one bit: g_b·σ_b = √(2P/(πξB)) for every antenna
    let target = (2.0 * cfg.nominal_power() / std::f64::consts::PI).sqrt();
    let powers = cz.antenna_powers()?;
    check(
        "one-bit gain",
        gain.g
            .iter()
            .zip(&powers)
            .all(|(&g, &s2)| (g * s2.sqrt() - target).abs() < 1e-9),
    )?;

    // precoded power identity
    check(
        "precoded power",
        (prec.total_power() - cfg.p * cfg.s as f64).abs() < 1e-6 * cfg.p * cfg.s as f64,
    )?;

    // SINDR decomposition is nonnegative and monotone in noise
    let grid = montecarlo::analytic_sindr(&cfg, &ch, &prec, Model::Rounding)?;
    let lo = grid.with_noise(1.0);
    let hi = grid.with_noise(0.01);
    check(
        "sindr noise monotonicity",
        metrics::uncoded_ber_qpsk(&[lo]) > metrics::uncoded_ber_qpsk(&[hi]),
    )?;

    // deterministic trials
    let mut r1 = montecarlo::trial_rng(cfg.seed, 7);
    let mut r2 = montecarlo::trial_rng(cfg.seed, 7);
    let a = montecarlo::run_trial(&cfg, &mut r1)?;
    let b = montecarlo::run_trial(&cfg, &mut r2)?;
    check("deterministic trial", a.bit_errors == b.bit_errors)?;

    println!("selftest passed");
    Ok(())
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
