//! End-to-end Monte-Carlo simulation and sweep orchestration.
//!
//! A *trial* draws one block-fading channel realization, builds precoders
//! from the (possibly corrupted) channel estimate, and pushes QPSK OFDM
//! symbols through the quantized transmit chain and the true channel.
//! Analytic predictions are evaluated on the same channel draws, so that
//! analytic/empirical comparisons are conditioned on identical fading and
//! differ only by symbol and noise randomness.
//!
//! Trials run in parallel; each owns an independent counter-indexed RNG
//! stream derived from the master seed, and aggregation preserves trial
//! order, so results are identical for any thread count.
//!
//! # Example
//!
//! ```
//! use qmimo::config::SystemConfig;
//! use qmimo::montecarlo::{sweep, Axis, SweepOpts};
//!
//! let mut cfg = SystemConfig::preset("desk").unwrap();
//! cfg.b = 8; cfg.u = 2; cfg.n = 32; cfg.s = 9;
//! let opts = SweepOpts { trials: 4, symbols_per_trial: 2, analytic_realizations: 4 };
//! let pts = sweep(&cfg, Axis::Snr, &[0.0, 10.0], &opts).unwrap();
//! assert_eq!(pts.len(), 2);
//! assert!(pts[0].ber_rounding > pts[1].ber_rounding);
//! ```

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{draw_channel, ChannelRealization};
use crate::config::SystemConfig;
use crate::dac;
use crate::distortion::{self, BussgangGain};
use crate::error::{Error, Result};
use crate::metrics::{self, SindrGrid};
use crate::ofdm;
use crate::precoding::{self, PrecoderSet};

/// Analytic model of the quantization distortion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Rounding approximation (full spatio-temporal correlation).
    Rounding,
    /// Diagonal (white) approximation.
    Diagonal,
    /// 1-bit arcsine law (exact for L = 2).
    Arcsine,
    /// Infinite-resolution surrogate: no quantizer at all.
    Infinite,
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rounding" => Ok(Model::Rounding),
            "diagonal" => Ok(Model::Diagonal),
            "arcsine" => Ok(Model::Arcsine),
            "infinite" => Ok(Model::Infinite),
            other => Err(Error::Config(format!(
                "model: unknown value {other:?} (expected rounding|diagonal|arcsine|infinite)"
            ))),
        }
    }
}

/// One uniform QPSK symbol vector with unit-energy entries (±1±j)/√2.
pub fn draw_qpsk_vector<R: Rng>(u: usize, rng: &mut R) -> DVector<Complex64> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_fn(u, |_, _| {
        let re = if rng.random::<bool>() { a } else { -a };
        let im = if rng.random::<bool>() { a } else { -a };
        Complex64::new(re, im)
    })
}

/// Tally of one trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub bit_errors: u64,
    pub bits: u64,
    /// Bit errors per (occupied-bin index, user).
    pub entry_errors: Vec<Vec<u64>>,
    /// ZF retries due to numerically singular channel draws.
    pub retries: u32,
    /// Captured quantized time grids, if requested.
    pub time_grids: Option<Vec<Vec<DVector<Complex64>>>>,
}

/// Knobs for [`run_trial_opts`].
#[derive(Debug, Clone, Copy)]
pub struct TrialOpts {
    /// OFDM symbols to simulate over the one channel draw.
    pub symbols: usize,
    /// Skip the DACs entirely (infinite-resolution surrogate).
    pub bypass_dac: bool,
    /// Keep the transmitted time grids (for PSD estimation).
    pub capture: bool,
}

impl Default for TrialOpts {
    fn default() -> Self {
        TrialOpts {
            symbols: 1,
            bypass_dac: false,
            capture: false,
        }
    }
}

const MAX_RETRIES: u32 = 50;

fn draw_usable_channel<R: Rng>(
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<(ChannelRealization, PrecoderSet, u32)> {
    let mut retries = 0;
    loop {
        let ch = draw_channel(cfg, rng);
        match precoding::build(&ch.est_freq, cfg) {
            Ok(prec) => return Ok((ch, prec, retries)),
            Err(_) if retries < MAX_RETRIES => retries += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Simulate one channel draw end to end with explicit options.
pub fn run_trial_opts<R: Rng>(
    cfg: &SystemConfig,
    rng: &mut R,
    opts: &TrialOpts,
) -> Result<TrialResult> {
    let occupied = cfg.occupied()?;
    let (ch, prec, retries) = draw_usable_channel(cfg, rng)?;
    let spec = dac::design_quantizer(cfg);
    let mut entry_errors = vec![vec![0u64; cfg.u]; occupied.len()];
    let mut bit_errors = 0u64;
    let mut grids = Vec::new();
    for _ in 0..opts.symbols {
        let mut freq = vec![DVector::zeros(cfg.b); cfg.n];
        let mut sent = Vec::with_capacity(occupied.len());
        for &k in &occupied {
            let s = draw_qpsk_vector(cfg.u, rng);
            freq[k] = &prec.mats[k] * &s;
            sent.push(s);
        }
        let z = ofdm::synthesize_time_precoded(&freq);
        let x: Vec<DVector<Complex64>> = if opts.bypass_dac {
            z
        } else {
            z.iter().map(|v| v.map(|e| dac::quantize(&spec, e))).collect()
        };
        let y = ofdm::apply_channel_cyclic(&ch.taps, &x, cfg.n0, rng);
        let yf = ofdm::demodulate(&y);
        for (ki, &k) in occupied.iter().enumerate() {
            for u in 0..cfg.u {
                let rx = yf[k][u];
                let tx = sent[ki][u];
                let mut errs = 0;
                if (rx.re >= 0.0) != (tx.re >= 0.0) {
                    errs += 1;
                }
                if (rx.im >= 0.0) != (tx.im >= 0.0) {
                    errs += 1;
                }
                entry_errors[ki][u] += errs;
                bit_errors += errs as u64;
            }
        }
        if opts.capture {
            grids.push(x);
        }
    }
    Ok(TrialResult {
        bit_errors,
        bits: (opts.symbols * occupied.len() * cfg.u * 2) as u64,
        entry_errors,
        retries,
        time_grids: if opts.capture { Some(grids) } else { None },
    })
}

/// Simulate one OFDM symbol over one channel draw (default options).
pub fn run_trial<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> Result<TrialResult> {
    run_trial_opts(cfg, rng, &TrialOpts::default())
}

/// RNG stream for a given trial index under the master seed.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Analytic SINDR decomposition on one channel realization for one model.
pub fn analytic_sindr(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    prec: &PrecoderSet,
    model: Model,
) -> Result<SindrGrid> {
    let occupied = cfg.occupied()?;
    if model == Model::Infinite {
        let gain = BussgangGain { g: vec![1.0; cfg.b] };
        return metrics::sindr(&ch.freq, prec, &gain, None, cfg.n0, &occupied);
    }
    let spec = dac::design_quantizer(cfg);
    let cz = distortion::cov_z(prec).to_lag()?;
    let gain = distortion::bussgang_gain(&cz, &spec)?;
    let cd = match model {
        Model::Rounding => distortion::rounding_cov_d(&cz, &spec, &gain, None)?,
        Model::Diagonal => distortion::diagonal_cov_d(&cz, &spec, &gain)?,
        Model::Arcsine => {
            let mut cx = distortion::arcsine_cov_x(&cz, &spec)?;
            for (blk, zblk) in cx.blocks.iter_mut().zip(&cz.blocks) {
                for m in 0..blk.nrows() {
                    for n in 0..blk.ncols() {
                        blk[(m, n)] -= gain.g[m] * gain.g[n] * zblk[(m, n)];
                    }
                }
            }
            cx
        }
        Model::Infinite => unreachable!(),
    };
    let cd = cd.to_frequency()?;
    metrics::sindr(&ch.freq, prec, &gain, Some(&cd), cfg.n0, &occupied)
}

/// One analytic BER/rate point.
#[derive(Debug, Clone)]
pub struct AnalyticPoint {
    pub snr_db: f64,
    pub ber: f64,
    pub rate: f64,
}

/// Analytic BER and sum-rate curves over SNR, averaged over independently
/// drawn channel realizations (RNG streams `stream_offset..`).
pub fn analytic_curves(
    cfg: &SystemConfig,
    snr_db: &[f64],
    realizations: usize,
    model: Model,
    stream_offset: u64,
) -> Result<Vec<AnalyticPoint>> {
    cfg.validate()?;
    if realizations == 0 {
        return Err(Error::Config("analytic_curves: need at least one realization".into()));
    }
    let grids: Vec<SindrGrid> = (0..realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = trial_rng(cfg.seed, stream_offset + r as u64);
            let (ch, prec, _) = draw_usable_channel(cfg, &mut rng)?;
            analytic_sindr(cfg, &ch, &prec, model)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(snr_db
        .iter()
        .map(|&db| {
            let n0 = cfg.p / 10f64.powf(db / 10.0);
            let at: Vec<SindrGrid> = grids.iter().map(|g| g.with_noise(n0)).collect();
            AnalyticPoint {
                snr_db: db,
                ber: metrics::uncoded_ber_qpsk(&at),
                rate: metrics::sum_rate(&at),
            }
        })
        .collect())
}

/// Sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// SNR ρ = P/N₀ in dB.
    Snr,
    /// DAC resolution in bits (L = 2^bits).
    Bits,
    /// CSI error ε.
    Eps,
    /// Oversampling ratio ξ (varies S at fixed N).
    Osr,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(Axis::Snr),
            "bits" => Ok(Axis::Bits),
            "eps" => Ok(Axis::Eps),
            "osr" => Ok(Axis::Osr),
            other => Err(Error::Config(format!(
                "axis: unknown value {other:?} (expected snr|bits|eps|osr)"
            ))),
        }
    }
}

/// Apply one axis value to a configuration copy.
pub fn apply_axis(cfg: &SystemConfig, axis: Axis, value: f64) -> Result<SystemConfig> {
    let mut out = cfg.clone();
    match axis {
        Axis::Snr => {
            out.n0 = cfg.p / 10f64.powf(value / 10.0);
        }
        Axis::Bits => {
            if value < 1.0 || value > 20.0 || value.fract() != 0.0 {
                return Err(Error::Config(format!(
                    "bits: must be an integer in 1..=20 (got {value})"
                )));
            }
            out.l = 1usize << value as u32;
        }
        Axis::Eps => {
            out.eps = value;
        }
        Axis::Osr => {
            if value <= 0.0 {
                return Err(Error::Config(format!("osr: must be positive (got {value})")));
            }
            out.s = (cfg.n as f64 / value).round() as usize;
        }
    }
    out.validate()?;
    Ok(out)
}

/// Sweep controls.
#[derive(Debug, Clone, Copy)]
pub struct SweepOpts {
    /// Monte-Carlo trials (channel draws) per point; 0 disables empirical columns.
    pub trials: usize,
    /// OFDM symbols simulated per trial.
    pub symbols_per_trial: usize,
    /// Channel draws used for the analytic averages when trials = 0.
    pub analytic_realizations: usize,
}

impl Default for SweepOpts {
    fn default() -> Self {
        SweepOpts {
            trials: 0,
            symbols_per_trial: 1,
            analytic_realizations: 100,
        }
    }
}

/// One sweep row: analytic BER and sum rate under both covariance models,
/// plus (when trials were run) the empirical BER with a 95% binomial
/// confidence interval.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub ber_rounding: f64,
    pub ber_diagonal: f64,
    pub rate_rounding: f64,
    pub rate_diagonal: f64,
    pub empirical_ber: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

struct TrialAccum {
    rounding: SindrGrid,
    diagonal: SindrGrid,
    /// (bit errors, bits) per sweep value.
    counts: Vec<(u64, u64)>,
}

fn binomial_ci(errors: u64, bits: u64) -> (f64, f64, f64) {
    let p = errors as f64 / bits as f64;
    let half = 1.96 * (p * (1.0 - p) / bits as f64).sqrt();
    (p, (p - half).max(0.0), (p + half).min(1.0))
}

/// Run one trial of the SNR-sharing fast path: a single channel draw and
/// covariance evaluation serve every SNR value; only noise is redrawn.
fn snr_trial(
    cfg: &SystemConfig,
    values: &[f64],
    opts: &SweepOpts,
    stream: u64,
) -> Result<TrialAccum> {
    let occupied = cfg.occupied()?;
    let mut rng = trial_rng(cfg.seed, stream);
    let (ch, prec, _) = draw_usable_channel(cfg, &mut rng)?;
    let rounding = analytic_sindr(cfg, &ch, &prec, Model::Rounding)?;
    let diagonal = analytic_sindr(cfg, &ch, &prec, Model::Diagonal)?;
    let mut counts = vec![(0u64, 0u64); values.len()];
    if opts.trials > 0 {
        let spec = dac::design_quantizer(cfg);
        for _ in 0..opts.symbols_per_trial {
            let mut freq = vec![DVector::zeros(cfg.b); cfg.n];
            let mut sent = Vec::with_capacity(occupied.len());
            for &k in &occupied {
                let s = draw_qpsk_vector(cfg.u, &mut rng);
                freq[k] = &prec.mats[k] * &s;
                sent.push(s);
            }
            let z = ofdm::synthesize_time_precoded(&freq);
            let x: Vec<DVector<Complex64>> =
                z.iter().map(|v| v.map(|e| dac::quantize(&spec, e))).collect();
            // noiseless receive once; per-value noise added in frequency,
            // where it is still white with the same per-entry variance
            let y0 = ofdm::apply_channel_cyclic(&ch.taps, &x, 0.0, &mut rng);
            let y0f = ofdm::demodulate(&y0);
            for (vi, &db) in values.iter().enumerate() {
                let n0 = cfg.p / 10f64.powf(db / 10.0);
                for (ki, &k) in occupied.iter().enumerate() {
                    let w = crate::channel::draw_cn_vector(cfg.u, n0, &mut rng);
                    for u in 0..cfg.u {
                        let rx = y0f[k][u] + w[u];
                        let tx = sent[ki][u];
                        let mut errs = 0u64;
                        if (rx.re >= 0.0) != (tx.re >= 0.0) {
                            errs += 1;
                        }
                        if (rx.im >= 0.0) != (tx.im >= 0.0) {
                            errs += 1;
                        }
                        counts[vi].0 += errs;
                        counts[vi].1 += 2;
                    }
                }
            }
        }
    }
    Ok(TrialAccum {
        rounding,
        diagonal,
        counts,
    })
}

/// Sweep one axis over the given values.
///
/// Analytic columns are averaged over the same channel draws that produce
/// the empirical counts. On the SNR axis, one covariance evaluation per
/// trial is shared by all values.
pub fn sweep(
    cfg: &SystemConfig,
    axis: Axis,
    values: &[f64],
    opts: &SweepOpts,
) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    if values.is_empty() {
        return Err(Error::Config("sweep: empty value list".into()));
    }
    let realizations = if opts.trials > 0 {
        opts.trials
    } else {
        opts.analytic_realizations.max(1)
    };
    if axis == Axis::Snr {
        // one covariance per trial serves all SNR values
        for &v in values {
            apply_axis(cfg, axis, v)?;
        }
        let accums: Vec<TrialAccum> = (0..realizations)
            .into_par_iter()
            .map(|r| snr_trial(cfg, values, opts, r as u64))
            .collect::<Result<Vec<_>>>()?;
        return Ok(values
            .iter()
            .enumerate()
            .map(|(vi, &db)| {
                let n0 = cfg.p / 10f64.powf(db / 10.0);
                let r: Vec<SindrGrid> = accums.iter().map(|a| a.rounding.with_noise(n0)).collect();
                let d: Vec<SindrGrid> = accums.iter().map(|a| a.diagonal.with_noise(n0)).collect();
                let (errors, bits) = accums
                    .iter()
                    .fold((0u64, 0u64), |(e, b), a| (e + a.counts[vi].0, b + a.counts[vi].1));
                let (emp, lo, hi) = if bits > 0 {
                    let (p, lo, hi) = binomial_ci(errors, bits);
                    (Some(p), Some(lo), Some(hi))
                } else {
                    (None, None, None)
                };
                SweepPoint {
                    value: db,
                    ber_rounding: metrics::uncoded_ber_qpsk(&r),
                    ber_diagonal: metrics::uncoded_ber_qpsk(&d),
                    rate_rounding: metrics::sum_rate(&r),
                    rate_diagonal: metrics::sum_rate(&d),
                    empirical_ber: emp,
                    ci_low: lo,
                    ci_high: hi,
                }
            })
            .collect());
    }
    // other axes: every value gets its own configuration and trials
    values
        .iter()
        .enumerate()
        .map(|(vi, &v)| {
            let cfg_v = apply_axis(cfg, axis, v)?;
            let stream_base = (vi as u64 + 1) << 32;
            let accums: Vec<(SindrGrid, SindrGrid, u64, u64)> = (0..realizations)
                .into_par_iter()
                .map(|r| {
                    let mut rng = trial_rng(cfg_v.seed, stream_base + r as u64);
                    let (ch, prec, _) = draw_usable_channel(&cfg_v, &mut rng)?;
                    let rounding = analytic_sindr(&cfg_v, &ch, &prec, Model::Rounding)?;
                    let diagonal = analytic_sindr(&cfg_v, &ch, &prec, Model::Diagonal)?;
                    let (mut errors, mut bits) = (0u64, 0u64);
                    if opts.trials > 0 {
                        let spec = dac::design_quantizer(&cfg_v);
                        let occupied = cfg_v.occupied()?;
                        for _ in 0..opts.symbols_per_trial {
                            let mut freq = vec![DVector::zeros(cfg_v.b); cfg_v.n];
                            let mut sent = Vec::with_capacity(occupied.len());
                            for &k in &occupied {
                                let s = draw_qpsk_vector(cfg_v.u, &mut rng);
                                freq[k] = &prec.mats[k] * &s;
                                sent.push(s);
                            }
                            let z = ofdm::synthesize_time_precoded(&freq);
                            let x: Vec<DVector<Complex64>> =
                                z.iter().map(|vv| vv.map(|e| dac::quantize(&spec, e))).collect();
                            let y = ofdm::apply_channel_cyclic(&ch.taps, &x, cfg_v.n0, &mut rng);
                            let yf = ofdm::demodulate(&y);
                            for (ki, &k) in occupied.iter().enumerate() {
                                for u in 0..cfg_v.u {
                                    let rx = yf[k][u];
                                    let tx = sent[ki][u];
                                    if (rx.re >= 0.0) != (tx.re >= 0.0) {
                                        errors += 1;
                                    }
                                    if (rx.im >= 0.0) != (tx.im >= 0.0) {
                                        errors += 1;
                                    }
                                    bits += 2;
                                }
                            }
                        }
                    }
                    Ok((rounding, diagonal, errors, bits))
                })
                .collect::<Result<Vec<_>>>()?;
            let r: Vec<SindrGrid> = accums.iter().map(|a| a.0.clone()).collect();
            let d: Vec<SindrGrid> = accums.iter().map(|a| a.1.clone()).collect();
            let (errors, bits) = accums.iter().fold((0u64, 0u64), |(e, b), a| (e + a.2, b + a.3));
            let (emp, lo, hi) = if bits > 0 {
                let (p, lo, hi) = binomial_ci(errors, bits);
                (Some(p), Some(lo), Some(hi))
            } else {
                (None, None, None)
            };
            Ok(SweepPoint {
                value: v,
                ber_rounding: metrics::uncoded_ber_qpsk(&r),
                ber_diagonal: metrics::uncoded_ber_qpsk(&d),
                rate_rounding: metrics::sum_rate(&r),
                rate_diagonal: metrics::sum_rate(&d),
                empirical_ber: emp,
                ci_low: lo,
                ci_high: hi,
            })
        })
        .collect()
}

/// Transmit-side PSD comparison: covariance-model predictions and the
/// periodogram of actually quantized waveforms, all averaged over the same
/// channel realizations and peak-normalized in-band.
#[derive(Debug, Clone)]
pub struct PsdResult {
    pub analytic_rounding: Vec<f64>,
    pub analytic_diagonal: Vec<f64>,
    pub empirical: Vec<f64>,
}

/// Run the PSD experiment with `realizations` channel draws and
/// `symbols` OFDM symbols per draw.
pub fn psd_run(cfg: &SystemConfig, realizations: usize, symbols: usize) -> Result<PsdResult> {
    cfg.validate()?;
    if realizations == 0 || symbols == 0 {
        return Err(Error::Config("psd_run: realizations and symbols must be positive".into()));
    }
    let occupied = cfg.occupied()?;
    let per: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = trial_rng(cfg.seed, r as u64);
            let (_ch, prec, _) = draw_usable_channel(cfg, &mut rng)?;
            let spec = dac::design_quantizer(cfg);
            let cz = distortion::cov_z(&prec).to_lag()?;
            let gain = distortion::bussgang_gain(&cz, &spec)?;
            let trace_psd = |cov: distortion::BlockCirculantCov| -> Result<Vec<f64>> {
                let f = cov.to_frequency()?;
                Ok(f.blocks
                    .iter()
                    .map(|blk| blk.diagonal().iter().map(|v| v.re).sum::<f64>() / cfg.b as f64)
                    .collect())
            };
            let cx_round = distortion::rounding_cov_x(&cz, &spec, &gain, None)?;
            let round = trace_psd(cx_round)?;
            let mut cx_diag = distortion::diagonal_cov_d(&cz, &spec, &gain)?;
            for (blk, zblk) in cx_diag.blocks.iter_mut().zip(&cz.blocks) {
                for m in 0..blk.nrows() {
                    for n in 0..blk.ncols() {
                        blk[(m, n)] += gain.g[m] * gain.g[n] * zblk[(m, n)];
                    }
                }
            }
            let diag = trace_psd(cx_diag)?;
            let mut emp = vec![0.0; cfg.n];
            for _ in 0..symbols {
                let mut freq = vec![DVector::zeros(cfg.b); cfg.n];
                for &k in &occupied {
                    let s = draw_qpsk_vector(cfg.u, &mut rng);
                    freq[k] = &prec.mats[k] * &s;
                }
                let z = ofdm::synthesize_time_precoded(&freq);
                let x: Vec<DVector<Complex64>> =
                    z.iter().map(|v| v.map(|e| dac::quantize(&spec, e))).collect();
                let spec_x = ofdm::dft_grid(&x);
                for (k, v) in spec_x.iter().enumerate() {
                    emp[k] += v.norm_squared();
                }
            }
            for v in emp.iter_mut() {
                *v /= (symbols * cfg.b) as f64;
            }
            Ok((round, diag, emp))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = cfg.n;
    let mut sums = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (r, d, e) in &per {
        for k in 0..n {
            sums.0[k] += r[k];
            sums.1[k] += d[k];
            sums.2[k] += e[k];
        }
    }
    let normalize = |mut v: Vec<f64>| -> Vec<f64> {
        let peak = occupied.iter().map(|&k| v[k]).fold(0.0_f64, f64::max).max(1e-300);
        for x in v.iter_mut() {
            *x /= peak;
        }
        v
    };
    Ok(PsdResult {
        analytic_rounding: normalize(sums.0),
        analytic_diagonal: normalize(sums.1),
        empirical: normalize(sums.2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> SystemConfig {
        let mut cfg = SystemConfig::preset("desk").unwrap();
        cfg.b = 8;
        cfg.u = 2;
        cfg.n = 32;
        cfg.s = 9;
        cfg
    }

    #[test]
    fn qpsk_detection_constellation() {
        // exhaustive nearest-neighbor check on the 4 points
        let a = std::f64::consts::FRAC_1_SQRT_2;
        for &re in &[-a, a] {
            for &im in &[-a, a] {
                let tx = Complex64::new(re, im);
                let rx = tx * 3.7; // any positive gain
                assert_eq!((rx.re >= 0.0), (tx.re >= 0.0));
                assert_eq!((rx.im >= 0.0), (tx.im >= 0.0));
            }
        }
    }

    #[test]
    fn infinite_resolution_noiseless_is_error_free() {
        let mut cfg = tiny_cfg();
        cfg.n0 = 0.0;
        let mut rng = trial_rng(cfg.seed, 0);
        let res = run_trial_opts(
            &cfg,
            &mut rng,
            &TrialOpts {
                symbols: 20,
                bypass_dac: true,
                capture: false,
            },
        )
        .unwrap();
        assert_eq!(res.bit_errors, 0);
        assert_eq!(res.bits, 20 * 9 * 2 * 2);
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = tiny_cfg();
        let mut r1 = trial_rng(cfg.seed, 3);
        let mut r2 = trial_rng(cfg.seed, 3);
        let a = run_trial(&cfg, &mut r1).unwrap();
        let b = run_trial(&cfg, &mut r2).unwrap();
        assert_eq!(a.bit_errors, b.bit_errors);
        assert_eq!(a.entry_errors, b.entry_errors);
    }

    #[test]
    fn sweep_rows_and_tallies() {
        let cfg = tiny_cfg();
        let opts = SweepOpts {
            trials: 3,
            symbols_per_trial: 2,
            analytic_realizations: 3,
        };
        let pts = sweep(&cfg, Axis::Snr, &[0.0, 6.0, 12.0], &opts).unwrap();
        assert_eq!(pts.len(), 3);
        for p in &pts {
            let emp = p.empirical_ber.unwrap();
            assert!((0.0..=0.5 + 1e-9).contains(&emp) || emp <= 1.0);
            assert!(p.ci_low.unwrap() <= emp && emp <= p.ci_high.unwrap());
            assert!(p.ber_rounding > 0.0 && p.ber_rounding < 0.5);
        }
        // analytic-only when trials = 0
        let pts = sweep(
            &cfg,
            Axis::Snr,
            &[5.0],
            &SweepOpts {
                trials: 0,
                symbols_per_trial: 1,
                analytic_realizations: 2,
            },
        )
        .unwrap();
        assert!(pts[0].empirical_ber.is_none());
        assert!(pts[0].ci_low.is_none());
    }

    #[test]
    fn axis_application() {
        let cfg = tiny_cfg();
        let s = apply_axis(&cfg, Axis::Snr, 10.0).unwrap();
        assert!((s.n0 - cfg.p / 10.0).abs() < 1e-12);
        let b = apply_axis(&cfg, Axis::Bits, 3.0).unwrap();
        assert_eq!(b.l, 8);
        assert!(apply_axis(&cfg, Axis::Bits, 2.5).is_err());
        let e = apply_axis(&cfg, Axis::Eps, 0.3).unwrap();
        assert!((e.eps - 0.3).abs() < 1e-12);
        assert!(apply_axis(&cfg, Axis::Eps, 1.5).is_err());
        let o = apply_axis(&cfg, Axis::Osr, 2.0).unwrap();
        assert_eq!(o.s, 16);
        assert!(apply_axis(&cfg, Axis::Osr, 0.5).is_err());
    }

    #[test]
    fn psd_shapes() {
        let cfg = tiny_cfg();
        let res = psd_run(&cfg, 3, 2).unwrap();
        assert_eq!(res.analytic_rounding.len(), cfg.n);
        let occ = cfg.occupied().unwrap();
        let peak = occ
            .iter()
            .map(|&k| res.analytic_rounding[k])
            .fold(0.0_f64, f64::max);
        assert!((peak - 1.0).abs() < 1e-12);
        // one-bit OOB floor is nonzero
        let guard_max = (0..cfg.n)
            .filter(|k| !occ.contains(k))
            .map(|k| res.analytic_rounding[k])
            .fold(0.0_f64, f64::max);
        assert!(guard_max > 1e-6);
    }
}
