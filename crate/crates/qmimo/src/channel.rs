//! Frequency-selective Rayleigh channel: tap generation, per-subcarrier
//! frequency responses, and CSI corruption.
//!
//! Taps follow a uniform power-delay profile: T matrices of i.i.d.
//! CN(0, 1/T) entries, so the total per-entry channel gain is one. The
//! channel is block-fading — held fixed for an OFDM symbol, redrawn
//! independently per trial.
//!
//! # Example
//!
//! ```
//! use qmimo::{channel, config::SystemConfig};
//! use rand::SeedableRng;
//!
//! let cfg = SystemConfig::preset("desk").unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let ch = channel::draw_channel(&cfg, &mut rng);
//! assert_eq!(ch.freq.len(), cfg.n);
//! assert_eq!(ch.taps[0].shape(), (cfg.u, cfg.b));
//! ```

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// One channel draw together with the estimate the base station acts on.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Time-domain taps H_t, T matrices of shape U×B.
    pub taps: Vec<DMatrix<Complex64>>,
    /// Frequency responses Ĥ_k = Σ_t H_t e^{−j2πkt/N}, N matrices U×B.
    pub freq: Vec<DMatrix<Complex64>>,
    /// CSI-corrupted taps available at the base station.
    pub est_taps: Vec<DMatrix<Complex64>>,
    /// Frequency responses of the estimate.
    pub est_freq: Vec<DMatrix<Complex64>>,
}

/// One circularly-symmetric complex Gaussian sample of the given variance.
#[inline]
pub fn draw_cn<R: Rng>(var: f64, rng: &mut R) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// A vector of i.i.d. CN(0, var) samples.
pub fn draw_cn_vector<R: Rng>(dim: usize, var: f64, rng: &mut R) -> DVector<Complex64> {
    DVector::from_fn(dim, |_, _| draw_cn(var, rng))
}

fn draw_tap_set<R: Rng>(u: usize, b: usize, t: usize, rng: &mut R) -> Vec<DMatrix<Complex64>> {
    let var = 1.0 / t as f64;
    (0..t)
        .map(|_| DMatrix::from_fn(u, b, |_, _| draw_cn(var, rng)))
        .collect()
}

/// Frequency response at subcarrier `k`: plain DFT of the taps.
pub fn freq_response(taps: &[DMatrix<Complex64>], k: usize, n: usize) -> DMatrix<Complex64> {
    assert!(k < n, "subcarrier index {k} out of range for N={n}");
    let (u, b) = taps[0].shape();
    let mut out = DMatrix::zeros(u, b);
    for (t, h) in taps.iter().enumerate() {
        let ph = -2.0 * std::f64::consts::PI * (k * t % n) as f64 / n as f64;
        let w = Complex64::new(ph.cos(), ph.sin());
        out.zip_apply(h, |o, hij| *o += w * hij);
    }
    out
}

fn all_freq_responses(taps: &[DMatrix<Complex64>], n: usize) -> Vec<DMatrix<Complex64>> {
    (0..n).map(|k| freq_response(taps, k, n)).collect()
}

/// Corrupt true taps with an independent error draw:
/// est = √(1−ε)·taps + √ε·err, error entries CN(0, 1/T).
///
/// With this scaling the estimate keeps per-entry variance 1/T for every ε,
/// and ε=1 yields an estimate statistically independent of the truth.
pub fn corrupt_csi<R: Rng>(
    taps: &[DMatrix<Complex64>],
    eps: f64,
    rng: &mut R,
) -> Result<Vec<DMatrix<Complex64>>> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Config(format!("eps: must lie in [0,1] (got {eps})")));
    }
    if eps == 0.0 {
        return Ok(taps.to_vec());
    }
    let t = taps.len();
    let (u, b) = taps[0].shape();
    let err = draw_tap_set(u, b, t, rng);
    let (a, c) = ((1.0 - eps).sqrt(), eps.sqrt());
    Ok(taps
        .iter()
        .zip(&err)
        .map(|(h, e)| h.map(|v| v * a) + e.map(|v| v * c))
        .collect())
}

/// Draw a complete channel realization, including the CSI estimate.
pub fn draw_channel<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> ChannelRealization {
    let taps = draw_tap_set(cfg.u, cfg.b, cfg.t, rng);
    let freq = all_freq_responses(&taps, cfg.n);
    let est_taps = corrupt_csi(&taps, cfg.eps, rng).expect("eps validated");
    let est_freq = if cfg.eps == 0.0 {
        freq.clone()
    } else {
        all_freq_responses(&est_taps, cfg.n)
    };
    ChannelRealization {
        taps,
        freq,
        est_taps,
        est_freq,
    }
}

/// Dump true and estimated taps as little-endian f64 pairs (re, im) after a
/// header of four little-endian u64 values: B, U, N, T.
pub fn dump_realization<W: std::io::Write>(
    w: &mut W,
    cfg: &SystemConfig,
    ch: &ChannelRealization,
) -> Result<()> {
    for v in [cfg.b as u64, cfg.u as u64, cfg.n as u64, cfg.t as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    for set in [&ch.taps, &ch.est_taps] {
        for m in set {
            for v in m.iter() {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Read back a realization written by [`dump_realization`]; frequency
/// responses are re-derived. Returns the header dimensions and the channel.
pub fn load_realization<R: std::io::Read>(
    r: &mut R,
) -> Result<((usize, usize, usize, usize), ChannelRealization)> {
    let mut u64buf = [0u8; 8];
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut u64buf)?;
        Ok(u64::from_le_bytes(u64buf))
    };
    let b = next_u64(r)? as usize;
    let u = next_u64(r)? as usize;
    let n = next_u64(r)? as usize;
    let t = next_u64(r)? as usize;
    let read_set = |r: &mut R| -> Result<Vec<DMatrix<Complex64>>> {
        let mut set = Vec::with_capacity(t);
        for _ in 0..t {
            let mut buf = vec![0u8; u * b * 16];
            r.read_exact(&mut buf)?;
            let m = DMatrix::from_fn(u, b, |i, j| {
                // column-major order matches the iteration order of the dump
                let o = (j * u + i) * 16;
                Complex64::new(
                    f64::from_le_bytes(buf[o..o + 8].try_into().unwrap()),
                    f64::from_le_bytes(buf[o + 8..o + 16].try_into().unwrap()),
                )
            });
            set.push(m);
        }
        Ok(set)
    };
    let taps = read_set(r)?;
    let est_taps = read_set(r)?;
    let freq = all_freq_responses(&taps, n);
    let est_freq = all_freq_responses(&est_taps, n);
    Ok((
        (b, u, n, t),
        ChannelRealization {
            taps,
            freq,
            est_taps,
            est_freq,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> SystemConfig {
        let mut cfg = SystemConfig::preset("desk").unwrap();
        cfg.b = 4;
        cfg.u = 2;
        cfg.n = 16;
        cfg.s = 4;
        cfg
    }

    #[test]
    fn single_tap_is_flat() {
        let mut cfg = small_cfg();
        cfg.t = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ch = draw_channel(&cfg, &mut rng);
        for k in 1..cfg.n {
            assert!((&ch.freq[k] - &ch.freq[0]).norm() < 1e-13);
        }
    }

    #[test]
    fn tap_variance() {
        let cfg = SystemConfig::preset("desk").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sum = 0.0;
        let mut count = 0usize;
        // ~10^5 entries total
        for _ in 0..200 {
            let taps = draw_tap_set(cfg.u, cfg.b, cfg.t, &mut rng);
            for m in &taps {
                sum += m.iter().map(|v| v.norm_sqr()).sum::<f64>();
                count += m.len();
            }
        }
        let mean = sum / count as f64;
        // var of |h|^2 is (1/T)^2, so 3σ of the sample mean:
        let tol = 3.0 * (1.0 / cfg.t as f64) / (count as f64).sqrt();
        assert!((mean - 0.25).abs() < tol, "mean={mean}, tol={tol}");
    }

    #[test]
    fn unit_total_gain_in_frequency() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut sum = 0.0;
        let mut count = 0usize;
        for _ in 0..2000 {
            let taps = draw_tap_set(cfg.u, cfg.b, cfg.t, &mut rng);
            let h5 = freq_response(&taps, 5, cfg.n);
            sum += h5.iter().map(|v| v.norm_sqr()).sum::<f64>();
            count += h5.len();
        }
        let mean = sum / count as f64;
        assert!((mean - 1.0).abs() < 3.0 / (count as f64).sqrt() * 1.2);
    }

    #[test]
    fn freq_response_known_values() {
        // taps {I, -I} at k = N/2: exp(-jπ) = -1, so response is 2I.
        let i2 = DMatrix::<Complex64>::identity(2, 2);
        let taps = vec![i2.clone(), -i2.clone()];
        let n = 8;
        let h = freq_response(&taps, n / 2, n);
        assert!((h - i2.map(|v| v * 2.0)).norm() < 1e-13);
        // k=0 is the plain tap sum.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let taps = draw_tap_set(2, 3, 4, &mut rng);
        let sum = taps.iter().fold(DMatrix::zeros(2, 3), |a, m| a + m);
        assert!((freq_response(&taps, 0, 16) - sum).norm() < 1e-13);
    }

    #[test]
    fn freq_matches_fft_oracle() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = draw_channel(&cfg, &mut rng);
        // zero-padded tap sequence for entry (u,b), FFT'd, checked per bin
        for (ui, bi) in [(0, 0), (1, 3)] {
            let mut line: Vec<Complex64> = vec![Complex64::default(); cfg.n];
            for (t, m) in ch.taps.iter().enumerate() {
                line[t] = m[(ui, bi)];
            }
            let mut planner = rustfft::FftPlanner::new();
            planner.plan_fft_forward(cfg.n).process(&mut line);
            for k in 0..cfg.n {
                let rel = (ch.freq[k][(ui, bi)] - line[k]).norm() / line[k].norm().max(1e-30);
                assert!(rel < 1e-12);
            }
        }
    }

    #[test]
    fn csi_endpoints() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let taps = draw_tap_set(cfg.u, cfg.b, cfg.t, &mut rng);
        let est = corrupt_csi(&taps, 0.0, &mut rng).unwrap();
        for (a, b) in taps.iter().zip(&est) {
            assert_eq!(a, b);
        }
        assert!(corrupt_csi(&taps, 1.5, &mut rng).is_err());
    }

    #[test]
    fn csi_statistics() {
        let (u, b, t) = (8, 8, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // ε=1: estimate decorrelated from truth; ε=0.5: variance stays 1/T.
        let mut cross = Complex64::default();
        let mut var_half = 0.0;
        let mut count = 0usize;
        for _ in 0..400 {
            let taps = draw_tap_set(u, b, t, &mut rng);
            let ind = corrupt_csi(&taps, 1.0, &mut rng).unwrap();
            let half = corrupt_csi(&taps, 0.5, &mut rng).unwrap();
            for ti in 0..t {
                for (hv, (iv, mv)) in taps[ti].iter().zip(ind[ti].iter().zip(half[ti].iter())) {
                    cross += iv * hv.conj();
                    var_half += mv.norm_sqr();
                    count += 1;
                }
            }
        }
        let n = count as f64;
        assert!((cross / n).norm() < 4.0 / (t as f64) / n.sqrt());
        let vh = var_half / n;
        assert!((vh - 1.0 / t as f64).abs() < 4.0 * (1.0 / t as f64) / n.sqrt());
    }

    #[test]
    fn dump_round_trip() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ch = draw_channel(&cfg, &mut rng);
        let mut buf = Vec::new();
        dump_realization(&mut buf, &cfg, &ch).unwrap();
        assert_eq!(buf.len(), 32 + 2 * cfg.t * cfg.u * cfg.b * 16);
        let ((b, u, n, t), back) = load_realization(&mut buf.as_slice()).unwrap();
        assert_eq!((b, u, n, t), (cfg.b, cfg.u, cfg.n, cfg.t));
        for (a, bm) in ch.taps.iter().zip(&back.taps) {
            assert_eq!(a, bm);
        }
        for (a, bm) in ch.est_freq.iter().zip(&back.est_freq) {
            assert!((a - bm).norm() < 1e-12);
        }
    }
}
