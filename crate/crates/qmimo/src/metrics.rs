//! Performance metrics derived from the covariance models: per-user,
//! per-subcarrier SINDR, ergodic sum rate, uncoded QPSK BER, and power
//! spectral densities.
//!
//! [`sindr`] keeps the four SINDR terms (signal, multi-user interference,
//! distortion, noise) separately, so a sweep over noise levels can reuse
//! one decomposition: the first three terms do not depend on N₀.
//!
//! # Example
//!
//! ```
//! # use qmimo::metrics::SindrGrid;
//! let grid = SindrGrid {
//!     occupied: vec![1, 7],
//!     signal: vec![vec![4.0; 2]; 2],
//!     interference: vec![vec![0.0; 2]; 2],
//!     distortion: vec![vec![1.0; 2]; 2],
//!     noise: 1.0,
//! };
//! assert_eq!(grid.gamma(0, 0), 2.0);
//! // two users at γ = 2 on every bin: R = 2·log₂(3) bits per channel use
//! let rate = qmimo::metrics::sum_rate(&[grid]);
//! assert!((rate - 2.0 * 3.0_f64.log2()).abs() < 1e-12);
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dac::std_normal_cdf;
use crate::distortion::{BlockCirculantCov, BussgangGain, Domain};
use crate::error::{Error, Result};
use crate::precoding::PrecoderSet;

/// Per-user, per-subcarrier SINDR decomposition over the occupied bins.
///
/// All four terms are nonnegative; `gamma = signal/(interference +
/// distortion + noise)`. Indexing is `[ki][u]` where `ki` enumerates
/// `occupied`.
#[derive(Debug, Clone)]
pub struct SindrGrid {
    pub occupied: Vec<usize>,
    pub signal: Vec<Vec<f64>>,
    pub interference: Vec<Vec<f64>>,
    pub distortion: Vec<Vec<f64>>,
    pub noise: f64,
}

impl SindrGrid {
    /// SINDR at occupied-bin index `ki` for user `u`.
    pub fn gamma(&self, ki: usize, u: usize) -> f64 {
        self.signal[ki][u] / (self.interference[ki][u] + self.distortion[ki][u] + self.noise)
    }

    /// All SINDR values, flattened.
    pub fn gammas(&self) -> Vec<f64> {
        (0..self.occupied.len())
            .flat_map(|ki| (0..self.signal[ki].len()).map(move |u| (ki, u)))
            .map(|(ki, u)| self.gamma(ki, u))
            .collect()
    }

    /// The same decomposition evaluated at a different noise level.
    pub fn with_noise(&self, n0: f64) -> SindrGrid {
        let mut g = self.clone();
        g.noise = n0;
        g
    }

    /// User count U.
    pub fn users(&self) -> usize {
        self.signal.first().map_or(0, |v| v.len())
    }
}

/// Analytic SINDR of every user and occupied subcarrier.
///
/// `cov_d_freq` must be the distortion covariance in the frequency domain;
/// pass `None` for an infinite-resolution surrogate (no distortion, unit
/// gain expected from the caller). The true channel is used here — CSI
/// error enters only through the precoders.
pub fn sindr(
    channel_freq: &[DMatrix<Complex64>],
    prec: &PrecoderSet,
    gain: &BussgangGain,
    cov_d_freq: Option<&BlockCirculantCov>,
    n0: f64,
    occupied: &[usize],
) -> Result<SindrGrid> {
    if let Some(cd) = cov_d_freq {
        if cd.domain != Domain::Frequency {
            return Err(Error::Config("sindr: distortion covariance must be in frequency domain".into()));
        }
    }
    let u_count = channel_freq[0].nrows();
    let b = channel_freq[0].ncols();
    if gain.g.len() != b {
        return Err(Error::Config(format!(
            "sindr: gain has {} entries for {} antennas",
            gain.g.len(),
            b
        )));
    }
    let gdiag = DMatrix::from_fn(b, b, |i, j| {
        if i == j {
            Complex64::new(gain.g[i], 0.0)
        } else {
            Complex64::default()
        }
    });
    let mut signal = Vec::with_capacity(occupied.len());
    let mut interference = Vec::with_capacity(occupied.len());
    let mut distortion = Vec::with_capacity(occupied.len());
    for &k in occupied {
        let hk = &channel_freq[k];
        let a = hk * &gdiag * &prec.mats[k];
        let mut sig_k = vec![0.0; u_count];
        let mut int_k = vec![0.0; u_count];
        let mut dis_k = vec![0.0; u_count];
        for u in 0..u_count {
            for v in 0..u_count {
                let p = a[(u, v)].norm_sqr();
                if u == v {
                    sig_k[u] = p;
                } else {
                    int_k[u] += p;
                }
            }
        }
        if let Some(cd) = cov_d_freq {
            let hc = hk * &cd.blocks[k];
            for u in 0..u_count {
                // [H C H^H]_{uu} = row_u(HC) · conj(row_u(H))
                let mut acc = Complex64::default();
                for j in 0..b {
                    acc += hc[(u, j)] * hk[(u, j)].conj();
                }
                dis_k[u] = acc.re.max(0.0);
            }
        }
        signal.push(sig_k);
        interference.push(int_k);
        distortion.push(dis_k);
    }
    Ok(SindrGrid {
        occupied: occupied.to_vec(),
        signal,
        interference,
        distortion,
        noise: n0,
    })
}

/// Ergodic sum rate estimate in bits per channel use:
/// the sample mean over realizations of (1/S)·Σ_u Σ_k log₂(1 + γ_{u,k}).
pub fn sum_rate(grids: &[SindrGrid]) -> f64 {
    assert!(!grids.is_empty(), "sum_rate: empty sample set");
    let per: f64 = grids
        .iter()
        .map(|g| {
            let s = g.occupied.len() as f64;
            g.gammas().iter().map(|&x| (1.0 + x).log2()).sum::<f64>() / s
        })
        .sum();
    per / grids.len() as f64
}

/// Uncoded QPSK bit error rate: 1 − mean over (u, k, realizations) of Φ(√γ).
pub fn uncoded_ber_qpsk(grids: &[SindrGrid]) -> f64 {
    assert!(!grids.is_empty(), "uncoded_ber_qpsk: empty sample set");
    let mut acc = 0.0;
    let mut count = 0usize;
    for g in grids {
        for x in g.gammas() {
            acc += std_normal_cdf(x.sqrt());
            count += 1;
        }
    }
    1.0 - acc / count as f64
}

/// Which side of the link a PSD describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdSide {
    /// Average over base-station antennas: tr(Ĉ_{x,k})/B.
    Transmit,
    /// Average over users, noiseless: tr(Ĥ_kĈ_{x,k}Ĥ_k^H)/U.
    Receive,
}

/// Analytic PSD from a frequency-domain signal covariance, peak-normalized
/// so the largest occupied-band value is 1.
pub fn psd_analytic(
    cov_x_freq: &BlockCirculantCov,
    channel_freq: Option<&[DMatrix<Complex64>]>,
    side: PsdSide,
    occupied: &[usize],
) -> Result<Vec<f64>> {
    if cov_x_freq.domain != Domain::Frequency {
        return Err(Error::Config("psd_analytic: covariance must be in frequency domain".into()));
    }
    let raw: Vec<f64> = match side {
        PsdSide::Transmit => cov_x_freq
            .blocks
            .iter()
            .map(|blk| blk.diagonal().iter().map(|v| v.re).sum::<f64>() / blk.nrows() as f64)
            .collect(),
        PsdSide::Receive => {
            let hf = channel_freq
                .ok_or_else(|| Error::Config("psd_analytic: receive side needs the channel".into()))?;
            cov_x_freq
                .blocks
                .iter()
                .zip(hf)
                .map(|(blk, h)| {
                    let hc = h * blk * h.adjoint();
                    hc.diagonal().iter().map(|v| v.re).sum::<f64>() / h.nrows() as f64
                })
                .collect()
        }
    };
    Ok(peak_normalize(raw, occupied))
}

/// Empirical PSD: per-bin squared magnitude of the unitary DFT, averaged
/// over antennas (or users) and all supplied time grids, peak-normalized
/// in-band.
pub fn psd_empirical(
    time_grids: &[Vec<nalgebra::DVector<Complex64>>],
    occupied: &[usize],
) -> Vec<f64> {
    assert!(!time_grids.is_empty(), "psd_empirical: no grids");
    let n = time_grids[0].len();
    let mut acc = vec![0.0; n];
    let mut count = 0usize;
    for grid in time_grids {
        let spec = crate::ofdm::dft_grid(grid);
        for (k, v) in spec.iter().enumerate() {
            acc[k] += v.norm_squared();
        }
        count += grid[0].len();
    }
    for v in acc.iter_mut() {
        *v /= count as f64;
    }
    peak_normalize(acc, occupied)
}

fn peak_normalize(mut psd: Vec<f64>, occupied: &[usize]) -> Vec<f64> {
    let peak = occupied
        .iter()
        .map(|&k| psd[k])
        .fold(0.0_f64, f64::max)
        .max(1e-300);
    for v in psd.iter_mut() {
        *v /= peak;
    }
    psd
}
