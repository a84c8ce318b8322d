//! Per-subcarrier MRT and ZF precoders with a sweep-wide power
//! normalization.
//!
//! Both precoders scale by a single scalar β chosen so the total
//! frequency-domain power over the occupied subcarriers equals P·S, which
//! by Parseval fixes the average time-domain transmit power at the
//! constraint. Precoders are always built from the base station's channel
//! *estimate*; with perfect CSI that coincides with the truth.
//!
//! # Example
//!
//! ```
//! use qmimo::{channel, config::SystemConfig, precoding};
//! use rand::SeedableRng;
//!
//! let cfg = SystemConfig::preset("desk").unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let ch = channel::draw_channel(&cfg, &mut rng);
//! let set = precoding::zf(&ch.est_freq, &cfg).unwrap();
//! let power: f64 = set.mats.iter().map(|p| p.norm_squared()).sum();
//! assert!((power - cfg.p * cfg.s as f64).abs() < 1e-9);
//! ```

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;

use crate::config::{Precoder, SystemConfig};
use crate::error::{Error, Result};

/// Per-subcarrier precoding matrices and their normalization.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    /// N matrices of shape B×U; zero on guard subcarriers.
    pub mats: Vec<DMatrix<Complex64>>,
    /// Normalization scalar β (positive).
    pub beta: f64,
    /// Which precoder built this set.
    pub kind: Precoder,
}

impl PrecoderSet {
    /// Total precoded power Σ_k tr(P̂_k P̂_k^H); equals P·S by construction.
    pub fn total_power(&self) -> f64 {
        self.mats.iter().map(|p| p.norm_squared()).sum()
    }
}

/// Maximal-ratio transmission: P̂_k = Ĥ_k^H / (β B) with
/// β = √(Σ_{k∈S_d} tr(Ĥ_kĤ_k^H) / (P S B²)).
pub fn mrt(est_freq: &[DMatrix<Complex64>], cfg: &SystemConfig) -> Result<PrecoderSet> {
    let occupied = cfg.occupied()?;
    let gain: f64 = occupied.iter().map(|&k| est_freq[k].norm_squared()).sum();
    if gain <= 0.0 {
        return Err(Error::Config("mrt: all-zero channel, β undefined".into()));
    }
    let b = cfg.b as f64;
    let beta = (gain / (cfg.p * cfg.s as f64 * b * b)).sqrt();
    let scale = Complex64::new(1.0 / (beta * b), 0.0);
    let mut mats = vec![DMatrix::zeros(cfg.b, cfg.u); cfg.n];
    for &k in &occupied {
        mats[k] = est_freq[k].adjoint() * scale;
    }
    Ok(PrecoderSet {
        mats,
        beta,
        kind: Precoder::Mrt,
    })
}

/// Zero-forcing: P̂_k = Ĥ_k^H (Ĥ_kĤ_k^H)⁻¹ / β with
/// β = √(Σ_{k∈S_d} tr((Ĥ_kĤ_k^H)⁻¹) / (P S)), so Ĥ_kP̂_k = I/β on
/// occupied subcarriers.
///
/// The U×U Gram matrix is inverted by Cholesky factorization; a channel
/// whose Gram matrix is numerically singular is rejected.
pub fn zf(est_freq: &[DMatrix<Complex64>], cfg: &SystemConfig) -> Result<PrecoderSet> {
    let occupied = cfg.occupied()?;
    let mut raw = vec![DMatrix::zeros(cfg.b, cfg.u); cfg.n];
    let mut inv_trace = 0.0;
    for &k in &occupied {
        let h = &est_freq[k];
        let gram = h * h.adjoint();
        let chol = Cholesky::new(gram.clone())
            .ok_or_else(|| Error::Config(format!("zf: singular channel Gram matrix at subcarrier {k}")))?;
        let inv = chol.inverse();
        // reciprocal condition estimate via extreme diagonal of the factor
        let diag: Vec<f64> = (0..cfg.u).map(|i| chol.l_dirty()[(i, i)].re).collect();
        let (dmin, dmax) = diag
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        if dmin <= 0.0 || (dmax / dmin).powi(2) > 1e12 {
            return Err(Error::Config(format!(
                "zf: ill-conditioned channel Gram matrix at subcarrier {k}"
            )));
        }
        inv_trace += inv.diagonal().iter().map(|v| v.re).sum::<f64>();
        raw[k] = h.adjoint() * inv;
    }
    let beta = (inv_trace / (cfg.p * cfg.s as f64)).sqrt();
    let scale = Complex64::new(1.0 / beta, 0.0);
    for m in raw.iter_mut() {
        *m *= scale;
    }
    Ok(PrecoderSet {
        mats: raw,
        beta,
        kind: Precoder::Zf,
    })
}

/// Build whichever precoder the configuration selects.
pub fn build(est_freq: &[DMatrix<Complex64>], cfg: &SystemConfig) -> Result<PrecoderSet> {
    match cfg.precoder {
        Precoder::Mrt => mrt(est_freq, cfg),
        Precoder::Zf => zf(est_freq, cfg),
    }
}
