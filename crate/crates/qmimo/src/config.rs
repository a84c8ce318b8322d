//! System parameters, validation, and named presets.
//!
//! All computation downstream is in normalized discrete time/frequency, so a
//! [`SystemConfig`] is just scalars: array geometry, OFDM dimensions, DAC
//! resolution, and power levels. The SNR is always `P/N0` and is never stored
//! separately.
//!
//! # Example
//!
//! ```
//! use qmimo::config::SystemConfig;
//!
//! let cfg = SystemConfig::preset("desk").unwrap();
//! assert_eq!(cfg.b, 32);
//! assert!((cfg.osr() - 256.0 / 76.0).abs() < 1e-12);
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear precoder selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precoder {
    /// Maximal-ratio transmission.
    Mrt,
    /// Zero-forcing.
    Zf,
}

/// Every scalar parameter of the simulated downlink.
///
/// Field names follow the usual symbols: `b` antennas, `u` users, `n` DFT
/// size, `s` occupied subcarriers, `t` channel taps, `l` quantization levels
/// per real dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Base-station antenna count B.
    pub b: usize,
    /// User count U (single-antenna users).
    pub u: usize,
    /// DFT size N.
    pub n: usize,
    /// Occupied-subcarrier count S.
    pub s: usize,
    /// Channel tap count T.
    pub t: usize,
    /// DAC levels per real dimension L (L = 2^bits).
    pub l: usize,
    /// Average transmit power P (linear).
    pub p: f64,
    /// Noise PSD N0 (linear).
    pub n0: f64,
    /// CSI error fraction ε in [0, 1].
    pub eps: f64,
    /// Target clipping probability used to size the quantizer.
    pub pclip: f64,
    /// Precoder kind.
    pub precoder: Precoder,
    /// Master RNG seed.
    pub seed: u64,
}

impl SystemConfig {
    /// Named preset configurations.
    ///
    /// `"lte5"` is a 5 MHz-LTE-like scale (B=128, U=16, N=1024, S=300);
    /// `"desk"` is a small configuration with the same B/U ratio and nearly
    /// the same oversampling ratio, sized for fast test runs.
    pub fn preset(name: &str) -> Result<Self> {
        let (b, u, n, s) = match name {
            "lte5" => (128, 16, 1024, 300),
            "desk" => (32, 4, 256, 76),
            other => {
                return Err(Error::Config(format!(
                    "preset: unknown name {other:?} (expected \"lte5\" or \"desk\")"
                )))
            }
        };
        Ok(SystemConfig {
            b,
            u,
            n,
            s,
            t: 4,
            l: 2,
            p: 1.0,
            n0: 0.1,
            eps: 0.0,
            pclip: 1e-3,
            precoder: Precoder::Zf,
            seed: 0,
        })
    }

    /// Load from a JSON file whose fields mirror this struct one-to-one.
    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: SystemConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check all field-level and cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::Config("b: antenna count must be positive".into()));
        }
        if self.u == 0 || self.u > self.b {
            return Err(Error::Config(format!(
                "u: user count must satisfy 1 <= u <= b (got u={}, b={})",
                self.u, self.b
            )));
        }
        if self.n == 0 {
            return Err(Error::Config("n: DFT size must be positive".into()));
        }
        if self.s == 0 || self.s >= self.n {
            return Err(Error::Config(format!(
                "s: occupied subcarriers must satisfy 1 <= s <= n-1 (got s={}, n={})",
                self.s, self.n
            )));
        }
        if self.t == 0 || self.t > self.n {
            return Err(Error::Config(format!(
                "t: tap count must satisfy 1 <= t <= n (got t={}, n={})",
                self.t, self.n
            )));
        }
        if self.l < 2 {
            return Err(Error::Config(format!(
                "l: quantizer needs at least two levels (got {})",
                self.l
            )));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::Config(format!("p: power must be positive (got {})", self.p)));
        }
        if !(self.n0 >= 0.0 && self.n0.is_finite()) {
            return Err(Error::Config(format!(
                "n0: noise PSD must be nonnegative (got {})",
                self.n0
            )));
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(Error::Config(format!("eps: must lie in [0,1] (got {})", self.eps)));
        }
        if !(self.pclip > 0.0 && self.pclip < 1.0) {
            return Err(Error::Config(format!(
                "pclip: must lie in (0,1) (got {})",
                self.pclip
            )));
        }
        Ok(())
    }

    /// Oversampling ratio ξ = N/S.
    pub fn osr(&self) -> f64 {
        self.n as f64 / self.s as f64
    }

    /// SNR ρ = P/N0 (linear).
    pub fn snr(&self) -> f64 {
        self.p / self.n0
    }

    /// Nominal per-antenna, per-sample transmit power P/(ξB).
    pub fn nominal_power(&self) -> f64 {
        self.p / (self.osr() * self.b as f64)
    }

    /// Occupied subcarriers for this configuration.
    pub fn occupied(&self) -> Result<Vec<usize>> {
        subcarrier_map(self.n, self.s)
    }
}

/// Indices of the S occupied subcarriers of an N-point grid.
///
/// The first ⌈S/2⌉ bins above DC and the ⌊S/2⌋ bins just below the Nyquist
/// wrap are occupied; DC itself is always a guard bin.
///
/// # Example
///
/// ```
/// let occ = qmimo::config::subcarrier_map(8, 2).unwrap();
/// assert_eq!(occ, vec![1, 7]);
/// ```
pub fn subcarrier_map(n: usize, s: usize) -> Result<Vec<usize>> {
    if s >= n {
        return Err(Error::Config(format!(
            "s: occupied count {s} leaves no guard in an {n}-point grid (need s <= n-1)"
        )));
    }
    if s == 0 {
        return Err(Error::Config("s: need at least one occupied subcarrier".into()));
    }
    let upper = s.div_ceil(2); // above DC: 1..=upper
    let lower = s / 2; // below wrap: n-lower..=n-1
    let mut idx: Vec<usize> = (1..=upper).collect();
    idx.extend(n - lower..n);
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_matches_large_grid() {
        let occ = subcarrier_map(1024, 300).unwrap();
        assert_eq!(occ.len(), 300);
        let expect: Vec<usize> = (1..=150).chain(874..1024).collect();
        assert_eq!(occ, expect);
    }

    #[test]
    fn map_tiny() {
        assert_eq!(subcarrier_map(8, 2).unwrap(), vec![1, 7]);
        assert_eq!(subcarrier_map(8, 3).unwrap(), vec![1, 2, 7]);
    }

    #[test]
    fn map_rejects_full_grid() {
        assert!(subcarrier_map(4, 4).is_err());
        assert!(subcarrier_map(4, 5).is_err());
    }

    #[test]
    fn map_excludes_dc_and_has_size_s() {
        for n in [8, 64, 256] {
            for s in 1..n.min(32) {
                let occ = subcarrier_map(n, s).unwrap();
                assert_eq!(occ.len(), s);
                assert!(!occ.contains(&0));
                let mut sorted = occ.clone();
                sorted.dedup();
                assert_eq!(sorted.len(), s, "indices must be distinct");
            }
        }
    }

    #[test]
    fn presets() {
        let lte = SystemConfig::preset("lte5").unwrap();
        assert_eq!((lte.b, lte.u, lte.n, lte.s, lte.t), (128, 16, 1024, 300, 4));
        assert!((lte.osr() - 3.4133).abs() < 1e-3);
        let desk = SystemConfig::preset("desk").unwrap();
        assert_eq!((desk.b, desk.u, desk.n, desk.s, desk.t), (32, 4, 256, 76, 4));
        assert!((desk.osr() - 3.368).abs() < 1e-3);
        assert!(SystemConfig::preset("nope").is_err());
    }

    #[test]
    fn validation_names_fields() {
        let mut cfg = SystemConfig::preset("desk").unwrap();
        cfg.u = 100;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("u:"));
        let mut cfg = SystemConfig::preset("desk").unwrap();
        cfg.eps = 1.5;
        assert!(cfg.validate().unwrap_err().to_string().contains("eps"));
    }

    #[test]
    fn json_round_trip() {
        let cfg = SystemConfig::preset("desk").unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SystemConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.b, cfg.b);
        assert_eq!(back.seed, cfg.seed);
    }
}
