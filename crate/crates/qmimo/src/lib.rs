//! Simulation of a massive multi-user MIMO-OFDM downlink in which every
//! base-station antenna is driven by a pair of low-resolution DACs.
//!
//! The library models the full transmit chain — frequency-domain linear
//! precoding (MRT or ZF), OFDM modulation with oversampling, and uniform
//! quantization of the per-antenna time-domain signal — together with a
//! frequency-selective Rayleigh channel and single-antenna users.
//!
//! Quantization distortion is handled two ways, and the point of the crate
//! is that the two agree:
//!
//! * **Analytically**, via a Bussgang decomposition of the quantizer.  The
//!   second-order statistics of the quantization error follow from the
//!   block-circulant covariance of the stacked time-domain signal, either
//!   exactly ([`distortion::rounding_cov_d`]) or under a
//!   diagonal-input approximation ([`distortion::diagonal_cov_d`]).
//! * **Empirically**, by Monte-Carlo simulation of the actual quantized
//!   waveform ([`montecarlo`]).
//!
//! From the distortion covariance the crate computes per-user, per-subcarrier
//! SINDR and from it uncoded QPSK BER, achievable sum rate, and transmit /
//! receive power spectral densities ([`metrics`]).
//!
//! # Example
//!
//! ```
//! use qmimo::config::SystemConfig;
//! use qmimo::montecarlo::{analytic_curves, Model};
//!
//! let mut cfg = SystemConfig::preset("desk").unwrap();
//! cfg.l = 2; // one-bit DACs
//! cfg.validate().unwrap();
//! // Analytic BER/rate at 10 dB SNR, averaged over 2 channel realizations.
//! let curves = analytic_curves(&cfg, &[10.0], 2, Model::Rounding, 0).unwrap();
//! assert!(curves[0].ber > 0.0 && curves[0].ber < 0.5);
//! ```

pub mod channel;
pub mod cli;
pub mod config;
pub mod dac;
pub mod distortion;
pub mod error;
pub mod metrics;
pub mod montecarlo;
pub mod ofdm;
pub mod precoding;

pub use error::Error;
