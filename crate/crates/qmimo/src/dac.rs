//! Uniform symmetric quantizer model for the per-antenna DAC pair.
//!
//! A DAC with L levels per real dimension is a midrise (L even) or midtread
//! (L odd) uniform quantizer. The step size Δ is chosen from a target
//! clipping probability, and the output labels are scaled by α so that a
//! nominal Gaussian input of power P/(ξB) produces exactly that output
//! power. The unscaled infinite-level rounding rule ℛ, which agrees with
//! α⁻¹·Q inside the clipping region, is what the distortion analysis is
//! built on.
//!
//! # Example
//!
//! ```
//! use qmimo::{config::SystemConfig, dac};
//! use num_complex::Complex64;
//!
//! let mut cfg = SystemConfig::preset("desk").unwrap();
//! cfg.l = 2;
//! let q = dac::design_quantizer(&cfg);
//! let x = dac::quantize(&q, Complex64::new(0.3, -0.2));
//! assert_eq!(x, Complex64::new(q.labels[1], -q.labels[1]));
//! ```

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::SystemConfig;

/// Standard normal CDF Φ(x).
pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Standard normal quantile Φ⁻¹(p).
pub fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Complete description of one real-dimension quantizer.
#[derive(Debug, Clone)]
pub struct QuantizerSpec {
    /// Level count L per real dimension.
    pub l: usize,
    /// Step size Δ.
    pub delta: f64,
    /// Output label scale α.
    pub alpha: f64,
    /// Output labels ℓ_i = αΔ(i − L/2 + 1/2), i = 0..L−1, increasing.
    pub labels: Vec<f64>,
    /// Finite thresholds τ_i = Δ(i − L/2), i = 1..L−1 (τ₀ = −∞, τ_L = +∞).
    pub thresholds: Vec<f64>,
    /// Clipping level A_clip = LΔ/2.
    pub clip: f64,
    /// Nominal per-antenna input power P/(ξB) the design assumes.
    pub nominal_power: f64,
}

/// Mean squared output of a unit-α quantizer driven by a circularly
/// symmetric Gaussian of total (complex) power σ²; multiply by α² for the
/// scaled quantizer. Shared by the α calibration and the distortion module.
pub(crate) fn diag_power_unit(l: usize, delta: f64, sigma2: f64) -> f64 {
    let lf = l as f64;
    let sigma = sigma2.sqrt();
    let mut sum = 0.0;
    for i in 1..l {
        let c = i as f64 - lf / 2.0;
        sum += c * std_normal_cdf(std::f64::consts::SQRT_2 * delta * c / sigma);
    }
    delta * delta * (0.5 * (lf - 1.0) * (lf - 1.0) - 4.0 * sum)
}

/// Size the quantizer for a configuration.
///
/// The clipping level follows the target clipping probability,
/// A_clip = √(P/(2ξB))·(1 − Φ⁻¹(P_clip/2)), the step is Δ = 2A_clip/L, and
/// α solves E|Q(z)|² = P/(ξB) for the nominal input (closed form
/// α = √(2P/(Δ²ξB)) at L=2).
pub fn design_quantizer(cfg: &SystemConfig) -> QuantizerSpec {
    let pnom = cfg.nominal_power();
    let clip = (pnom / 2.0).sqrt() * (1.0 - std_normal_quantile(cfg.pclip / 2.0));
    let delta = 2.0 * clip / cfg.l as f64;
    // E|Q(z)|² is proportional to α², so calibration is a single division.
    let alpha = (pnom / diag_power_unit(cfg.l, delta, pnom)).sqrt();
    let lf = cfg.l as f64;
    let labels = (0..cfg.l)
        .map(|i| alpha * delta * (i as f64 - lf / 2.0 + 0.5))
        .collect();
    let thresholds = (1..cfg.l).map(|i| delta * (i as f64 - lf / 2.0)).collect();
    QuantizerSpec {
        l: cfg.l,
        delta,
        alpha,
        labels,
        thresholds,
        clip,
        nominal_power: pnom,
    }
}

#[inline]
fn quantize_real(spec: &QuantizerSpec, v: f64) -> f64 {
    assert!(!v.is_nan(), "quantizer input is NaN");
    // cell index of the half-open interval [τ_i, τ_{i+1}); ties go up
    let idx = (v / spec.delta + spec.l as f64 / 2.0).floor();
    let idx = (idx.max(0.0) as usize).min(spec.l - 1);
    spec.labels[idx]
}

/// Quantize one complex sample: real and imaginary parts are mapped
/// independently to the label of their threshold cell.
#[inline]
pub fn quantize(spec: &QuantizerSpec, v: Complex64) -> Complex64 {
    Complex64::new(quantize_real(spec, v.re), quantize_real(spec, v.im))
}

#[inline]
fn round_real(spec: &QuantizerSpec, v: f64) -> f64 {
    if spec.l % 2 == 1 {
        spec.delta * (v / spec.delta + 0.5).floor()
    } else {
        spec.delta * (v / spec.delta).floor() + spec.delta / 2.0
    }
}

/// Infinite-level rounding rule ℛ applied per real dimension; agrees with
/// α⁻¹·quantize wherever |Re| and |Im| stay below the clipping level.
#[inline]
pub fn rounding_rule(spec: &QuantizerSpec, v: Complex64) -> Complex64 {
    Complex64::new(round_real(spec, v.re), round_real(spec, v.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_cn;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg_with(l: usize) -> SystemConfig {
        let mut cfg = SystemConfig::preset("desk").unwrap();
        cfg.b = 1;
        cfg.u = 1;
        cfg.n = 8;
        cfg.s = 4;
        cfg.l = l;
        cfg
    }

    #[test]
    fn clip_level_from_quantile() {
        // for nominal power 1 and Pclip = 1e-3: A = √0.5·(1 + 3.2905) ≈ 3.034
        let a = (0.5f64).sqrt() * (1.0 - std_normal_quantile(5e-4));
        assert!((a - 3.0339).abs() < 1e-3);
        // design_quantizer applies the same formula to the configured power
        let cfg = cfg_with(4);
        let pnom = cfg.nominal_power();
        let q = design_quantizer(&cfg);
        let expect = (pnom / 2.0).sqrt() * (1.0 - std_normal_quantile(cfg.pclip / 2.0));
        assert!((q.clip - expect).abs() < 1e-12);
        assert!((q.delta * cfg.l as f64 / 2.0 - q.clip).abs() < 1e-12);
    }

    #[test]
    fn one_bit_closed_form() {
        let cfg = cfg_with(2);
        let q = design_quantizer(&cfg);
        let pnom = cfg.nominal_power();
        let alpha_closed = (2.0 * pnom / (q.delta * q.delta * 1.0)).sqrt();
        assert!((q.alpha - alpha_closed).abs() < 1e-12);
        // constant modulus output at exactly the nominal power
        let x = quantize(&q, Complex64::new(0.37, -0.01));
        assert!((x.norm_sqr() - pnom).abs() < 1e-12);
    }

    #[test]
    fn labels_and_thresholds_interleave() {
        for l in [2, 3, 4, 5, 8, 16] {
            let q = design_quantizer(&cfg_with(l));
            for w in q.labels.windows(2) {
                assert!(w[1] > w[0]);
            }
            for (i, &tau) in q.thresholds.iter().enumerate() {
                assert!(q.labels[i] / q.alpha < tau && tau < q.labels[i + 1] / q.alpha);
            }
            // symmetry about zero
            for (lo, hi) in q.labels.iter().zip(q.labels.iter().rev()) {
                assert!((lo + hi).abs() < 1e-12);
            }
            if l % 2 == 1 {
                assert!(q.labels.iter().any(|&v| v.abs() < 1e-12), "midtread has a zero label");
            } else {
                assert!(q.thresholds.iter().any(|&v| v.abs() < 1e-12), "midrise has a zero threshold");
            }
        }
    }

    #[test]
    fn calibrated_output_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for l in [2, 3, 4, 8, 16] {
            let cfg = cfg_with(l);
            let q = design_quantizer(&cfg);
            let pnom = cfg.nominal_power();
            let m = 400_000;
            let mean: f64 = (0..m)
                .map(|_| quantize(&q, draw_cn(pnom, &mut rng)).norm_sqr())
                .sum::<f64>()
                / m as f64;
            assert!((mean - pnom).abs() / pnom < 0.01, "L={l}: {mean} vs {pnom}");
        }
    }

    #[test]
    fn cell_lookup_and_saturation() {
        let cfg = cfg_with(4);
        let q = design_quantizer(&cfg);
        let d = q.delta;
        let v = Complex64::new(0.2 * d, 10.0 * d);
        let x = quantize(&q, v);
        assert!((x.re - 0.5 * q.alpha * d).abs() < 1e-12);
        assert!((x.im - 1.5 * q.alpha * d).abs() < 1e-12);
    }

    #[test]
    fn threshold_ties_go_up() {
        let q = design_quantizer(&cfg_with(4));
        for &tau in &q.thresholds {
            let x = quantize_real(&q, tau);
            // the label of the cell whose lower edge is τ
            let upper = q
                .labels
                .iter()
                .copied()
                .find(|&lab| lab / q.alpha > tau)
                .unwrap();
            assert_eq!(x, upper);
        }
        // sgn(0) = +1 for the one-bit quantizer
        let q1 = design_quantizer(&cfg_with(2));
        assert!(quantize_real(&q1, 0.0) > 0.0);
    }

    #[test]
    fn odd_symmetry_off_thresholds() {
        let q = design_quantizer(&cfg_with(5));
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let v = draw_cn(1.0, &mut rng);
            assert_eq!(quantize(&q, v), -quantize(&q, -v));
        }
    }

    #[test]
    fn rounding_rule_matches_quantizer_inside_clip() {
        for l in [2, 3, 4, 8] {
            let cfg = cfg_with(l);
            let q = design_quantizer(&cfg);
            let steps = 100;
            for i in 0..steps {
                for j in 0..steps {
                    let v = Complex64::new(
                        (i as f64 / steps as f64 - 0.5) * 1.99 * q.clip,
                        (j as f64 / steps as f64 - 0.5) * 1.99 * q.clip,
                    );
                    let r = rounding_rule(&q, v);
                    let x = quantize(&q, v) / q.alpha;
                    assert!((r - x).norm() < 1e-12, "L={l}, v={v}");
                }
            }
        }
    }

    #[test]
    fn rounding_rule_beyond_clip_diverges() {
        let q = design_quantizer(&cfg_with(4));
        let z = Complex64::new(10.0 * q.delta, 0.0);
        let r = rounding_rule(&q, z);
        assert!((r.re - 10.5 * q.delta).abs() < 1e-12);
        let x = quantize(&q, z) / q.alpha;
        assert!((x.re - 1.5 * q.delta).abs() < 1e-12);
        assert!((r - x).norm() > q.delta);
    }

    #[test]
    fn even_rounding_example() {
        let q = design_quantizer(&cfg_with(4));
        let r = round_real(&q, 0.2 * q.delta);
        assert!((r - 0.5 * q.delta).abs() < 1e-13);
    }

    #[test]
    fn granular_noise_limit() {
        // many levels: per-complex-sample rounding error power → Δ²/6 for
        // samples inside the clipping region (clipped samples err more)
        let cfg = cfg_with(512);
        let q = design_quantizer(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let pnom = cfg.nominal_power();
        let edge = *q.thresholds.last().unwrap();
        let m = 1_000_000;
        let mut sum = 0.0;
        let mut kept = 0usize;
        for _ in 0..m {
            let z = draw_cn(pnom, &mut rng);
            if z.re.abs() < edge && z.im.abs() < edge {
                sum += (quantize(&q, z) / q.alpha - z).norm_sqr();
                kept += 1;
            }
        }
        let mean = sum / kept as f64;
        let limit = q.delta * q.delta / 6.0;
        assert!((mean - limit).abs() / limit < 0.02, "{mean} vs {limit}");
        assert!(kept > m * 9 / 10);
    }

    #[test]
    fn clip_rate_consistency() {
        // empirical clip rate per real dimension matches the Gaussian tail
        // mass beyond the outermost thresholds
        let cfg = cfg_with(8);
        let q = design_quantizer(&cfg);
        let pnom = cfg.nominal_power();
        let sig_r = (pnom / 2.0).sqrt();
        let edge = *q.thresholds.last().unwrap();
        let analytic = 2.0 * std_normal_cdf(-edge / sig_r);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = 1_000_000usize;
        let mut clipped = 0usize;
        for _ in 0..m {
            let z = draw_cn(pnom, &mut rng);
            if z.re.abs() > edge {
                clipped += 1;
            }
            if z.im.abs() > edge {
                clipped += 1;
            }
        }
        let rate = clipped as f64 / (2 * m) as f64;
        let sigma = (analytic * (1.0 - analytic) / (2 * m) as f64).sqrt();
        assert!((rate - analytic).abs() < 4.0 * sigma.max(1e-7), "{rate} vs {analytic}");
    }
}
