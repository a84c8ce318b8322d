//! Second-order statistics of the quantized transmit signal: Bussgang gain
//! and the covariance models of the DAC output and its distortion.
//!
//! Everything here works on [`BlockCirculantCov`], a BN×BN block-circulant
//! covariance stored as N blocks of B×B — never materialized densely. The
//! lag and frequency domains are exchanged by per-entry length-N FFTs.
//!
//! Three models of the distortion covariance are provided:
//!
//! * the 1-bit **arcsine law**, exact for L = 2 ([`arcsine_cov_x`]);
//! * the **rounding approximation**, valid for any L, whose error
//!   covariance is an infinite double series evaluated either truncated
//!   (classical fixed-term truncation) or to convergence
//!   ([`rounding_cov_e`], [`rounding_cov_d`]);
//! * the **diagonal approximation**, which keeps only the exact per-antenna
//!   distortion power and models it as white ([`diagonal_cov_d`]).
//!
//! # Example
//!
//! ```
//! use qmimo::{channel, config::SystemConfig, dac, distortion, precoding};
//! use rand::SeedableRng;
//!
//! let mut cfg = SystemConfig::preset("desk").unwrap();
//! cfg.b = 8; cfg.u = 2; cfg.n = 32; cfg.s = 10;
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
//! let ch = channel::draw_channel(&cfg, &mut rng);
//! let prec = precoding::zf(&ch.est_freq, &cfg).unwrap();
//! let spec = dac::design_quantizer(&cfg);
//! let cz = distortion::cov_z(&prec).to_lag().unwrap();
//! let gain = distortion::bussgang_gain(&cz, &spec).unwrap();
//! let cd = distortion::rounding_cov_d(&cz, &spec, &gain, None).unwrap();
//! assert_eq!(cd.blocks.len(), cfg.n);
//! ```

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use statrs::function::gamma::ln_gamma;

use crate::dac::{self, QuantizerSpec};
use crate::error::{Error, Result};
use crate::precoding::PrecoderSet;

const PI: f64 = std::f64::consts::PI;

/// Which domain the blocks of a [`BlockCirculantCov`] live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// blocks[τ] = C(τ) = E[v_{n+τ} v_n^H]
    Lag,
    /// blocks[k] = Ĉ_k = Σ_τ C(τ)e^{−j2πkτ/N}
    Frequency,
}

/// A BN×BN block-circulant covariance held as N blocks of B×B.
#[derive(Debug, Clone)]
pub struct BlockCirculantCov {
    pub domain: Domain,
    pub blocks: Vec<DMatrix<Complex64>>,
}

impl BlockCirculantCov {
    /// Number of blocks N.
    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    /// Block dimension B.
    pub fn dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    fn max_entry_norm(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    fn check_lag_symmetry(&self) -> Result<()> {
        let n = self.n();
        let tol = 1e-8 * self.max_entry_norm().max(1e-300);
        for tau in 0..n {
            let mirror = (n - tau) % n;
            if (self.blocks[tau].adjoint() - &self.blocks[mirror]).norm() > tol * (self.dim() as f64) {
                return Err(Error::NumericRange(format!(
                    "lag covariance violates Hermitian block symmetry at lag {tau}"
                )));
            }
        }
        Ok(())
    }

    fn check_freq_hermitian(&self) -> Result<()> {
        let tol = 1e-8 * self.max_entry_norm().max(1e-300);
        for (k, b) in self.blocks.iter().enumerate() {
            if (b.adjoint() - b).norm() > tol * (self.dim() as f64) {
                return Err(Error::NumericRange(format!(
                    "frequency covariance block {k} is not Hermitian"
                )));
            }
        }
        Ok(())
    }

    fn transform(mut self, forward: bool) -> Self {
        let n = self.n();
        let b = self.dim();
        let mut planner = FftPlanner::new();
        let fft = if forward {
            planner.plan_fft_forward(n)
        } else {
            planner.plan_fft_inverse(n)
        };
        let scale = if forward { 1.0 } else { 1.0 / n as f64 };
        let mut line = vec![Complex64::default(); n];
        for i in 0..b {
            for j in 0..b {
                for (t, blk) in self.blocks.iter().enumerate() {
                    line[t] = blk[(i, j)];
                }
                fft.process(&mut line);
                for (t, blk) in self.blocks.iter_mut().enumerate() {
                    blk[(i, j)] = line[t] * scale;
                }
            }
        }
        self
    }

    /// Convert to the frequency domain (validates lag block symmetry first).
    pub fn to_frequency(self) -> Result<Self> {
        match self.domain {
            Domain::Frequency => Ok(self),
            Domain::Lag => {
                self.check_lag_symmetry()?;
                let mut out = self.transform(true);
                out.domain = Domain::Frequency;
                Ok(out)
            }
        }
    }

    /// Convert to the lag domain (validates per-block Hermitian structure).
    pub fn to_lag(self) -> Result<Self> {
        match self.domain {
            Domain::Lag => Ok(self),
            Domain::Frequency => {
                self.check_freq_hermitian()?;
                let mut out = self.transform(false);
                out.domain = Domain::Lag;
                Ok(out)
            }
        }
    }

    /// Per-antenna powers σ_b² (real diagonal of the lag-0 block).
    pub fn antenna_powers(&self) -> Result<Vec<f64>> {
        let lag0 = match self.domain {
            Domain::Lag => self.blocks[0].clone(),
            Domain::Frequency => {
                let n = self.n() as f64;
                self.blocks.iter().fold(DMatrix::zeros(self.dim(), self.dim()), |a, b| a + b)
                    / Complex64::new(n, 0.0)
            }
        };
        lag0.diagonal()
            .iter()
            .map(|v| {
                if v.re.is_finite() && v.re >= 0.0 {
                    Ok(v.re)
                } else {
                    Err(Error::NumericRange(format!("negative or non-finite antenna power {v}")))
                }
            })
            .collect()
    }
}

/// Per-antenna Bussgang gains; the full gain matrix is I_N ⊗ diag(g).
#[derive(Debug, Clone)]
pub struct BussgangGain {
    pub g: Vec<f64>,
}

/// Covariance of the precoded signal, assembled in the frequency domain:
/// Ĉ_{z,k} = P̂_k P̂_k^H (zero on guards).
pub fn cov_z(prec: &PrecoderSet) -> BlockCirculantCov {
    let blocks = prec
        .mats
        .iter()
        .map(|p| p * p.adjoint())
        .collect();
    BlockCirculantCov {
        domain: Domain::Frequency,
        blocks,
    }
}

/// Bussgang gain of the quantizer for each antenna:
/// g_b = (αΔ/√π)·σ_b⁻¹·Σ_{i=1}^{L−1} exp(−Δ²(i−L/2)²/σ_b²).
pub fn bussgang_gain(cov_z: &BlockCirculantCov, spec: &QuantizerSpec) -> Result<BussgangGain> {
    let powers = cov_z.antenna_powers()?;
    let g = powers
        .iter()
        .map(|&s2| {
            if s2 <= 0.0 {
                return Err(Error::Config("bussgang_gain: zero-power antenna".into()));
            }
            let mut sum = 0.0;
            for i in 1..spec.l {
                let c = i as f64 - spec.l as f64 / 2.0;
                sum += (-spec.delta * spec.delta * c * c / s2).exp();
            }
            Ok(spec.alpha * spec.delta / PI.sqrt() / s2.sqrt() * sum)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(BussgangGain { g })
}

/// Exact mean squared quantizer output under a circularly symmetric Gaussian
/// input of (complex) power sigma2.
pub fn exact_diag_power(spec: &QuantizerSpec, sigma2: f64) -> f64 {
    spec.alpha * spec.alpha * dac::diag_power_unit(spec.l, spec.delta, sigma2)
}

fn lag_powers_and_check(cov_z: &BlockCirculantCov) -> Result<Vec<f64>> {
    if cov_z.domain != Domain::Lag {
        return Err(Error::Config(
            "covariance must be in the lag domain (call to_lag first)".into(),
        ));
    }
    cov_z.antenna_powers()
}

/// Exact 1-bit output covariance via the arcsine law (lag domain):
/// [C_x(τ)]_{m,n} = (2P/(πξB))·(asin(ρ^R) + j·asin(ρ^I)) with
/// ρ = [C_z(τ)]_{m,n}/(σ_mσ_n).
pub fn arcsine_cov_x(cov_z: &BlockCirculantCov, spec: &QuantizerSpec) -> Result<BlockCirculantCov> {
    if spec.l != 2 {
        return Err(Error::Config(format!(
            "arcsine_cov_x: only defined for L=2 (got L={})",
            spec.l
        )));
    }
    let powers = lag_powers_and_check(cov_z)?;
    let sig: Vec<f64> = powers.iter().map(|p| p.sqrt()).collect();
    let coef = 2.0 / PI * spec.nominal_power;
    let blocks = cov_z
        .blocks
        .iter()
        .map(|blk| {
            DMatrix::from_fn(blk.nrows(), blk.ncols(), |m, n| {
                let denom = sig[m] * sig[n];
                let r = (blk[(m, n)].re / denom).clamp(-1.0, 1.0);
                let i = (blk[(m, n)].im / denom).clamp(-1.0, 1.0);
                Complex64::new(coef * r.asin(), coef * i.asin())
            })
        })
        .collect();
    Ok(BlockCirculantCov {
        domain: Domain::Lag,
        blocks,
    })
}

// ---------------------------------------------------------------------------
// Rounding-error covariance series.
//
// Each entry of C_e is (2Δ²/π²)·(S(ρ^R) + j·S(ρ^I)) with
//   S = Σ_{a,b≥1} s^{a+b}/(ab) · exp(−c_m a² − c_n b²) · sinh(2√(c_mc_n)ρab),
// c_m = π²σ_m²/Δ², s = +1 for even L and −1 for odd L. Three evaluation
// strategies cover the whole (c, ρ) range:
//  * a literal truncated double sum (caller-fixed term count);
//  * a factorized single series over odd powers of ρ, using per-antenna
//    moment tables M_p(c) = Σ_a s^a a^{2p}e^{−ca²}, optionally completed
//    with the arcsine tail (S → (π/2)asin(ρ) as every term count grows);
//  * a banded direct sum, plus a harmonic-number closed form for the fully
//    correlated equal-power case.
// ---------------------------------------------------------------------------

const PMAX: usize = 600;

/// ln Γ(k) for integer k, cached.
fn lgamma_int(k: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let t = TABLE.get_or_init(|| (0..2 * PMAX + 4).map(|i| ln_gamma(i.max(1) as f64)).collect());
    t[k]
}

/// log of the Maclaurin coefficient of asin: γ_p = (2p)!/(4^p (p!)² (2p+1)).
fn log_asin_coef(p: usize) -> f64 {
    lgamma_int(2 * p + 1) - p as f64 * 4.0f64.ln() - 2.0 * lgamma_int(p + 1) - ((2 * p + 1) as f64).ln()
}

/// Moment table for one value of c: log|M_p| and sign of
/// M_p(c) = Σ_{a≥1} s^a a^{2p} e^{−ca²}, p = 0..PMAX.
struct MomentTable {
    log_m: Vec<f64>,
    sign: Vec<f64>,
}

fn moment_table(c: f64, odd: bool) -> MomentTable {
    let pmax = PMAX;
    let guess = (pmax as f64 / c).sqrt().max(2.0);
    let amax = (((2.0 * pmax as f64 * guess.ln() + 60.0) / c).sqrt().ceil() as usize) + 10;
    let la: Vec<f64> = (1..=amax).map(|a| (a as f64).ln()).collect();
    let base: Vec<f64> = (1..=amax).map(|a| -c * (a * a) as f64).collect();
    let mut log_m = Vec::with_capacity(pmax + 1);
    let mut sign = Vec::with_capacity(pmax + 1);
    for p in 0..=pmax {
        // log-sum-exp with alternating signs for odd L
        let mut mx = f64::NEG_INFINITY;
        for a in 0..amax {
            mx = mx.max(2.0 * p as f64 * la[a] + base[a]);
        }
        let mut s = 0.0;
        for a in 0..amax {
            let t = 2.0 * p as f64 * la[a] + base[a];
            let w = (t - mx).exp();
            s += if odd && (a + 1) % 2 == 1 { -w } else { w };
        }
        if s == 0.0 || !mx.is_finite() {
            log_m.push(f64::NEG_INFINITY);
            sign.push(0.0);
        } else {
            log_m.push(mx + s.abs().ln());
            sign.push(s.signum());
        }
    }
    MomentTable { log_m, sign }
}

/// Literal truncated double sum over a,b = 1..=terms (overflow-safe: the
/// sinh is expanded into two exponentials and the exponents combined, both
/// nonpositive for |ρ| ≤ 1).
fn s_truncated(cm: f64, cn: f64, rho: f64, odd: bool, terms: usize) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let q = 2.0 * (cm * cn).sqrt() * rho;
    let mut tot = 0.0;
    for a in 1..=terms {
        let af = a as f64;
        for b in 1..=terms {
            let bf = b as f64;
            let base = -cm * af * af - cn * bf * bf;
            let term = 0.5 * ((base + q * af * bf).exp() - (base - q * af * bf).exp()) / (af * bf);
            tot += if odd && (a + b) % 2 == 1 { -term } else { term };
        }
    }
    tot
}

/// Factorized series S = Σ_p A_p ρ^{2p+1} with
/// A_p = (2√(c_mc_n))^{2p+1}/(2p+1)! · M_p(c_m)M_p(c_n); converges for any
/// c and is cheap when |ρ| is not too close to 1.
fn s_factorized(cm: f64, cn: f64, rho: f64, tm: &MomentTable, tn: &MomentTable) -> f64 {
    let sr = rho.signum();
    let rho = rho.abs();
    if rho == 0.0 {
        return 0.0;
    }
    let lq = (2.0 * (cm * cn).sqrt()).ln();
    let lr = rho.ln();
    let mut tot = 0.0;
    let mut quiet = 0;
    for p in 0..=PMAX {
        let la = (2 * p + 1) as f64 * (lq + lr) - lgamma_int(2 * p + 2) + tm.log_m[p] + tn.log_m[p];
        let term = tm.sign[p] * tn.sign[p] * la.exp();
        tot += term;
        if term.abs() < 1e-17 * tot.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    sr * tot
}

/// Factorized series with the arcsine tail completed analytically:
/// S = (π/2)asin(ρ) + Σ_p (A_p − (π/2)γ_p)ρ^{2p+1}. The corrections decay
/// geometrically, so this handles |ρ| → 1 exactly. Even L only
/// (the odd-L series does not have the arcsine limit).
fn s_tail_completed(cm: f64, cn: f64, rho: f64, tm: &MomentTable, tn: &MomentTable) -> f64 {
    let sr = rho.signum();
    let rho = rho.abs();
    if rho == 0.0 {
        return 0.0;
    }
    let lq = (2.0 * (cm * cn).sqrt()).ln();
    let lr = rho.ln();
    let mut tot = PI / 2.0 * rho.asin();
    let mut quiet = 0;
    for p in 0..=PMAX {
        let la = (2 * p + 1) as f64 * lq - lgamma_int(2 * p + 2) + tm.log_m[p] + tn.log_m[p];
        let a_p = tm.sign[p] * tn.sign[p] * la.exp();
        let g_p = PI / 2.0 * log_asin_coef(p).exp();
        let corr = (a_p - g_p) * ((2 * p + 1) as f64 * lr).exp();
        tot += corr;
        if corr.abs() < 1e-16 * tot.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    sr * tot
}

/// Banded direct summation; effort grows as |ρ| → 1, so the caller bounds
/// its use. Rows beyond the last significant one are skipped.
fn s_direct(cm: f64, cn: f64, rho: f64, odd: bool) -> Result<f64> {
    let sr = rho.signum();
    let rho = rho.abs();
    if rho == 0.0 {
        return Ok(0.0);
    }
    let q = 2.0 * (cm * cn).sqrt() * rho;
    const K: f64 = 50.0; // exponent cut: e^-50 ≈ 2e-22 of the peak
    let row_decay = cm * (1.0 - rho * rho);
    let amax = if row_decay > 0.0 {
        (K / row_decay).sqrt().ceil() as usize + 4
    } else {
        usize::MAX
    };
    if amax > 200_000 {
        return Err(Error::NumericRange(format!(
            "distortion series: direct summation infeasible (c_m={cm:.3e}, c_n={cn:.3e}, ρ={rho})"
        )));
    }
    let mut tot = 0.0;
    for a in 1..=amax {
        let af = a as f64;
        let center = q * af / (2.0 * cn);
        let span2 = (K - row_decay * af * af) / cn;
        if span2 < 0.0 {
            break;
        }
        let hw = span2.sqrt();
        let b_lo = ((center - hw).ceil() as i64).max(1) as usize;
        let b_hi = (center + hw).floor() as usize;
        let mut row = 0.0;
        for b in b_lo..=b_hi.max(b_lo) {
            let bf = b as f64;
            let base = -cm * af * af - cn * bf * bf;
            let t1 = base + q * af * bf;
            let t2 = base - q * af * bf;
            let mut term = 0.5 * t1.exp() / (af * bf);
            if t2 > -745.0 {
                term -= 0.5 * t2.exp() / (af * bf);
            }
            if odd && (a + b) % 2 == 1 {
                term = -term;
            }
            row += term;
        }
        // the −sinh branch matters only for small b below the band
        if b_lo > 1 {
            for b in 1..b_lo {
                let bf = b as f64;
                let base = -cm * af * af - cn * bf * bf;
                let t1 = base + q * af * bf;
                let t2 = base - q * af * bf;
                if t1 < -745.0 && t2 < -745.0 {
                    continue;
                }
                let mut term = 0.5 * (t1.exp() - t2.exp()) / (af * bf);
                if odd && (a + b) % 2 == 1 {
                    term = -term;
                }
                row += term;
            }
        }
        tot += row;
    }
    Ok(sr * tot)
}

/// Closed form for the fully correlated, equal-power case (ρ = 1, c_m = c_n),
/// using Σ_{a}1/(a(a+d)) = H_d/d to collapse each diagonal of the double sum.
fn s_harmonic_diag(c: f64, odd: bool) -> f64 {
    let smax = ((70.0 / c).sqrt().ceil() as usize) + 10;
    let mut h = vec![0.0; smax + 1];
    for i in 1..=smax {
        h[i] = h[i - 1] + 1.0 / i as f64;
    }
    let mut tot = PI * PI / 6.0; // d = 0 diagonal: Σ 1/a² (signs cancel: (±1)^{2a})
    for d in 1..=smax {
        let mut w = (-c * (d * d) as f64).exp() * h[d] / d as f64;
        if odd && d % 2 == 1 {
            w = -w;
        }
        tot += 2.0 * w;
    }
    for s in 2..=smax {
        let mut w = 2.0 * (-c * (s * s) as f64).exp() * h[s - 1] / s as f64;
        if odd && s % 2 == 1 {
            w = -w;
        }
        tot -= w;
    }
    0.5 * tot
}

/// Per-covariance evaluation context: the quantizer, parity, and lazily
/// built per-antenna moment tables.
struct SeriesCtx {
    odd: bool,
    tables: HashMap<u64, MomentTable>,
}

impl SeriesCtx {
    fn new(spec: &QuantizerSpec) -> Self {
        SeriesCtx {
            odd: spec.l % 2 == 1,
            tables: HashMap::new(),
        }
    }

    fn ensure_table(&mut self, c: f64) {
        let odd = self.odd;
        self.tables
            .entry(c.to_bits())
            .or_insert_with(|| moment_table(c, odd));
    }

    /// Converged evaluation of S, routed by correlation and lattice density.
    fn eval(&mut self, cm: f64, cn: f64, rho: f64) -> Result<f64> {
        if !(cm > 0.0 && cn > 0.0 && cm.is_finite() && cn.is_finite()) {
            return Err(Error::NumericRange(format!(
                "distortion series: invalid variance ratios c_m={cm}, c_n={cn}"
            )));
        }
        if !rho.is_finite() {
            return Err(Error::NumericRange("distortion series: non-finite correlation".into()));
        }
        let rho = rho.clamp(-1.0, 1.0);
        if rho == 0.0 {
            return Ok(0.0);
        }
        if rho.abs() <= 0.9 {
            // geometric convergence of the factorized series
            self.ensure_table(cm);
            self.ensure_table(cn);
            let tm = &self.tables[&cm.to_bits()];
            let tn = &self.tables[&cn.to_bits()];
            return Ok(s_factorized(cm, cn, rho, tm, tn));
        }
        if rho.abs() > 1.0 - 1e-12 && (cm - cn).abs() <= 1e-9 * cm.max(cn) {
            return Ok(rho.signum() * s_harmonic_diag(0.5 * (cm + cn), self.odd));
        }
        if !self.odd {
            self.ensure_table(cm);
            self.ensure_table(cn);
            let tm = &self.tables[&cm.to_bits()];
            let tn = &self.tables[&cn.to_bits()];
            return Ok(s_tail_completed(cm, cn, rho, tm, tn));
        }
        s_direct(cm, cn, rho, self.odd)
    }
}

fn entry_rho(cz: Complex64, sig_m: f64, sig_n: f64) -> (f64, f64) {
    let denom = sig_m * sig_n;
    ((cz.re / denom).clamp(-1.0, 1.0), (cz.im / denom).clamp(-1.0, 1.0))
}

fn assemble_entrywise<F>(cov_z: &BlockCirculantCov, mut entry: F) -> Result<BlockCirculantCov>
where
    F: FnMut(usize, usize, Complex64) -> Result<Complex64>,
{
    let n = cov_z.n();
    let b = cov_z.dim();
    let mut blocks = vec![DMatrix::<Complex64>::zeros(b, b); n];
    // compute lags 0..=N/2 and mirror the rest through the Hermitian
    // block symmetry C(N−τ) = C(τ)^H, which the entry map preserves exactly
    for tau in 0..=n / 2 {
        for m in 0..b {
            for j in 0..b {
                let v = entry(m, j, cov_z.blocks[tau][(m, j)])?;
                blocks[tau][(m, j)] = v;
            }
        }
        let mirror = (n - tau) % n;
        if mirror != tau {
            blocks[mirror] = blocks[tau].adjoint();
        }
    }
    Ok(BlockCirculantCov {
        domain: Domain::Lag,
        blocks,
    })
}

/// Rounding-error covariance C_e (lag domain).
///
/// `terms = Some(t)` evaluates the literal t×t truncation of the double
/// series (the classical choice is 30); `terms = None` evaluates the series
/// to convergence, which stays accurate for arbitrarily coarse quantizers
/// and fully correlated entries.
pub fn rounding_cov_e(
    cov_z: &BlockCirculantCov,
    spec: &QuantizerSpec,
    terms: Option<usize>,
) -> Result<BlockCirculantCov> {
    if let Some(t) = terms {
        if t == 0 {
            return Err(Error::Config("rounding_cov_e: terms must be >= 1".into()));
        }
    }
    let powers = lag_powers_and_check(cov_z)?;
    let sig: Vec<f64> = powers.iter().map(|p| p.sqrt()).collect();
    let d2 = spec.delta * spec.delta;
    let c: Vec<f64> = powers.iter().map(|&p| PI * PI * p / d2).collect();
    let coef = 2.0 * d2 / (PI * PI);
    let mut ctx = SeriesCtx::new(spec);
    let odd = spec.l % 2 == 1;
    assemble_entrywise(cov_z, |m, n, cz| {
        let (rr, ri) = entry_rho(cz, sig[m], sig[n]);
        let (sr, si) = match terms {
            Some(t) => (
                s_truncated(c[m], c[n], rr, odd, t),
                s_truncated(c[m], c[n], ri, odd, t),
            ),
            None => (ctx.eval(c[m], c[n], rr)?, ctx.eval(c[m], c[n], ri)?),
        };
        Ok(Complex64::new(coef * sr, coef * si))
    })
}

/// Distortion covariance under the rounding approximation (lag domain):
/// C_d = α²C_e − (αI − G)C_z(αI − G), evaluated entrywise in one pass.
pub fn rounding_cov_d(
    cov_z: &BlockCirculantCov,
    spec: &QuantizerSpec,
    gain: &BussgangGain,
    terms: Option<usize>,
) -> Result<BlockCirculantCov> {
    let a2 = spec.alpha * spec.alpha;
    let mut e = rounding_cov_e(cov_z, spec, terms)?;
    for (blk, zblk) in e.blocks.iter_mut().zip(&cov_z.blocks) {
        for m in 0..blk.nrows() {
            for n in 0..blk.ncols() {
                let w = (spec.alpha - gain.g[m]) * (spec.alpha - gain.g[n]);
                blk[(m, n)] = a2 * blk[(m, n)] - w * zblk[(m, n)];
            }
        }
    }
    Ok(e)
}

/// Quantizer output covariance under the rounding approximation
/// (lag domain): C_x = C_d + GC_zG.
pub fn rounding_cov_x(
    cov_z: &BlockCirculantCov,
    spec: &QuantizerSpec,
    gain: &BussgangGain,
    terms: Option<usize>,
) -> Result<BlockCirculantCov> {
    let mut d = rounding_cov_d(cov_z, spec, gain, terms)?;
    for (blk, zblk) in d.blocks.iter_mut().zip(&cov_z.blocks) {
        for m in 0..blk.nrows() {
            for n in 0..blk.ncols() {
                blk[(m, n)] += gain.g[m] * gain.g[n] * zblk[(m, n)];
            }
        }
    }
    Ok(d)
}

/// Distortion covariance under the diagonal (white) approximation: only the
/// lag-0 diagonal is kept, and there it is exact:
/// [C_d]_{bb} = E|x_b|² − g_b²σ_b².
pub fn diagonal_cov_d(
    cov_z: &BlockCirculantCov,
    spec: &QuantizerSpec,
    gain: &BussgangGain,
) -> Result<BlockCirculantCov> {
    let powers = lag_powers_and_check(cov_z)?;
    let n = cov_z.n();
    let b = cov_z.dim();
    let mut blocks = vec![DMatrix::<Complex64>::zeros(b, b); n];
    for (m, &s2) in powers.iter().enumerate() {
        let v = exact_diag_power(spec, s2) - gain.g[m] * gain.g[m] * s2;
        blocks[0][(m, m)] = Complex64::new(v, 0.0);
    }
    Ok(BlockCirculantCov {
        domain: Domain::Lag,
        blocks,
    })
}

// ---------------------------------------------------------------------------
// Quadrature ground-truth oracle for E[x_m x_n*]; test support, not a
// production path.
// ---------------------------------------------------------------------------

/// E[Q(p)Q(q)] for jointly Gaussian reals with variances vp, vq and
/// covariance cov, by integrating over the quantization cells of p with the
/// conditional mean of Q(q) inside.
fn quantizer_pair_mean(spec: &QuantizerSpec, vp: f64, vq: f64, cov: f64) -> f64 {
    let sp = vp.sqrt();
    let cond_var = (vq - cov * cov / vp).max(0.0);
    let cond_sd = cond_var.sqrt().max(1e-300);
    // E[Q(q) | p = x]
    let cond_mean_q = |x: f64| -> f64 {
        let mu = cov / vp * x;
        let mut acc = 0.0;
        let mut prev_cdf = 0.0;
        for i in 0..spec.l {
            let upper = if i + 1 < spec.l {
                dac::std_normal_cdf((spec.thresholds[i] - mu) / cond_sd)
            } else {
                1.0
            };
            acc += spec.labels[i] * (upper - prev_cdf);
            prev_cdf = upper;
        }
        acc
    };
    let phi = |x: f64| (-x * x / (2.0 * vp)).exp() / (sp * (2.0 * PI).sqrt());
    // integrate per quantization cell of p (the integrand is smooth inside)
    let mut edges = vec![-8.0 * sp];
    for &t in &spec.thresholds {
        if t.abs() < 8.0 * sp {
            edges.push(t);
        }
    }
    edges.push(8.0 * sp);
    let mut total = 0.0;
    for w in edges.windows(2) {
        // pull the endpoints strictly inside the cell: at full correlation
        // the conditional mean is discontinuous exactly on the thresholds
        let sliver = 1e-10 * (w[1] - w[0]);
        let (lo, hi) = (w[0] + sliver, w[1] - sliver);
        let label = spec.labels[{
            let mid = 0.5 * (lo + hi);
            let idx = (mid / spec.delta + spec.l as f64 / 2.0).floor();
            (idx.max(0.0) as usize).min(spec.l - 1)
        }];
        // composite Simpson, refined until stable
        let mut prev = f64::NAN;
        let mut m = 64;
        loop {
            let h = (hi - lo) / m as f64;
            let mut s = phi(lo) * cond_mean_q(lo) + phi(hi) * cond_mean_q(hi);
            for i in 1..m {
                let x = lo + i as f64 * h;
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * phi(x) * cond_mean_q(x);
            }
            let val = s * h / 3.0;
            if (val - prev).abs() < 1e-11 || m >= 4096 {
                total += label * val;
                break;
            }
            prev = val;
            m *= 2;
        }
    }
    total
}

/// Ground-truth E[x_m x_n*] for one pair of jointly circular Gaussian inputs
/// with powers sigma_m2 and sigma_n2 and cross-covariance σ^R + jσ^I,
/// by numerical integration over all threshold-cell pairs.
pub fn oracle_cov_x_entry(
    sigma_m2: f64,
    sigma_n2: f64,
    sig_r: f64,
    sig_i: f64,
    spec: &QuantizerSpec,
) -> Result<Complex64> {
    if (Complex64::new(sig_r, sig_i)).norm() > (sigma_m2 * sigma_n2).sqrt() * (1.0 + 1e-9) {
        return Err(Error::NumericRange(
            "oracle_cov_x_entry: cross-covariance exceeds power bound".into(),
        ));
    }
    let (vp, vq) = (sigma_m2 / 2.0, sigma_n2 / 2.0);
    let re = 2.0 * quantizer_pair_mean(spec, vp, vq, sig_r / 2.0);
    let im = 2.0 * quantizer_pair_mean(spec, vp, vq, sig_i / 2.0);
    Ok(Complex64::new(re, im))
}
