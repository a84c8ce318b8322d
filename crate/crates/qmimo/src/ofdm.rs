//! Unitary DFT utilities, time-domain synthesis of the precoded signal,
//! cyclic channel application, and demodulation.
//!
//! All transforms use the unitary convention (scale 1/√N in both
//! directions); every formula elsewhere in the crate assumes it. A "grid"
//! is a length-N `Vec` of complex vectors: per-sample antenna vectors in
//! the time domain, per-subcarrier vectors in the frequency domain.
//!
//! # Example
//!
//! ```
//! use nalgebra::DVector;
//! use num_complex::Complex64;
//!
//! let grid: Vec<DVector<Complex64>> =
//!     (0..8).map(|n| DVector::from_element(2, Complex64::new(n as f64, 0.0))).collect();
//! let back = qmimo::ofdm::idft_grid(&qmimo::ofdm::dft_grid(&grid));
//! assert!((back[3][0] - grid[3][0]).norm() < 1e-12);
//! ```

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::channel::draw_cn_vector;

type Grid = Vec<DVector<Complex64>>;

fn transform(grid: &Grid, forward: bool) -> Grid {
    let n = grid.len();
    assert!(n > 0, "empty grid");
    let dim = grid[0].len();
    let mut planner = FftPlanner::new();
    let fft = if forward {
        planner.plan_fft_forward(n)
    } else {
        planner.plan_fft_inverse(n)
    };
    let scale = 1.0 / (n as f64).sqrt();
    let mut out: Grid = vec![DVector::zeros(dim); n];
    let mut line = vec![Complex64::default(); n];
    for d in 0..dim {
        for (i, v) in grid.iter().enumerate() {
            line[i] = v[d];
        }
        fft.process(&mut line);
        for (i, o) in out.iter_mut().enumerate() {
            o[d] = line[i] * scale;
        }
    }
    out
}

/// Unitary forward DFT across the grid axis (time → frequency).
pub fn dft_grid(grid: &Grid) -> Grid {
    transform(grid, true)
}

/// Unitary inverse DFT across the grid axis (frequency → time).
pub fn idft_grid(grid: &Grid) -> Grid {
    transform(grid, false)
}

/// Time-domain precoded transmit signal z_n from frequency-domain symbols.
///
/// `freq_precoded[k]` must hold P̂_k s_k (zero on guard bins); the result is
/// its unitary inverse DFT, i.e. z_n = (1/√N)·Σ_k P̂_k s_k e^{j2πkn/N}.
pub fn synthesize_time_precoded(freq_precoded: &Grid) -> Grid {
    idft_grid(freq_precoded)
}

/// Pass a time-domain grid through the cyclic multipath channel and add
/// per-sample noise: y_n = Σ_t H_t x_{(n−t) mod N} + w_n, w_n ∼ CN(0, N₀I).
///
/// Cyclic convolution stands in for a length-(T−1) cyclic prefix that is
/// prepended and discarded; the two are exactly equivalent.
pub fn apply_channel_cyclic<R: Rng>(
    taps: &[DMatrix<Complex64>],
    x: &Grid,
    noise_psd: f64,
    rng: &mut R,
) -> Grid {
    let n = x.len();
    let u = taps[0].nrows();
    let mut y: Grid = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = if noise_psd > 0.0 {
            draw_cn_vector(u, noise_psd, rng)
        } else {
            DVector::zeros(u)
        };
        for (t, h) in taps.iter().enumerate() {
            let src = (i + n - (t % n)) % n;
            acc.gemv(Complex64::new(1.0, 0.0), h, &x[src], Complex64::new(1.0, 0.0));
        }
        y.push(acc);
    }
    y
}

/// OFDM demodulation: unitary forward DFT of the received time grid.
pub fn demodulate(y: &Grid) -> Grid {
    dft_grid(y)
}
