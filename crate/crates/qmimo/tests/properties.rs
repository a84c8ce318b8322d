//! Randomized property tests for the structural invariants the analytic
//! machinery relies on.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmimo::config::{subcarrier_map, SystemConfig};
use qmimo::dac;
use qmimo::distortion::{BlockCirculantCov, Domain};
use qmimo::metrics::SindrGrid;
use qmimo::{channel, metrics, ofdm, precoding};

fn small_cfg(b: usize, u: usize, n: usize, s: usize, l: usize) -> SystemConfig {
    let mut cfg = SystemConfig::preset("desk").unwrap();
    cfg.b = b;
    cfg.u = u;
    cfg.n = n;
    cfg.s = s;
    cfg.l = l;
    cfg.validate().unwrap();
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subcarrier_map_is_deterministic_and_inverts(n in 4usize..512, s_frac in 1usize..100) {
        let s = 1 + s_frac * (n - 2) / 100;
        prop_assume!(s < n);
        let a = subcarrier_map(n, s).unwrap();
        let b = subcarrier_map(n, s).unwrap();
        prop_assert_eq!(&a, &b);
        // re-derive S from the set
        prop_assert_eq!(a.len(), s);
        // DC never occupied, indices in range and unique
        prop_assert!(!a.contains(&0));
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), s);
        prop_assert!(*a.iter().max().unwrap() < n);
    }

    #[test]
    fn dft_round_trip_and_parseval(n in 2usize..64, b in 1usize..4, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid: Vec<DVector<Complex64>> =
            (0..n).map(|_| channel::draw_cn_vector(b, 1.0, &mut rng)).collect();
        let freq = ofdm::dft_grid(&grid);
        let back = ofdm::idft_grid(&freq);
        let e_time: f64 = grid.iter().map(|v| v.norm_squared()).sum();
        let e_freq: f64 = freq.iter().map(|v| v.norm_squared()).sum();
        prop_assert!((e_time - e_freq).abs() < 1e-10 * e_time.max(1.0));
        for (a, o) in back.iter().zip(&grid) {
            prop_assert!((a - o).norm() < 1e-10);
        }
    }

    #[test]
    fn quantizer_is_monotone_and_odd(l in 2usize..17, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let cfg = small_cfg(1, 1, 8, 4, l);
        let q = dac::design_quantizer(&cfg);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let qa = dac::quantize(&q, Complex64::new(lo, 0.0)).re;
        let qb = dac::quantize(&q, Complex64::new(hi, 0.0)).re;
        prop_assert!(qa <= qb);
        // odd symmetry away from the threshold lattice
        let off = a + 0.123e-3;
        let on_threshold = q
            .thresholds
            .iter()
            .any(|&t| (off - t).abs() < 1e-9 || (off + t).abs() < 1e-9);
        if !on_threshold {
            let plus = dac::quantize(&q, Complex64::new(off, off));
            let minus = dac::quantize(&q, Complex64::new(-off, -off));
            prop_assert_eq!(plus, -minus);
        }
    }

    #[test]
    fn precoder_power_identity(seed in 0u64..500, zf in any::<bool>(), b in 2usize..6, u in 1usize..3) {
        prop_assume!(u <= b);
        let mut cfg = small_cfg(b, u, 16, 5, 2);
        cfg.precoder = if zf {
            qmimo::config::Precoder::Zf
        } else {
            qmimo::config::Precoder::Mrt
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = channel::draw_channel(&cfg, &mut rng);
        let prec = precoding::build(&ch.est_freq, &cfg).unwrap();
        let target = cfg.p * cfg.s as f64;
        prop_assert!((prec.total_power() - target).abs() < 1e-8 * target);
    }

    #[test]
    fn ber_bounds_and_monotonicity(gammas in proptest::collection::vec(0.0f64..100.0, 1..20)) {
        let mk = |g: &[f64]| SindrGrid {
            occupied: (1..=g.len()).collect(),
            signal: g.to_vec().into_iter().map(|x| vec![x]).collect(),
            interference: vec![vec![0.0]; g.len()],
            distortion: vec![vec![0.0]; g.len()],
            noise: 1.0,
        };
        let ber = metrics::uncoded_ber_qpsk(&[mk(&gammas)]);
        prop_assert!((0.0..=0.5).contains(&ber));
        let boosted: Vec<f64> = gammas.iter().map(|g| g + 1.0).collect();
        let better = metrics::uncoded_ber_qpsk(&[mk(&boosted)]);
        prop_assert!(better <= ber);
    }

    #[test]
    fn lag_frequency_twins_round_trip(n in 2usize..24, b in 1usize..4, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // random Hermitian-symmetric lag blocks: block(τ)^H = block(N−τ)
        let mut blocks = vec![DMatrix::<Complex64>::zeros(b, b); n];
        for tau in 0..=n / 2 {
            let m = DMatrix::from_fn(b, b, |_, _| channel::draw_cn(1.0, &mut rng));
            let m = if tau == 0 || (2 * tau == n) {
                (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
            } else {
                m
            };
            blocks[tau] = m.clone();
            if tau != 0 {
                blocks[n - tau] = m.adjoint();
            }
        }
        let cov = BlockCirculantCov {
            domain: Domain::Lag,
            blocks: blocks.clone(),
        };
        let back = cov.to_frequency().unwrap().to_lag().unwrap();
        for (a, o) in back.blocks.iter().zip(&blocks) {
            prop_assert!((a - o).norm() < 1e-9);
        }
    }

    #[test]
    fn sweep_value_validation(bits in -3.0f64..25.0) {
        let cfg = small_cfg(4, 2, 16, 5, 2);
        let res = qmimo::montecarlo::apply_axis(&cfg, qmimo::montecarlo::Axis::Bits, bits);
        let valid = bits >= 1.0 && bits <= 20.0 && bits.fract() == 0.0;
        prop_assert_eq!(res.is_ok(), valid);
    }
}
