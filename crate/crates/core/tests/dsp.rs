use std::f64::consts::PI;

mod common;

use common::{oracle_peaks, random_signal};
use deepmf::dsp::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn trace(x: Vec<f64>, fs: f64) -> SignalTrace {
    SignalTrace::new(x, fs).unwrap()
}

#[test]
fn butterworth_half_power_at_every_cutoff() {
    let fs = 250.0;
    for (lo, hi) in [(1.0, 45.0), (1.0, 5.0)] {
        let c = design_butterworth(&FilterSpec::band_pass(lo, hi, 4), fs).unwrap();
        for f in [lo, hi] {
            assert!((c.magnitude(f, fs) - 0.5f64.sqrt()).abs() < 1e-6, "band {lo}-{hi} at {f}");
        }
        for f in [0.5, 3.0, 20.0, 60.0, 100.0] {
            let a = common::analytic_band_pass(f, lo, hi, 4, fs);
            assert!((c.magnitude(f, fs) - a).abs() < 1e-9, "{f} Hz");
        }
    }
    let hp = design_butterworth(&FilterSpec::high_pass(1.0, 4), fs).unwrap();
    assert!((hp.magnitude(1.0, fs) - 0.5f64.sqrt()).abs() < 1e-6);
    let lp = design_butterworth(&FilterSpec::low_pass(45.0, 4), fs).unwrap();
    assert!((lp.magnitude(45.0, fs) - 0.5f64.sqrt()).abs() < 1e-6);
    assert!(hp.poles().iter().chain(lp.poles().iter()).all(|p| p.norm() < 1.0));
}

#[test]
fn filtfilt_has_zero_lag() {
    let fs = 250.0;
    let c = design_butterworth(&FilterSpec::band_pass(1.0, 45.0, 4), fs).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let raw: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() - 0.5).collect();
    // Band-limit the input first so the output is a near copy of it.
    let x = filtfilt(&trace(raw, fs), &c).unwrap();
    let y = filtfilt(&x, &c).unwrap();
    let xs = x.samples();
    let ys = y.samples();
    let xcorr = |lag: isize| -> f64 {
        (200..1800)
            .map(|i| xs[i] * ys[(i as isize + lag) as usize])
            .sum()
    };
    let best = (-20..=20).max_by(|&a, &b| xcorr(a).total_cmp(&xcorr(b))).unwrap();
    assert_eq!(best, 0);
}

#[test]
fn hilbert_envelope_of_unit_sinusoid() {
    let fs = 250.0;
    for f in [5.0, 10.0, 37.0] {
        let x: Vec<f64> = (0..1000).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect();
        let e = hilbert_envelope(&trace(x, fs));
        for v in &e.samples()[32..968] {
            assert!((v - 1.0).abs() < 1e-3, "{f} Hz: {v}");
        }
    }
}

#[test]
fn decimation_lengths_compose() {
    for n in [999usize, 1000, 1234] {
        let x = trace((0..n).map(|i| (i as f64 * 0.01).sin()).collect(), 1000.0);
        let ab = decimate(&decimate(&x, 2).unwrap(), 3).unwrap().len();
        let direct = decimate(&x, 6).unwrap().len();
        assert!(ab.abs_diff(direct) <= 1);
    }
}

#[test]
fn find_peaks_matches_brute_force_on_200_signals() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let x = random_signal(&mut rng, 500);
        let min_height = rng.random_range(-0.5..0.8);
        let min_distance = rng.random_range(1..30);
        let max_width = if rng.random_bool(0.3) {
            f64::INFINITY
        } else {
            rng.random_range(1.0..40.0)
        };
        let c = PeakConstraints::new(min_height, min_distance, max_width).unwrap();
        let got = find_peaks_in(&x, &c);
        let want = oracle_peaks(&x, min_height, min_distance, max_width);
        assert_eq!(got.indices(), want.as_slice(), "case {case}");
    }
}

#[test]
fn evaluation_constraints_example() {
    let mut x = vec![0.0; 200];
    for (i, v) in x.iter_mut().enumerate() {
        let d100 = (i as f64 - 100.0).abs();
        let d108 = (i as f64 - 108.0).abs();
        *v = f64::max((1.0 - d100 / 3.0).max(0.0), (0.8 - 0.8 * d108 / 3.0).max(0.0));
    }
    let c = PeakConstraints::new(0.5, 12, 25.0).unwrap();
    assert_eq!(find_peaks_in(&x, &c).indices(), &[100]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn peak_sets_respect_distance(
        x in prop::collection::vec(-1.0f64..1.0, 3..300),
        d in 1usize..25,
    ) {
        let p = find_peaks_in(&x, &PeakConstraints::new(f64::NEG_INFINITY, d, f64::INFINITY).unwrap());
        for w in p.indices().windows(2) {
            prop_assert!(w[1] - w[0] >= d);
        }
        for (&i, &h) in p.indices().iter().zip(p.heights()) {
            prop_assert_eq!(x[i], h);
        }
    }

    #[test]
    fn filtfilt_is_linear(
        x in prop::collection::vec(-1.0f64..1.0, 64..200),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let c = design_butterworth(&FilterSpec::band_pass(1.0, 45.0, 4), 250.0).unwrap();
        let y: Vec<f64> = x.iter().rev().cloned().collect();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let fx = filtfilt(&trace(x.clone(), 250.0), &c).unwrap();
        let fy = filtfilt(&trace(y, 250.0), &c).unwrap();
        let fm = filtfilt(&trace(mix, 250.0), &c).unwrap();
        let scale = fm.samples().iter().map(|v| v.abs()).fold(1.0, f64::max);
        for i in 0..fm.len() {
            let lin = a * fx.samples()[i] + b * fy.samples()[i];
            prop_assert!((fm.samples()[i] - lin).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn envelope_dominates_signal(x in prop::collection::vec(-1.0f64..1.0, 80..300)) {
        let n = x.len();
        let e = hilbert_envelope(&trace(x.clone(), 250.0));
        prop_assert!(e.samples().iter().all(|&v| v >= 0.0));
        for i in 32..n - 32 {
            prop_assert!(e.samples()[i] >= x[i].abs() - 1e-9);
        }
    }
}
