mod common;

use common::{pearson_lag_oracle, random_signal};
use deepmf::baselines::*;
use deepmf::dataset::{synthesize, PreparedRecording, SynthConfig};
use deepmf::deepmf::EcgTemplate;
use deepmf::dsp::SignalTrace;
use deepmf::eval::PEAK_MIN_DISTANCE;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Builtin beats every 250 samples (R-peaks at 100 + 250k), plus an optional
/// narrow spike of height `spike` midway between the 7th and 8th beats.
fn beat_train(spike: f64) -> (SignalTrace, usize) {
    let t = EcgTemplate::builtin();
    let n = 250 * 12;
    let mut x = vec![0.0; n];
    for k in 0..12 {
        for (j, v) in t.samples().iter().enumerate() {
            if 250 * k + j < n {
                x[250 * k + j] += v;
            }
        }
    }
    let mid = 250 * 6 + 225;
    for (i, v) in x.iter_mut().enumerate() {
        let d = i as f64 - mid as f64;
        *v += spike * (-d * d / 18.0).exp();
    }
    (SignalTrace::new(x, 250.0).unwrap(), mid)
}

#[test]
fn matched_filter_equals_pearson_oracle() {
    let t = EcgTemplate::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [200, 201, 777, 2000] {
        let x = random_signal(&mut rng, n);
        let got = matched_filter(&SignalTrace::new(x.clone(), 250.0).unwrap(), &t).unwrap();
        let want = pearson_lag_oracle(&x, t.samples(), t.r_peak_index());
        let err = got.samples().iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "n={n}: {err:e}");
    }
}

#[test]
fn mfht_rejects_an_off_rhythm_candidate() {
    let t = EcgTemplate::builtin();
    let (s, mid) = beat_train(0.2);
    let corr = matched_filter(&s, &t).unwrap().samples()[mid - 3..=mid + 3]
        .iter()
        .cloned()
        .fold(f64::MIN, f64::max);
    assert!((0.25..0.45).contains(&corr), "spike correlation {corr}");

    let beats: Vec<usize> = (0..12).map(|k| 100 + 250 * k).collect();
    let strict = mfht_detect(&s, &t, &MfhtConfig::default()).unwrap();
    assert_eq!(strict.indices(), beats.as_slice());

    let loose = mfht_detect(&s, &t, &MfhtConfig { rr_weight: 0.0, ..MfhtConfig::default() }).unwrap();
    assert!(loose.indices().contains(&mid));
    assert_eq!(loose.len(), 13);
}

#[test]
fn mfht_matches_mf_on_clean_beats() {
    let t = EcgTemplate::builtin();
    let (s, _) = beat_train(0.0);
    let a = mfht_detect(&s, &t, &MfhtConfig::default()).unwrap();
    assert_eq!(a.indices(), mf_detect_default(&s, &t).unwrap().indices());

    let cfg = SynthConfig { n_subjects: 1, duration_s: 30.0, ..SynthConfig::clean() };
    let rec = PreparedRecording::from_recording(&synthesize(&cfg).unwrap()[0]).unwrap();
    let ch = rec.channel_trace(0);
    let a = mfht_detect(&ch, &t, &MfhtConfig::default()).unwrap();
    let b = mf_detect_default(&ch, &t).unwrap();
    assert_eq!(a.indices(), b.indices());
    assert!(a.len() >= rec.truth.len() - 1);
}

#[test]
fn mfht_respects_min_distance() {
    let t = EcgTemplate::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let s = SignalTrace::new(random_signal(&mut rng, 3000), 250.0).unwrap();
        let p = mfht_detect(&s, &t, &MfhtConfig { accept_threshold: -1.0, ..MfhtConfig::default() }).unwrap();
        assert!(p.indices().windows(2).all(|w| w[1] - w[0] >= PEAK_MIN_DISTANCE));
    }
}

#[test]
fn invalid_mfht_config_is_rejected() {
    let (s, _) = beat_train(0.0);
    let t = EcgTemplate::builtin();
    for cfg in [
        MfhtConfig { smoothing: 0, ..MfhtConfig::default() },
        MfhtConfig { rr_weight: -1.0, ..MfhtConfig::default() },
        MfhtConfig { accept_threshold: f64::NAN, ..MfhtConfig::default() },
    ] {
        assert!(mfht_detect(&s, &t, &cfg).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matched_filter_is_affine_invariant(seed in 0u64..1000, a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let t = EcgTemplate::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_signal(&mut rng, 600);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let fx = matched_filter(&SignalTrace::new(x, 250.0).unwrap(), &t).unwrap();
        let fy = matched_filter(&SignalTrace::new(y, 250.0).unwrap(), &t).unwrap();
        for (p, q) in fx.samples().iter().zip(fy.samples()) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn matched_filter_is_bounded(seed in 0u64..1000) {
        let t = EcgTemplate::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = matched_filter(&SignalTrace::new(random_signal(&mut rng, 400), 250.0).unwrap(), &t).unwrap();
        prop_assert!(y.samples().iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}
