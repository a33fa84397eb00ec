//! Feature extraction checked against straight-line brute-force oracles
//! (direct DFT sums, explicit mel and DCT matrices) plus constructed signals
//! with known spectra.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use virtual_conductor::audio::features::{
    mfcc, onset_envelope, spectral_bandwidth, spectral_centroid, LOG_EPS,
};
use virtual_conductor::audio::stft::{frame_time, n_frames};
use virtual_conductor::audio::tempo::tempo_and_plp;
use virtual_conductor::audio::{extract_features, FeatureConfig, Waveform};

const PI: f64 = std::f64::consts::PI;

fn small_cfg() -> FeatureConfig {
    FeatureConfig {
        n_fft: 512,
        hop: 256,
        n_mels: 40,
        n_mfcc: 13,
        ..FeatureConfig::default()
    }
}

fn sine(freq: f64, dur_s: f64, sr: u32, amp: f64) -> Waveform<f64> {
    let n = (dur_s * sr as f64) as usize;
    let samples = (0..n)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / sr as f64).sin())
        .collect();
    Waveform::new(samples, sr).unwrap()
}

fn click_train(bpm: f64, dur_s: f64, sr: u32) -> Waveform<f64> {
    let n = (dur_s * sr as f64) as usize;
    let mut samples = vec![0.0f64; n];
    let period = 60.0 / bpm;
    let mut t = 0.25;
    while t < dur_s {
        let s0 = (t * sr as f64) as usize;
        for i in 0..128.min(n.saturating_sub(s0)) {
            let env = 0.5 * (1.0 - (2.0 * PI * i as f64 / 128.0).cos());
            samples[s0 + i] = 0.8 * env * (2.0 * PI * 2000.0 * i as f64 / sr as f64).sin();
        }
        t += period;
    }
    Waveform::new(samples, sr).unwrap()
}

/// Brute-force per-frame magnitude spectrum: Hann window, direct DFT sums.
fn oracle_frame_spectrum(samples: &[f64], start: usize, n_fft: usize) -> Vec<f64> {
    let n_bins = n_fft / 2 + 1;
    let mut mags = vec![0.0; n_bins];
    for (k, m) in mags.iter_mut().enumerate() {
        let mut re = 0.0;
        let mut im = 0.0;
        for i in 0..n_fft {
            let w = 0.5 * (1.0 - (2.0 * PI * i as f64 / n_fft as f64).cos());
            let ang = -2.0 * PI * i as f64 * k as f64 / n_fft as f64;
            let v = samples[start + i] * w;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        *m = (re * re + im * im).sqrt();
    }
    mags
}

fn oracle_mel_weights(n_mels: usize, n_fft: usize, sr: u32) -> Vec<Vec<f64>> {
    let to_mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let to_hz = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let m_max = to_mel(sr as f64 / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| to_hz(m_max * i as f64 / (n_mels + 1) as f64))
        .collect();
    let n_bins = n_fft / 2 + 1;
    let mut fb = vec![vec![0.0; n_bins]; n_mels];
    for m in 0..n_mels {
        for b in 0..n_bins {
            let f = b as f64 * sr as f64 / n_fft as f64;
            fb[m][b] = if f > edges[m] && f < edges[m + 1] {
                (f - edges[m]) / (edges[m + 1] - edges[m])
            } else if f >= edges[m + 1] && f < edges[m + 2] {
                (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1])
            } else {
                0.0
            };
        }
    }
    fb
}

#[test]
fn mfcc_centroid_bandwidth_match_brute_force_oracle() {
    let cfg = small_cfg();
    let sr = 22050u32;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for clip in 0..10 {
        let samples: Vec<f64> = (0..sr as usize).map(|_| rng.random_range(-0.5..0.5)).collect();
        let w = Waveform::new(samples.clone(), sr).unwrap();
        let got_mfcc = mfcc(&w, &cfg).unwrap();
        let got_cent = spectral_centroid(&w, &cfg).unwrap();
        let got_bw = spectral_bandwidth(&w, &cfg).unwrap();

        let fb = oracle_mel_weights(cfg.n_mels, cfg.n_fft, sr);
        let n_bins = cfg.n_fft / 2 + 1;
        let t_frames = 1 + (samples.len() - cfg.n_fft) / cfg.hop;
        assert_eq!(got_mfcc.nrows(), t_frames);
        for t in (0..t_frames).step_by(17) {
            let mags = oracle_frame_spectrum(&samples, t * cfg.hop, cfg.n_fft);

            // centroid and bandwidth by direct sums
            let total: f64 = mags.iter().sum();
            let freq = |b: usize| b as f64 * sr as f64 / cfg.n_fft as f64;
            let cent: f64 = mags.iter().enumerate().map(|(b, m)| m * freq(b)).sum::<f64>() / total;
            let second: f64 = mags
                .iter()
                .enumerate()
                .map(|(b, m)| m * (freq(b) - cent).powi(2))
                .sum::<f64>()
                / total;
            let bw = second.sqrt();
            assert!(
                (got_cent[t] - cent).abs() / cent.abs() < 1e-4,
                "clip {clip} frame {t} centroid {} vs oracle {cent}",
                got_cent[t]
            );
            assert!((got_bw[t] - bw).abs() / bw.abs() < 1e-4);

            // log mel then explicit DCT-II sums
            let logmel: Vec<f64> = fb
                .iter()
                .map(|row| {
                    let p: f64 = (0..n_bins).map(|b| row[b] * mags[b] * mags[b]).sum();
                    (p + LOG_EPS).ln()
                })
                .collect();
            for k in 0..cfg.n_mfcc {
                let scale = if k == 0 {
                    (1.0 / cfg.n_mels as f64).sqrt()
                } else {
                    (2.0 / cfg.n_mels as f64).sqrt()
                };
                let want: f64 = (0..cfg.n_mels)
                    .map(|m| {
                        scale * (PI * (m as f64 + 0.5) * k as f64 / cfg.n_mels as f64).cos() * logmel[m]
                    })
                    .sum();
                let got = got_mfcc[[t, k]];
                let denom = want.abs().max(1e-3);
                assert!(
                    (got - want).abs() / denom < 1e-4,
                    "clip {clip} frame {t} mfcc[{k}]: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn frame_count_law_holds_for_random_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let n_fft = rng.random_range(64..2048usize);
        let hop = rng.random_range(1..=n_fft);
        let len = rng.random_range(n_fft..8 * n_fft);
        assert_eq!(n_frames(len, n_fft, hop).unwrap(), 1 + (len - n_fft) / hop);
    }
    assert!(n_frames(100, 512, 256).is_err());
}

#[test]
fn one_second_default_config_gives_forty_frames() {
    let w = sine(440.0, 1.0, 22050, 0.5);
    let cfg = FeatureConfig::default();
    let m = mfcc(&w, &cfg).unwrap();
    assert_eq!(m.nrows(), 1 + (22050 - 2048) / 512);
    assert_eq!(m.nrows(), 40);
}

#[test]
fn dc_signal_gives_identical_mfcc_rows() {
    let w = Waveform::new(vec![0.25f64; 22050], 22050).unwrap();
    let m = mfcc(&w, &small_cfg()).unwrap();
    let first = m.row(0);
    for row in m.rows() {
        for (a, b) in row.iter().zip(first.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn sine_centroid_near_its_frequency_and_bandwidth_narrow() {
    let w = sine(440.0, 1.0, 22050, 0.6);
    let cfg = FeatureConfig::default();
    let cent = spectral_centroid(&w, &cfg).unwrap();
    let bw = spectral_bandwidth(&w, &cfg).unwrap();
    for t in 1..cent.len() - 1 {
        assert!(
            (cent[t] - 440.0).abs() < 0.05 * 440.0,
            "frame {t} centroid {}",
            cent[t]
        );
        assert!(bw[t] < 0.1 * cent[t], "frame {t} bandwidth {}", bw[t]);
    }
}

#[test]
fn silence_maps_to_zero_centroid_bandwidth_onset() {
    let w = Waveform::new(vec![0.0f64; 22050], 22050).unwrap();
    let cfg = small_cfg();
    assert!(spectral_centroid(&w, &cfg).unwrap().iter().all(|&v| v == 0.0));
    assert!(spectral_bandwidth(&w, &cfg).unwrap().iter().all(|&v| v == 0.0));
    assert!(onset_envelope(&w, &cfg).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn impulse_frame_has_flat_spectrum_centroid() {
    // a single impulse inside one analysis window gives |S(k)| = w[i0]*|x|,
    // constant over k, so the centroid is the mean of the bin frequencies
    let cfg = small_cfg();
    let sr = 22050u32;
    let mut samples = vec![0.0f64; sr as usize];
    let i0 = cfg.n_fft / 2; // center of frame 0
    samples[i0] = 0.8;
    let w = Waveform::new(samples, sr).unwrap();
    let cent = spectral_centroid(&w, &cfg).unwrap();
    let n_bins = cfg.n_fft / 2 + 1;
    let mean_freq: f64 = (0..n_bins)
        .map(|b| b as f64 * sr as f64 / cfg.n_fft as f64)
        .sum::<f64>()
        / n_bins as f64;
    assert!(
        (cent[0] - mean_freq).abs() < 1e-6 * mean_freq,
        "centroid {} vs mean bin freq {mean_freq}",
        cent[0]
    );
}

#[test]
fn two_tone_bandwidth_is_half_the_separation() {
    let sr = 22050u32;
    let (f1, f2) = (2153.3203125, 4306.640625); // exact bin centers for n_fft=2048
    let n = sr as usize;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sr as f64;
            0.4 * (2.0 * PI * f1 * t).sin() + 0.4 * (2.0 * PI * f2 * t).sin()
        })
        .collect();
    let w = Waveform::new(samples, sr).unwrap();
    let bw = spectral_bandwidth(&w, &FeatureConfig::default()).unwrap();
    let want = (f2 - f1) / 2.0;
    for t in 1..bw.len() - 1 {
        assert!(
            (bw[t] - want).abs() < 0.05 * want,
            "frame {t}: bandwidth {} vs {want}",
            bw[t]
        );
    }
}

#[test]
fn onset_peaks_at_a_single_click() {
    let cfg = FeatureConfig::default();
    let sr = 22050u32;
    let mut samples = vec![0.0f64; sr as usize];
    let s0 = (0.5 * sr as f64) as usize;
    for i in 0..128 {
        let env = 0.5 * (1.0 - (2.0 * PI * i as f64 / 128.0).cos());
        samples[s0 + i] = 0.8 * env * (2.0 * PI * 2000.0 * i as f64 / sr as f64).sin();
    }
    let w = Waveform::new(samples, sr).unwrap();
    let onset = onset_envelope(&w, &cfg).unwrap();
    let argmax = onset
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0 as i64;
    let expected = ((s0 as f64 - cfg.n_fft as f64 / 2.0) / cfg.hop as f64).round() as i64;
    assert!(
        (argmax - expected).abs() <= 1,
        "onset argmax at {argmax}, expected {expected} +- 1"
    );
}

#[test]
fn onset_counts_clicks_in_a_train() {
    let cfg = FeatureConfig::default();
    let w = click_train(120.0, 6.0, 22050);
    let n_clicks = (0..)
        .map(|k| 0.25 + k as f64 * 0.5)
        .take_while(|t| *t < 6.0)
        .count();
    let onset = onset_envelope(&w, &cfg).unwrap();
    let half_max = onset.iter().cloned().fold(0.0f64, f64::max) / 2.0;
    let mut peaks = 0;
    for t in 1..onset.len() - 1 {
        if onset[t] > half_max && onset[t] >= onset[t - 1] && onset[t] > onset[t + 1] {
            peaks += 1;
        }
    }
    assert_eq!(peaks, n_clicks);
}

#[test]
fn tempo_of_click_train_is_recovered() {
    let mut cfg = small_cfg();
    cfg.tempo_range = (60.0, 180.0);
    let sr = 22050u32;
    let w = click_train(120.0, 10.0, sr);
    let onset = onset_envelope(&w, &cfg).unwrap();
    let frame_rate = sr as f64 / cfg.hop as f64;
    let (bpm, plp) = tempo_and_plp(&onset, frame_rate, &cfg);
    assert!((bpm - 120.0).abs() <= 3.0, "estimated {bpm} BPM");

    // >= 80% of PLP local maxima within +-2 frames of true click positions
    let click_frames: Vec<f64> = (0..)
        .map(|k| 0.25 + k as f64 * 0.5)
        .take_while(|t| *t < 10.0)
        .map(|t| (t * sr as f64 - cfg.n_fft as f64 / 2.0) / cfg.hop as f64)
        .collect();
    let mut hits = 0;
    let mut total = 0;
    for t in 1..plp.len() - 1 {
        if plp[t] > plp[t - 1] && plp[t] >= plp[t + 1] && plp[t] > 0.0 {
            total += 1;
            if click_frames.iter().any(|&c| (c - t as f64).abs() <= 2.0) {
                hits += 1;
            }
        }
    }
    assert!(total > 0);
    assert!(
        hits as f64 / total as f64 >= 0.8,
        "{hits}/{total} PLP peaks near clicks"
    );
}

#[test]
fn zero_onset_gives_zero_tempo_and_pulse() {
    let cfg = small_cfg();
    let onset = Array1::<f64>::zeros(200);
    let (bpm, plp) = tempo_and_plp(&onset, 43.0, &cfg);
    assert_eq!(bpm, 0.0);
    assert!(plp.iter().all(|&v| v == 0.0));
}

#[test]
fn extract_features_length_standardization_determinism() {
    let cfg = FeatureConfig::default();
    let w = click_train(100.0, 10.0, 22050);
    let a = extract_features(&w, &cfg).unwrap();
    assert_eq!(a.frames.ncols(), cfg.n_channels());
    assert_eq!(a.channel_names.len(), cfg.n_channels());
    let t = a.frames.nrows() as i64;
    assert!((t - 300).abs() <= 1, "T = {t}");
    for col in a.frames.columns() {
        let n = col.len() as f64;
        let mean: f64 = col.iter().sum::<f64>() / n;
        let var: f64 = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-6);
        let sd = var.sqrt();
        assert!(sd < 1e-6 || (0.99..=1.01).contains(&sd), "channel sd {sd}");
    }
    let b = extract_features(&w, &cfg).unwrap();
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.tempo_bpm, b.tempo_bpm);
}

#[test]
fn centroid_is_amplitude_invariant() {
    let cfg = small_cfg();
    let w1 = sine(440.0, 1.0, 22050, 0.2);
    let w2 = sine(440.0, 1.0, 22050, 0.9);
    let c1 = spectral_centroid(&w1, &cfg).unwrap();
    let c2 = spectral_centroid(&w2, &cfg).unwrap();
    for (a, b) in c1.iter().zip(c2.iter()) {
        assert!((a - b).abs() < 1e-6 * b.abs().max(1.0));
    }
}

#[test]
fn outputs_stay_finite_on_assorted_inputs() {
    let cfg = small_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sr = 22050u32;
    let mut inputs: Vec<Vec<f64>> = vec![
        vec![0.0; sr as usize],
        (0..sr as usize).map(|_| rng.random_range(-1.0..1.0)).collect(),
    ];
    let mut clicky = vec![0.0f64; sr as usize];
    for s in (1000..20000).step_by(3000) {
        clicky[s] = 1.0;
    }
    inputs.push(clicky);
    for samples in inputs {
        let w = Waveform::new(samples, sr).unwrap();
        let f = extract_features(&w, &cfg).unwrap();
        assert!(f.frames.iter().all(|v| v.is_finite()));
        assert!(f.tempo_bpm.is_finite());
    }
}

#[test]
fn frame_times_sit_at_window_centers() {
    assert_eq!(frame_time(0, 2048, 512, 22050), 1024.0 / 22050.0);
    assert_eq!(frame_time(3, 2048, 512, 22050), (3 * 512 + 1024) as f64 / 22050.0);
}
