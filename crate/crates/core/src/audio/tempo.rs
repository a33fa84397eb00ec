use ndarray::Array1;

use super::FeatureConfig;
use crate::Scalar;

/// Tempo estimate (BPM) plus a predominant-local-pulse curve on the same
/// frame grid as the onset envelope.
///
/// Tempo is the argmax of the biased autocorrelation of the onset envelope
/// over the lag range implied by `cfg.tempo_range`, refined by parabolic
/// interpolation. The pulse curve is an overlap-add of phase-fitted cosines
/// at the tempo frequency, half-wave rectified; its peaks land on predicted
/// beats. An all-zero envelope yields (0, zeros) -- "no rhythm".
pub fn tempo_and_plp<S: Scalar>(
    onset: &Array1<S>,
    frame_rate: f64,
    cfg: &FeatureConfig,
) -> (f64, Array1<S>) {
    let n = onset.len();
    let zeros = || Array1::zeros(n);
    if n < 2 || onset.iter().all(|v| *v == S::zero()) {
        return (0.0, zeros());
    }
    let (min_bpm, max_bpm) = cfg.tempo_range;
    let lag_min = ((60.0 * frame_rate / max_bpm).ceil() as usize).max(1);
    let lag_max = ((60.0 * frame_rate / min_bpm).floor() as usize).min(n - 1);
    if lag_min > lag_max {
        return (0.0, zeros());
    }

    // biased autocorrelation: shorter lags are favored, which suppresses the
    // subharmonic (half-tempo) peaks of sparse onset curves
    let o: Vec<f64> = onset.iter().map(|v| v.to_f64c()).collect();
    let autocorr = |lag: usize| -> f64 {
        let mut acc = 0.0;
        for t in 0..n - lag {
            acc += o[t] * o[t + lag];
        }
        acc / n as f64
    };
    let mut best_lag = lag_min;
    let mut best_val = f64::NEG_INFINITY;
    for lag in lag_min..=lag_max {
        let v = autocorr(lag);
        if v > best_val {
            best_val = v;
            best_lag = lag;
        }
    }
    if best_val <= 0.0 {
        return (0.0, zeros());
    }

    // parabolic peak refinement for sub-lag tempo resolution
    let mut lag_f = best_lag as f64;
    if best_lag > lag_min && best_lag < lag_max {
        let (rl, rc, rr) = (
            autocorr(best_lag - 1),
            best_val,
            autocorr(best_lag + 1),
        );
        let denom = rl - 2.0 * rc + rr;
        if denom.abs() > 1e-12 {
            let delta = 0.5 * (rl - rr) / denom;
            if delta.abs() <= 1.0 {
                lag_f += delta;
            }
        }
    }
    let tempo_bpm = 60.0 * frame_rate / lag_f;

    // windowed phase fit: correlate each window with a complex exponential at
    // the beat frequency, overlap-add the best-phase cosine, rectify
    let omega = 2.0 * std::f64::consts::PI / lag_f;
    let win_len = ((8.0 * lag_f).round() as usize).clamp(2, n);
    let hop = (win_len / 4).max(1);
    let hann: Vec<f64> = (0..win_len)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / win_len as f64).cos()))
        .collect();
    let mut plp = vec![0.0f64; n];
    let mut start = 0usize;
    loop {
        let end = (start + win_len).min(n);
        let mut re = 0.0;
        let mut im = 0.0;
        for t in start..end {
            let wv = hann[t - start] * o[t];
            re += wv * (omega * t as f64).cos();
            im -= wv * (omega * t as f64).sin();
        }
        let phase = im.atan2(re);
        if re != 0.0 || im != 0.0 {
            for t in start..end {
                plp[t] += hann[t - start] * (omega * t as f64 + phase).cos();
            }
        }
        if end == n {
            break;
        }
        start += hop;
    }
    let plp = Array1::from_iter(plp.into_iter().map(|v| S::from_f64c(v.max(0.0))));
    (tempo_bpm, plp)
}
