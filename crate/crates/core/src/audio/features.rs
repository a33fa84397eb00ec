use ndarray::{Array1, Array2};

use super::stft::{bin_frequencies, stft_magnitude};
use super::{FeatureConfig, Waveform};
use crate::{Result, Scalar};

/// Additive floor inside the log compression of mel power.
pub const LOG_EPS: f64 = 1e-3;
/// Total-magnitude threshold below which a frame counts as silent.
pub const SILENCE_EPS: f64 = 1e-8;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank (n_mels x n_bins), peak-normalized triangles
/// spanning 0 Hz .. sr/2.
pub fn mel_filterbank<S: Scalar>(n_mels: usize, n_fft: usize, sample_rate: u32) -> Array2<S> {
    let n_bins = n_fft / 2 + 1;
    let f_max = sample_rate as f64 / 2.0;
    let m_max = hz_to_mel(f_max);
    // n_mels + 2 edge points, equally spaced in mel
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(m_max * i as f64 / (n_mels + 1) as f64))
        .collect();
    let freqs: Vec<S> = bin_frequencies(n_fft, sample_rate);
    let mut fb = Array2::zeros((n_mels, n_bins));
    for m in 0..n_mels {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for b in 0..n_bins {
            let f = freqs[b].to_f64c();
            let w = if f > lo && f < mid {
                (f - lo) / (mid - lo)
            } else if f >= mid && f < hi {
                (hi - f) / (hi - mid)
            } else {
                0.0
            };
            fb[[m, b]] = S::from_f64c(w);
        }
    }
    fb
}

/// Log-compressed mel power spectrogram (T' x n_mels).
pub fn log_mel<S: Scalar>(w: &Waveform<S>, cfg: &FeatureConfig) -> Result<Array2<S>> {
    let mag = stft_magnitude(&w.samples, cfg.n_fft, cfg.hop)?;
    let fb = mel_filterbank::<S>(cfg.n_mels, cfg.n_fft, w.sample_rate);
    let eps = S::from_f64c(LOG_EPS);
    let (t_frames, n_bins) = mag.dim();
    let mut out = Array2::zeros((t_frames, cfg.n_mels));
    for t in 0..t_frames {
        for m in 0..cfg.n_mels {
            let mut p = S::zero();
            for b in 0..n_bins {
                p += fb[[m, b]] * mag[[t, b]] * mag[[t, b]];
            }
            out[[t, m]] = (p + eps).ln();
        }
    }
    Ok(out)
}

/// Type-II DCT matrix (n_out x n_in), orthonormal scaling.
pub fn dct_ii<S: Scalar>(n_out: usize, n_in: usize) -> Array2<S> {
    let mut m = Array2::zeros((n_out, n_in));
    let pi = std::f64::consts::PI;
    for k in 0..n_out {
        let scale = if k == 0 {
            (1.0 / n_in as f64).sqrt()
        } else {
            (2.0 / n_in as f64).sqrt()
        };
        for n in 0..n_in {
            m[[k, n]] = S::from_f64c(scale * (pi * (n as f64 + 0.5) * k as f64 / n_in as f64).cos());
        }
    }
    m
}

/// MFCC matrix (T' x n_mfcc): magnitude STFT -> mel -> log -> DCT-II.
pub fn mfcc<S: Scalar>(w: &Waveform<S>, cfg: &FeatureConfig) -> Result<Array2<S>> {
    let lm = log_mel(w, cfg)?;
    let dct = dct_ii::<S>(cfg.n_mfcc, cfg.n_mels);
    let (t_frames, n_mels) = lm.dim();
    let mut out = Array2::zeros((t_frames, cfg.n_mfcc));
    for t in 0..t_frames {
        for k in 0..cfg.n_mfcc {
            let mut acc = S::zero();
            for m in 0..n_mels {
                acc += dct[[k, m]] * lm[[t, m]];
            }
            out[[t, k]] = acc;
        }
    }
    Ok(out)
}

/// Spectral centroid per frame in Hz; near-silent frames return 0.
pub fn spectral_centroid<S: Scalar>(w: &Waveform<S>, cfg: &FeatureConfig) -> Result<Array1<S>> {
    let mag = stft_magnitude(&w.samples, cfg.n_fft, cfg.hop)?;
    let freqs: Vec<S> = bin_frequencies(cfg.n_fft, w.sample_rate);
    let eps = S::from_f64c(SILENCE_EPS);
    let mut out = Array1::zeros(mag.nrows());
    for (t, row) in mag.rows().into_iter().enumerate() {
        let total: S = row.iter().copied().sum();
        if total < eps {
            continue;
        }
        let weighted: S = row.iter().zip(&freqs).map(|(&m, &f)| m * f).sum();
        out[t] = weighted / total;
    }
    Ok(out)
}

/// Spectral bandwidth per frame in Hz (second moment around the centroid);
/// near-silent frames return 0.
pub fn spectral_bandwidth<S: Scalar>(w: &Waveform<S>, cfg: &FeatureConfig) -> Result<Array1<S>> {
    let mag = stft_magnitude(&w.samples, cfg.n_fft, cfg.hop)?;
    let freqs: Vec<S> = bin_frequencies(cfg.n_fft, w.sample_rate);
    let eps = S::from_f64c(SILENCE_EPS);
    let mut out = Array1::zeros(mag.nrows());
    for (t, row) in mag.rows().into_iter().enumerate() {
        let total: S = row.iter().copied().sum();
        if total < eps {
            continue;
        }
        let centroid: S = row.iter().zip(&freqs).map(|(&m, &f)| m * f).sum::<S>() / total;
        let second: S = row
            .iter()
            .zip(&freqs)
            .map(|(&m, &f)| {
                let d = f - centroid;
                m * d * d
            })
            .sum();
        out[t] = (second / total).sqrt();
    }
    Ok(out)
}

/// Spectral-flux onset envelope: half-wave-rectified first difference of the
/// log-mel spectrogram summed over bands. Nonnegative; frame 0 is 0.
pub fn onset_envelope<S: Scalar>(w: &Waveform<S>, cfg: &FeatureConfig) -> Result<Array1<S>> {
    let lm = log_mel(w, cfg)?;
    let (t_frames, n_mels) = lm.dim();
    let mut out = Array1::zeros(t_frames);
    for t in 1..t_frames {
        let mut acc = S::zero();
        for m in 0..n_mels {
            let d = lm[[t, m]] - lm[[t - 1, m]];
            if d > S::zero() {
                acc += d;
            }
        }
        out[t] = acc;
    }
    Ok(out)
}
