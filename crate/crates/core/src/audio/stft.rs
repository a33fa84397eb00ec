use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::{Error, Result, Scalar};

/// Number of STFT frames for an un-padded sliding window.
pub fn n_frames(len: usize, n_fft: usize, hop: usize) -> Result<usize> {
    if len < n_fft {
        return Err(Error::InputTooShort(format!(
            "waveform of {len} samples is shorter than one frame ({n_fft})"
        )));
    }
    Ok(1 + (len - n_fft) / hop)
}

pub fn hann<S: Scalar>(n: usize) -> Vec<S> {
    (0..n)
        .map(|i| {
            let v = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos());
            S::from_f64c(v)
        })
        .collect()
}

/// Magnitude STFT, Hann window, frame t covering samples [t*hop, t*hop+n_fft).
/// Returns (T' x n_fft/2+1).
pub fn stft_magnitude<S: Scalar>(samples: &[S], n_fft: usize, hop: usize) -> Result<Array2<S>> {
    let t_frames = n_frames(samples.len(), n_fft, hop)?;
    let n_bins = n_fft / 2 + 1;
    let window = hann::<S>(n_fft);
    let mut planner = FftPlanner::<S>::new();
    let fft = planner.plan_fft_forward(n_fft);
    let mut out = Array2::zeros((t_frames, n_bins));
    let mut buf: Vec<Complex<S>> = vec![Complex::new(S::zero(), S::zero()); n_fft];
    for t in 0..t_frames {
        let start = t * hop;
        for i in 0..n_fft {
            buf[i] = Complex::new(samples[start + i] * window[i], S::zero());
        }
        fft.process(&mut buf);
        for b in 0..n_bins {
            out[[t, b]] = buf[b].norm();
        }
    }
    Ok(out)
}

/// Frequency of each STFT bin in Hz.
pub fn bin_frequencies<S: Scalar>(n_fft: usize, sample_rate: u32) -> Vec<S> {
    let n_bins = n_fft / 2 + 1;
    (0..n_bins)
        .map(|b| S::from_f64c(b as f64 * sample_rate as f64 / n_fft as f64))
        .collect()
}

/// Center time of STFT frame `t` in seconds.
pub fn frame_time(t: usize, n_fft: usize, hop: usize, sample_rate: u32) -> f64 {
    (t * hop + n_fft / 2) as f64 / sample_rate as f64
}
