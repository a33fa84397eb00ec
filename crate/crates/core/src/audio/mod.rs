//! Audio feature extraction: MFCC, spectral centroid/bandwidth, onset
//! envelope, tempo and predominant local pulse, aligned to the motion frame
//! rate and stacked into one standardized feature matrix.

pub mod features;
pub mod stft;
pub mod tempo;
mod vcf;
mod wav;

pub use vcf::{read_vcf, write_vcf};
pub use wav::{read_wav, write_wav};

use ndarray::{Array1, Array2};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone)]
pub struct Waveform<S> {
    /// Mono samples in [-1, 1].
    pub samples: Vec<S>,
    pub sample_rate: u32,
}

impl<S: Scalar> Waveform<S> {
    pub fn new(samples: Vec<S>, sample_rate: u32) -> Result<Self> {
        if sample_rate < 8000 {
            return Err(Error::InvalidConfig(format!(
                "sample rate {sample_rate} below 8000 Hz"
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Audio("waveform contains non-finite samples".into()));
        }
        Ok(Waveform { samples, sample_rate })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub motion_fps: f64,
    /// (min_bpm, max_bpm) search range for the tempo estimate.
    pub tempo_range: (f64, f64),
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            n_fft: 2048,
            hop: 512,
            n_mels: 64,
            n_mfcc: 20,
            motion_fps: 30.0,
            tempo_range: (40.0, 208.0),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.hop > 0
            && self.hop <= self.n_fft
            && self.n_mfcc <= self.n_mels
            && self.n_mfcc > 0
            && self.motion_fps > 0.0
            && self.tempo_range.0 > 0.0
            && self.tempo_range.0 < self.tempo_range.1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad feature config: {self:?}")))
        }
    }

    /// Channels of the stacked feature matrix.
    pub fn n_channels(&self) -> usize {
        self.n_mfcc + 4
    }

    pub fn channel_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.n_mfcc).map(|i| format!("mfcc_{i:02}")).collect();
        names.extend(
            ["centroid", "bandwidth", "onset", "plp"]
                .iter()
                .map(|s| s.to_string()),
        );
        names
    }
}

/// Per-frame feature stack aligned to the motion frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFeatureSequence<S> {
    /// (T x C), standardized per channel.
    pub frames: Array2<S>,
    pub fps: f64,
    pub tempo_bpm: f64,
    pub channel_names: Vec<String>,
}

/// Linear interpolation of a track sampled at `src_times` onto `dst_times`,
/// holding the edge values outside the covered span.
fn resample_linear<S: Scalar>(values: &Array1<S>, src_times: &[f64], dst_times: &[f64]) -> Array1<S> {
    assert_eq!(values.len(), src_times.len());
    let n = values.len();
    let mut out = Array1::zeros(dst_times.len());
    for (i, &t) in dst_times.iter().enumerate() {
        if t <= src_times[0] {
            out[i] = values[0];
        } else if t >= src_times[n - 1] {
            out[i] = values[n - 1];
        } else {
            let j = src_times.partition_point(|&s| s <= t) - 1;
            let j = j.min(n - 2);
            let a = (t - src_times[j]) / (src_times[j + 1] - src_times[j]);
            out[i] = values[j] * S::from_f64c(1.0 - a) + values[j + 1] * S::from_f64c(a);
        }
    }
    out
}

/// Full extraction pipeline. All tracks are computed on the STFT grid,
/// linearly resampled to `motion_fps`, then standardized per channel over
/// the clip (variance-floored); the tempo estimate is stored as metadata.
pub fn extract_features<S: Scalar>(w: &Waveform<S>, cfg: &FeatureConfig) -> Result<AudioFeatureSequence<S>> {
    cfg.validate()?;
    let mfcc = features::mfcc(w, cfg)?;
    let centroid = features::spectral_centroid(w, cfg)?;
    let bandwidth = features::spectral_bandwidth(w, cfg)?;
    let onset = features::onset_envelope(w, cfg)?;
    let frame_rate = w.sample_rate as f64 / cfg.hop as f64;
    let (tempo_bpm, plp) = tempo::tempo_and_plp(&onset, frame_rate, cfg);

    let t_stft = mfcc.nrows();
    let src_times: Vec<f64> = (0..t_stft)
        .map(|t| stft::frame_time(t, cfg.n_fft, cfg.hop, w.sample_rate))
        .collect();
    let t_out = (w.duration_s() * cfg.motion_fps).round() as usize;
    let dst_times: Vec<f64> = (0..t_out).map(|m| m as f64 / cfg.motion_fps).collect();

    let n_ch = cfg.n_channels();
    let mut frames = Array2::zeros((t_out, n_ch));
    let mut put = |ch: usize, track: Array1<S>| {
        let res = resample_linear(&track, &src_times, &dst_times);
        for t in 0..t_out {
            frames[[t, ch]] = res[t];
        }
    };
    for k in 0..cfg.n_mfcc {
        put(k, mfcc.column(k).to_owned());
    }
    put(cfg.n_mfcc, centroid);
    put(cfg.n_mfcc + 1, bandwidth);
    put(cfg.n_mfcc + 2, onset);
    put(cfg.n_mfcc + 3, plp);

    standardize_columns(&mut frames);
    Ok(AudioFeatureSequence {
        frames,
        fps: cfg.motion_fps,
        tempo_bpm,
        channel_names: cfg.channel_names(),
    })
}

/// In-place per-column standardization with a variance floor: channels whose
/// standard deviation is below 1e-6 are only mean-centered.
pub fn standardize_columns<S: Scalar>(m: &mut Array2<S>) {
    let t = m.nrows();
    if t == 0 {
        return;
    }
    let tn = S::from_f64c(t as f64);
    for mut col in m.columns_mut() {
        let mean: S = col.iter().copied().sum::<S>() / tn;
        let var: S = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<S>() / tn;
        let sd = var.sqrt();
        let floor = S::from_f64c(1e-6);
        if sd < floor {
            col.mapv_inplace(|v| v - mean);
        } else {
            col.mapv_inplace(|v| (v - mean) / sd);
        }
    }
}
