//! Audio file to motion sequence: chunked generation with cross-faded
//! overlaps, smoothing, canvas mapping, and AMC-based synchronization
//! scoring.

pub mod render;

use ndarray::{Array2, Array3};

use crate::audio::AudioFeatureSequence;
use crate::models::{ModelBundle, StageTag};
use crate::motion::{MotionSequence, N_JOINTS};
use crate::{Error, Result, Scalar};

/// Generate motion channels (T x 2J, normalized coordinates) for a feature
/// sequence of arbitrary length: W-frame chunks at 50% overlap, linearly
/// cross-faded. Output length equals the feature length.
pub fn generate_motion_channels<S: Scalar>(
    bundle: &ModelBundle<S>,
    features: &Array2<S>,
    window: usize,
) -> Result<Array2<S>> {
    generate_motion_channels_stepped(bundle, features, window, (window / 2).max(1))
}

/// Like [`generate_motion_channels`] but with an explicit hop between chunk
/// starts, for overlap fractions other than one half.
pub fn generate_motion_channels_stepped<S: Scalar>(
    bundle: &ModelBundle<S>,
    features: &Array2<S>,
    window: usize,
    step: usize,
) -> Result<Array2<S>> {
    let t_len = features.nrows();
    if t_len < window {
        return Err(Error::InputTooShort(format!(
            "audio yields {t_len} feature frames, below the {window}-frame window"
        )));
    }
    if t_len == window {
        return bundle.generate(features);
    }
    if step == 0 || step > window {
        return Err(Error::InvalidConfig(format!(
            "chunk step must be in 1..={window}, got {step}"
        )));
    }
    let mut starts: Vec<usize> = (0..).map(|k| k * step).take_while(|s| s + window <= t_len).collect();
    if starts.last().map(|&s| s + window) != Some(t_len) {
        starts.push(t_len - window);
    }
    let c_out = bundle.config.c_motion;
    let mut out = Array2::zeros((t_len, c_out));
    let mut filled = 0usize; // frames finalized so far
    for &s in &starts {
        let chunk = bundle.generate(&features.slice(ndarray::s![s..s + window, ..]).to_owned())?;
        if filled > s {
            // cross-fade over the already-filled overlap [s, filled)
            let overlap = filled - s;
            for g in s..filled {
                let alpha = S::from_f64c((g - s) as f64 / overlap as f64);
                for c in 0..c_out {
                    out[[g, c]] =
                        (S::one() - alpha) * out[[g, c]] + alpha * chunk[[g - s, c]];
                }
            }
        }
        for g in filled.max(s)..s + window {
            for c in 0..c_out {
                out[[g, c]] = chunk[[g - s, c]];
            }
        }
        filled = s + window;
    }
    Ok(out)
}

/// Fixed similarity transform from normalized skeleton coordinates into a
/// square canvas: the neck origin maps to (w/2, h * 0.35), one shoulder
/// width maps to a quarter of the canvas height.
pub fn to_canvas<S: Scalar>(channels: &Array2<S>, canvas_w: u32, canvas_h: u32) -> Array2<S> {
    let scale = canvas_h as f64 / 4.0;
    let cx = canvas_w as f64 / 2.0;
    let cy = canvas_h as f64 * 0.35;
    let mut out = channels.clone();
    for mut row in out.rows_mut() {
        for j in 0..N_JOINTS {
            row[2 * j] = S::from_f64c(row[2 * j].to_f64c() * scale + cx);
            row[2 * j + 1] = S::from_f64c(row[2 * j + 1].to_f64c() * scale + cy);
        }
    }
    out
}

/// Full-length generation: features -> chunked generate -> canvas mapping.
pub fn generate_motion<S: Scalar>(
    bundle: &ModelBundle<S>,
    features: &AudioFeatureSequence<S>,
    window: usize,
    canvas_w: u32,
    canvas_h: u32,
) -> Result<MotionSequence<S>> {
    if bundle.stage != StageTag::Generator {
        return Err(Error::InvalidConfig(
            "motion generation requires a stage-\"generator\" checkpoint".into(),
        ));
    }
    let channels = generate_motion_channels(bundle, &features.frames, window)?;
    let canvas = to_canvas(&channels, canvas_w, canvas_h);
    MotionSequence::from_channels(&canvas, features.fps)
}

/// Per-joint, per-axis centered moving average with edge replication.
/// `window` must be odd; window = 1 is the identity.
pub fn smooth_motion<S: Scalar>(m: &MotionSequence<S>, window: usize) -> Result<MotionSequence<S>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidConfig(format!(
            "smoothing window must be odd and >= 1, got {window}"
        )));
    }
    if window == 1 {
        return Ok(m.clone());
    }
    let t_len = m.len();
    let half = (window / 2) as isize;
    let wn = S::from_f64c(window as f64);
    let mut frames = Array3::zeros((t_len, N_JOINTS, 2));
    for t in 0..t_len as isize {
        for j in 0..N_JOINTS {
            for a in 0..2 {
                let mut acc = S::zero();
                for d in -half..=half {
                    let src = (t + d).clamp(0, t_len as isize - 1) as usize;
                    acc += m.frames[[src, j, a]];
                }
                frames[[t as usize, j, a]] = acc / wn;
            }
        }
    }
    let mut out = MotionSequence::new(frames, m.fps)?;
    out.joint_names = m.joint_names.clone();
    Ok(out)
}

/// Slide aligned (music, motion) windows and average the correspondence
/// probabilities. Motion is expected in normalized channel layout.
pub fn sync_score<S: Scalar>(
    bundle: &ModelBundle<S>,
    features: &Array2<S>,
    motion_channels: &Array2<S>,
    window: usize,
    stride: usize,
) -> Result<(f64, Vec<f64>)> {
    if bundle.stage != StageTag::Amc {
        return Err(Error::InvalidConfig(
            "sync scoring requires a stage-\"amc\" checkpoint".into(),
        ));
    }
    let t_len = features.nrows().min(motion_channels.nrows());
    if t_len < window {
        return Err(Error::InputTooShort(format!(
            "{t_len} frames is below the {window}-frame scoring window"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidConfig("stride must be positive".into()));
    }
    let mut scores = Vec::new();
    let mut s = 0usize;
    while s + window <= t_len {
        let x = features.slice(ndarray::s![s..s + window, ..]).to_owned();
        let y = motion_channels.slice(ndarray::s![s..s + window, ..]).to_owned();
        scores.push(bundle.amc_forward(&x, &y)?.to_f64c());
        s += stride;
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok((mean, scores))
}
