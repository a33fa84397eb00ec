//! Synthetic beat-locked dataset: accented click-train audio paired with a
//! skeleton whose right wrist bounces in exact phase with the clicks. Serves
//! as the desk-scale ground truth for the synchronization claims.

use ndarray::Array3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::{MotionSequence, N_JOINTS};
use crate::audio::Waveform;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone)]
pub struct SyntheticClip<S> {
    pub audio: Waveform<S>,
    pub motion: MotionSequence<S>,
    pub bpm: f64,
}

/// Neutral pose in normalized coordinates: neck at the origin, shoulder
/// width 1, image convention (y grows downward).
const BASE_POSE: [(f64, f64); N_JOINTS] = [
    (0.0, 0.0),    // neck
    (-0.15, -0.45), // left_eye
    (0.15, -0.45),  // right_eye
    (-0.3, -0.4),   // left_ear
    (0.3, -0.4),    // right_ear
    (-0.5, 0.0),    // left_shoulder
    (0.5, 0.0),     // right_shoulder
    (-0.75, 0.45),  // left_elbow
    (0.75, 0.45),   // right_elbow
    (-0.85, 0.15),  // left_wrist
    (0.85, 0.15),   // right_wrist
    (-0.35, 1.2),   // left_hip
    (0.35, 1.2),    // right_hip
];

/// Per-joint vertical oscillation gain relative to the right wrist.
const JOINT_GAIN: [f64; N_JOINTS] = [
    0.03, 0.03, 0.03, 0.03, 0.03, // head and neck bob slightly
    0.05, 0.08, // shoulders
    0.15, 0.45, // elbows follow
    0.12, 1.0,  // wrists; right wrist carries the beat
    0.0, 0.0,   // hips stay put
];

/// Beat-phase waveform: a parabola with a cusp at the beat, so the position
/// extremum and the peak |velocity| both sit on the click.
fn beat_shape(u: f64) -> f64 {
    let v = 2.0 * u - 1.0;
    v * v
}

fn click_burst<S: Scalar>(samples: &mut [S], start: usize, amp: f64, sr: u32) {
    let len = 128.min(samples.len().saturating_sub(start));
    let freq = 2000.0;
    for i in 0..len {
        let env = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos());
        let v = amp * env * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin();
        samples[start + i] = samples[start + i] + S::from_f64c(v);
    }
}

/// One clip: click train with an accent every 4th click plus low-level
/// noise, and a phase-locked skeleton at `fps`.
pub fn make_synthetic_clip<S: Scalar>(
    duration_s: f64,
    bpm: f64,
    sample_rate: u32,
    fps: f64,
    rng: &mut impl Rng,
) -> Result<SyntheticClip<S>> {
    let n_samples = (duration_s * sample_rate as f64).round() as usize;
    let mut samples: Vec<S> = (0..n_samples)
        .map(|_| S::from_f64c(rng.random_range(-0.01..0.01)))
        .collect();
    let beat_period = 60.0 / bpm;
    let mut k = 0usize;
    loop {
        let t = k as f64 * beat_period;
        let s = (t * sample_rate as f64).round() as usize;
        if s >= n_samples {
            break;
        }
        let amp = if k % 4 == 0 { 0.95 } else { 0.6 };
        click_burst(&mut samples, s, amp, sample_rate);
        k += 1;
    }
    let audio = Waveform::new(samples, sample_rate)?;

    let t_frames = (duration_s * fps).round() as usize;
    let mut frames = Array3::zeros((t_frames, N_JOINTS, 2));
    for t in 0..t_frames {
        let time = t as f64 / fps;
        let beats = time / beat_period;
        let beat_idx = beats.floor() as i64;
        let u = beats - beats.floor();
        // accents land on every 4th beat interval
        let amp = if beat_idx.rem_euclid(4) == 0 { 0.45 } else { 0.3 };
        let lift = amp * (1.0 - beat_shape(u)); // 0 at the beat, max mid-swing
        for j in 0..N_JOINTS {
            let (bx, by) = BASE_POSE[j];
            frames[[t, j, 0]] = S::from_f64c(bx);
            frames[[t, j, 1]] = S::from_f64c(by - JOINT_GAIN[j] * lift);
        }
    }
    let motion = MotionSequence::new(frames, fps)?;
    Ok(SyntheticClip { audio, motion, bpm })
}

/// A seeded set of clips with BPM drawn uniformly from `bpm_range`.
pub fn make_synthetic_dataset<S: Scalar>(
    n_clips: usize,
    duration_s: f64,
    bpm_range: (f64, f64),
    seed: u64,
    sample_rate: u32,
    fps: f64,
) -> Result<Vec<SyntheticClip<S>>> {
    if duration_s < 10.0 {
        return Err(Error::InvalidConfig(format!(
            "synthetic clips must be at least 10 s, got {duration_s}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_clips)
        .map(|_| {
            let bpm = rng.random_range(bpm_range.0..=bpm_range.1);
            make_synthetic_clip(duration_s, bpm, sample_rate, fps, &mut rng)
        })
        .collect()
}
