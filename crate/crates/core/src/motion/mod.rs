//! Conductor motion: the 13-joint upper-body representation, normalization,
//! scale augmentation, pose ingestion, pair sampling and the synthetic
//! beat-locked dataset.

pub mod dataset;
pub mod json;
pub mod pose;
pub mod synth;

pub use dataset::{sample_pair, ClipPair, DatasetManifest, LoadedDataset, ManifestEntry};

use ndarray::{Array2, Array3};
use rand::Rng;

use crate::{Error, Result, Scalar};

/// Number of joints in the upper-body set.
pub const N_JOINTS: usize = 13;

/// Upper-body joint set. The neck is a derived joint (midpoint of the
/// shoulders); lower-body COCO keypoints are discarded.
pub const JOINT_NAMES: [&str; N_JOINTS] = [
    "neck",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
];

pub const NECK: usize = 0;
pub const LEFT_SHOULDER: usize = 5;
pub const RIGHT_SHOULDER: usize = 6;
pub const RIGHT_WRIST: usize = 10;

/// The 12 bones of the skeleton tree, as joint index pairs.
pub const BONES: [(usize, usize); 12] = [
    (0, 5),   // neck - left shoulder
    (0, 6),   // neck - right shoulder
    (5, 7),   // left shoulder - elbow
    (7, 9),   // left elbow - wrist
    (6, 8),   // right shoulder - elbow
    (8, 10),  // right elbow - wrist
    (0, 11),  // neck - left hip
    (0, 12),  // neck - right hip
    (0, 1),   // neck - left eye
    (0, 2),   // neck - right eye
    (1, 3),   // left eye - ear
    (2, 4),   // right eye - ear
];

/// T x J x 2 keypoint trajectory in image-plane coordinates (y grows down).
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence<S> {
    pub frames: Array3<S>,
    pub fps: f64,
    pub joint_names: Vec<String>,
}

impl<S: Scalar> MotionSequence<S> {
    pub fn new(frames: Array3<S>, fps: f64) -> Result<Self> {
        if frames.shape()[1] != N_JOINTS || frames.shape()[2] != 2 {
            return Err(Error::ShapeMismatch(format!(
                "motion frames must be T x {N_JOINTS} x 2, got {:?}",
                frames.shape()
            )));
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("motion contains non-finite coordinates".into()));
        }
        Ok(MotionSequence {
            frames,
            fps,
            joint_names: JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.frames.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flatten to (T x 2J) channel layout for the networks: joint-major,
    /// x then y per joint.
    pub fn to_channels(&self) -> Array2<S> {
        let t = self.len();
        let mut out = Array2::zeros((t, 2 * N_JOINTS));
        for ti in 0..t {
            for j in 0..N_JOINTS {
                out[[ti, 2 * j]] = self.frames[[ti, j, 0]];
                out[[ti, 2 * j + 1]] = self.frames[[ti, j, 1]];
            }
        }
        out
    }

    /// Inverse of [`to_channels`].
    pub fn from_channels(ch: &Array2<S>, fps: f64) -> Result<Self> {
        if ch.ncols() != 2 * N_JOINTS {
            return Err(Error::ShapeMismatch(format!(
                "expected {} channels, got {}",
                2 * N_JOINTS,
                ch.ncols()
            )));
        }
        let t = ch.nrows();
        let mut frames = Array3::zeros((t, N_JOINTS, 2));
        for ti in 0..t {
            for j in 0..N_JOINTS {
                frames[[ti, j, 0]] = ch[[ti, 2 * j]];
                frames[[ti, j, 1]] = ch[[ti, 2 * j + 1]];
            }
        }
        MotionSequence::new(frames, fps)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median shoulder width of a sequence, in its own coordinates.
pub fn median_shoulder_width<S: Scalar>(m: &MotionSequence<S>) -> f64 {
    let mut widths: Vec<f64> = (0..m.len())
        .map(|t| {
            let dx = (m.frames[[t, LEFT_SHOULDER, 0]] - m.frames[[t, RIGHT_SHOULDER, 0]]).to_f64c();
            let dy = (m.frames[[t, LEFT_SHOULDER, 1]] - m.frames[[t, RIGHT_SHOULDER, 1]]).to_f64c();
            (dx * dx + dy * dy).sqrt()
        })
        .collect();
    median(&mut widths)
}

/// Translate the median neck position to the origin and divide by the median
/// shoulder width. Invariant to global translation and uniform scaling of
/// the input; idempotent.
pub fn normalize_motion<S: Scalar>(m: &MotionSequence<S>) -> Result<MotionSequence<S>> {
    if m.is_empty() {
        return Err(Error::DegeneratePose("empty motion sequence".into()));
    }
    let width = median_shoulder_width(m);
    if width < 1e-9 {
        return Err(Error::DegeneratePose(format!(
            "median shoulder width {width} is effectively zero"
        )));
    }
    let mut neck_x: Vec<f64> = (0..m.len()).map(|t| m.frames[[t, NECK, 0]].to_f64c()).collect();
    let mut neck_y: Vec<f64> = (0..m.len()).map(|t| m.frames[[t, NECK, 1]].to_f64c()).collect();
    let cx = median(&mut neck_x);
    let cy = median(&mut neck_y);
    let mut frames = m.frames.clone();
    for t in 0..m.len() {
        for j in 0..N_JOINTS {
            frames[[t, j, 0]] = S::from_f64c((frames[[t, j, 0]].to_f64c() - cx) / width);
            frames[[t, j, 1]] = S::from_f64c((frames[[t, j, 1]].to_f64c() - cy) / width);
        }
    }
    MotionSequence::new(frames, m.fps)
}

/// Multiply all coordinates of a (W x 2J) motion window by one factor drawn
/// uniformly from `range`; returns the factor.
pub fn random_scale<S: Scalar>(
    window: &Array2<S>,
    rng: &mut impl Rng,
    range: (f64, f64),
) -> (Array2<S>, f64) {
    let s = if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    };
    (window.mapv(|v| v * S::from_f64c(s)), s)
}
