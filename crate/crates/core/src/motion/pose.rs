//! COCO-17 pose ingestion and export.
//!
//! Input: per-frame 17-keypoint detections with confidences, as produced by
//! common pose estimators. Keypoints below the confidence threshold are
//! linearly interpolated in time from the nearest confident neighbors; gaps
//! touching a sequence edge hold the nearest confident value.

use std::path::Path;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::{MotionSequence, N_JOINTS, NECK};
use crate::{Error, Result, Scalar};

pub const CONFIDENCE_THRESHOLD: f64 = 0.3;
pub const N_COCO: usize = 17;

/// COCO keypoint index feeding each of our joints; `None` for the derived
/// neck.
const COCO_SOURCE: [Option<usize>; N_JOINTS] = [
    None,     // neck = midpoint of shoulders
    Some(1),  // left_eye
    Some(2),  // right_eye
    Some(3),  // left_ear
    Some(4),  // right_ear
    Some(5),  // left_shoulder
    Some(6),  // right_shoulder
    Some(7),  // left_elbow
    Some(8),  // right_elbow
    Some(9),  // left_wrist
    Some(10), // right_wrist
    Some(11), // left_hip
    Some(12), // right_hip
];

#[derive(Debug, Serialize, Deserialize)]
pub struct PoseFile {
    /// frames[t][k] = [x, y, confidence] for COCO keypoint k.
    pub frames: Vec<Vec<[f64; 3]>>,
}

/// Fill low-confidence samples of one scalar track by linear interpolation
/// between confident neighbors; edge gaps hold the nearest confident value.
/// Errors when the track has no confident sample at all.
fn fill_track(values: &mut [f64], ok: &[bool]) -> Result<()> {
    let n = values.len();
    let first = ok.iter().position(|&b| b);
    let first = match first {
        Some(f) => f,
        None => {
            return Err(Error::RejectedSequence(
                "keypoint track has no confident detection".into(),
            ))
        }
    };
    let last = ok.iter().rposition(|&b| b).unwrap();
    for t in 0..first {
        values[t] = values[first];
    }
    for t in last + 1..n {
        values[t] = values[last];
    }
    let mut t = first;
    while t < last {
        if ok[t + 1] {
            t += 1;
            continue;
        }
        // gap (t, next_ok)
        let next = (t + 1..=last).find(|&u| ok[u]).unwrap();
        for u in t + 1..next {
            let a = (u - t) as f64 / (next - t) as f64;
            values[u] = values[t] * (1.0 - a) + values[next] * a;
        }
        t = next;
    }
    Ok(())
}

/// Map COCO-17 detections to the 13-joint upper-body sequence.
pub fn ingest_pose<S: Scalar>(pose: &PoseFile, fps: f64) -> Result<MotionSequence<S>> {
    let t_len = pose.frames.len();
    if t_len == 0 {
        return Err(Error::RejectedSequence("pose file has no frames".into()));
    }
    for (t, f) in pose.frames.iter().enumerate() {
        if f.len() != N_COCO {
            return Err(Error::Format(format!(
                "frame {t} has {} keypoints, expected {N_COCO}",
                f.len()
            )));
        }
    }
    // interpolate each COCO keypoint track independently
    let mut xs = vec![vec![0.0f64; t_len]; N_COCO];
    let mut ys = vec![vec![0.0f64; t_len]; N_COCO];
    let mut ok = vec![vec![false; t_len]; N_COCO];
    for (t, f) in pose.frames.iter().enumerate() {
        for k in 0..N_COCO {
            xs[k][t] = f[k][0];
            ys[k][t] = f[k][1];
            ok[k][t] = f[k][2] >= CONFIDENCE_THRESHOLD;
        }
    }
    for k in 0..N_COCO {
        // lower-body tracks we never read may legitimately be all-missing
        if COCO_SOURCE.iter().flatten().any(|&src| src == k) {
            fill_track(&mut xs[k], &ok[k])?;
            fill_track(&mut ys[k], &ok[k])?;
        }
    }
    let mut frames = Array3::zeros((t_len, N_JOINTS, 2));
    for t in 0..t_len {
        for (j, src) in COCO_SOURCE.iter().enumerate() {
            let (x, y) = match src {
                Some(k) => (xs[*k][t], ys[*k][t]),
                None => (
                    0.5 * (xs[5][t] + xs[6][t]),
                    0.5 * (ys[5][t] + ys[6][t]),
                ),
            };
            frames[[t, j, 0]] = S::from_f64c(x);
            frames[[t, j, 1]] = S::from_f64c(y);
        }
    }
    MotionSequence::new(frames, fps)
}

pub fn ingest_pose_json<S: Scalar>(path: &Path, fps: f64) -> Result<MotionSequence<S>> {
    let text = std::fs::read_to_string(path)?;
    let pose: PoseFile = serde_json::from_str(&text)?;
    ingest_pose(&pose, fps)
}

/// Fixed standing-pose offsets, relative to the neck and in shoulder-width
/// units, for the COCO joints our representation does not carry.
const LEG_TEMPLATE: [(usize, f64, f64); 4] = [
    (13, -0.35, 2.2), // left_knee
    (14, 0.35, 2.2),  // right_knee
    (15, -0.35, 3.2), // left_ankle
    (16, 0.35, 3.2),  // right_ankle
];

/// Export a motion sequence as per-frame COCO-17 keypoints (inverse of the
/// ingestion mapping). The nose is placed at the eye midpoint; legs follow a
/// fixed standing template scaled by the sequence's median shoulder width.
pub fn export_for_pose_transfer<S: Scalar>(m: &MotionSequence<S>, path: &Path) -> Result<()> {
    let width = super::median_shoulder_width(m).max(1e-9);
    let mut frames = Vec::with_capacity(m.len());
    for t in 0..m.len() {
        let get = |j: usize| (m.frames[[t, j, 0]].to_f64c(), m.frames[[t, j, 1]].to_f64c());
        let mut kp = vec![[0.0f64; 3]; super::pose::N_COCO];
        for (j, src) in COCO_SOURCE.iter().enumerate() {
            if let Some(k) = src {
                let (x, y) = get(j);
                kp[*k] = [x, y, 1.0];
            }
        }
        // nose: eye midpoint
        let (lx, ly) = get(1);
        let (rx, ry) = get(2);
        kp[0] = [0.5 * (lx + rx), 0.5 * (ly + ry), 1.0];
        let (nx, ny) = get(NECK);
        for (k, dx, dy) in LEG_TEMPLATE {
            kp[k] = [nx + dx * width, ny + dy * width, 1.0];
        }
        frames.push(kp);
    }
    let pose = PoseFile { frames };
    std::fs::write(path, serde_json::to_string(&pose)?)?;
    Ok(())
}
