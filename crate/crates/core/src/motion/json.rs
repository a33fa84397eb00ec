//! Motion file format: JSON {version, fps, joint_names, frames}, coordinates
//! written with 9 significant digits so load -> save reproduces the file
//! byte for byte.

use std::path::Path;

use ndarray::Array3;
use serde::Deserialize;

use super::{MotionSequence, N_JOINTS};
use crate::{Error, Result, Scalar};

const VERSION: u32 = 1;

fn fmt9(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn motion_to_json_string<S: Scalar>(m: &MotionSequence<S>) -> String {
    let mut out = String::with_capacity(m.len() * N_JOINTS * 32);
    out.push_str(&format!(
        "{{\"version\":{VERSION},\"fps\":{},\"joint_names\":{},\"frames\":[",
        fmt9(m.fps),
        serde_json::to_string(&m.joint_names).unwrap()
    ));
    for t in 0..m.len() {
        if t > 0 {
            out.push(',');
        }
        out.push('[');
        for j in 0..N_JOINTS {
            if j > 0 {
                out.push(',');
            }
            out.push('[');
            out.push_str(&fmt9(m.frames[[t, j, 0]].to_f64c()));
            out.push(',');
            out.push_str(&fmt9(m.frames[[t, j, 1]].to_f64c()));
            out.push(']');
        }
        out.push(']');
    }
    out.push_str("]}");
    out
}

pub fn save_motion<S: Scalar>(path: &Path, m: &MotionSequence<S>) -> Result<()> {
    std::fs::write(path, motion_to_json_string(m))?;
    Ok(())
}

#[derive(Deserialize)]
struct MotionJson {
    version: u32,
    fps: f64,
    joint_names: Vec<String>,
    frames: Vec<Vec<[f64; 2]>>,
}

pub fn load_motion<S: Scalar>(path: &Path) -> Result<MotionSequence<S>> {
    let text = std::fs::read_to_string(path)?;
    let parsed: MotionJson = serde_json::from_str(&text)?;
    if parsed.version != VERSION {
        return Err(Error::Format(format!(
            "unsupported motion file version {}",
            parsed.version
        )));
    }
    if parsed.joint_names.len() != N_JOINTS {
        return Err(Error::Format(format!(
            "motion file has {} joints, expected {N_JOINTS}",
            parsed.joint_names.len()
        )));
    }
    let t_len = parsed.frames.len();
    let mut frames = Array3::zeros((t_len, N_JOINTS, 2));
    for (t, fr) in parsed.frames.iter().enumerate() {
        if fr.len() != N_JOINTS {
            return Err(Error::Format(format!("frame {t} has {} joints", fr.len())));
        }
        for (j, xy) in fr.iter().enumerate() {
            frames[[t, j, 0]] = S::from_f64c(xy[0]);
            frames[[t, j, 1]] = S::from_f64c(xy[1]);
        }
    }
    let mut m = MotionSequence::new(frames, parsed.fps)?;
    m.joint_names = parsed.joint_names;
    Ok(m)
}
