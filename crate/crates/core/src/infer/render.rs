//! Skeleton frame rendering: joints as colored discs, bones as line
//! segments, one PNG per frame with zero-padded indices.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::motion::{MotionSequence, BONES, N_JOINTS};
use crate::{Result, Scalar};

const JOINT_RADIUS: i32 = 4;
const BONE_COLOR: Rgb<u8> = Rgb([220, 220, 220]);
const BACKGROUND: Rgb<u8> = Rgb([16, 16, 16]);

/// Fixed per-joint palette.
pub const JOINT_COLORS: [[u8; 3]; N_JOINTS] = [
    [255, 80, 80],   // neck
    [80, 200, 255],  // left_eye
    [80, 120, 255],  // right_eye
    [60, 255, 200],  // left_ear
    [60, 200, 160],  // right_ear
    [255, 200, 60],  // left_shoulder
    [255, 140, 40],  // right_shoulder
    [200, 255, 60],  // left_elbow
    [140, 255, 40],  // right_elbow
    [255, 60, 200],  // left_wrist
    [255, 40, 140],  // right_wrist
    [160, 120, 255], // left_hip
    [120, 80, 255],  // right_hip
];

/// Similarity transform fitting the whole sequence's bounding box into 90%
/// of the canvas, centered.
pub struct FitTransform {
    pub scale: f64,
    pub offset_x: f64,
    pub offset_y: f64,
}

pub fn fit_transform<S: Scalar>(m: &MotionSequence<S>, w: u32, h: u32) -> FitTransform {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for v in m.frames.iter().enumerate() {
        let (idx, val) = v;
        let val = val.to_f64c();
        if idx % 2 == 0 {
            min_x = min_x.min(val);
            max_x = max_x.max(val);
        } else {
            min_y = min_y.min(val);
            max_y = max_y.max(val);
        }
    }
    let span_x = (max_x - min_x).max(1e-9);
    let span_y = (max_y - min_y).max(1e-9);
    let scale = (0.9 * w as f64 / span_x).min(0.9 * h as f64 / span_y);
    let offset_x = w as f64 / 2.0 - scale * (min_x + max_x) / 2.0;
    let offset_y = h as f64 / 2.0 - scale * (min_y + max_y) / 2.0;
    FitTransform { scale, offset_x, offset_y }
}

impl FitTransform {
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.scale * x + self.offset_x, self.scale * y + self.offset_y)
    }
}

fn draw_line(img: &mut RgbImage, x0: f64, y0: f64, x1: f64, y1: f64, color: Rgb<u8>) {
    let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
    for i in 0..=steps {
        let a = i as f64 / steps as f64;
        let x = (x0 + a * (x1 - x0)).round() as i64;
        let y = (y0 + a * (y1 - y0)).round() as i64;
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
    }
}

fn draw_disc(img: &mut RgbImage, cx: f64, cy: f64, r: i32, color: Rgb<u8>) {
    let (cxi, cyi) = (cx.round() as i64, cy.round() as i64);
    for dy in -r as i64..=r as i64 {
        for dx in -r as i64..=r as i64 {
            if dx * dx + dy * dy > (r as i64) * (r as i64) {
                continue;
            }
            let (x, y) = (cxi + dx, cyi + dy);
            if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
}

/// Render one PNG per frame into `out_dir` as frame_000000.png, ... The
/// auto-fit transform is computed once over the whole sequence, so frames
/// share a stable coordinate frame. Output is deterministic.
pub fn render_skeleton<S: Scalar>(
    m: &MotionSequence<S>,
    canvas_w: u32,
    canvas_h: u32,
    out_dir: &Path,
) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let fit = fit_transform(m, canvas_w, canvas_h);
    let mut paths = Vec::with_capacity(m.len());
    for t in 0..m.len() {
        let mut img = RgbImage::from_pixel(canvas_w, canvas_h, BACKGROUND);
        let joint = |j: usize| {
            fit.apply(
                m.frames[[t, j, 0]].to_f64c(),
                m.frames[[t, j, 1]].to_f64c(),
            )
        };
        for &(a, b) in &BONES {
            let (x0, y0) = joint(a);
            let (x1, y1) = joint(b);
            draw_line(&mut img, x0, y0, x1, y1, BONE_COLOR);
        }
        for j in 0..N_JOINTS {
            let (x, y) = joint(j);
            draw_disc(&mut img, x, y, JOINT_RADIUS, Rgb(JOINT_COLORS[j]));
        }
        let path = out_dir.join(format!("frame_{t:06}.png"));
        img.save(&path)
            .map_err(|e| crate::Error::Format(format!("png encode: {e}")))?;
        paths.push(path);
    }
    Ok(paths)
}
