//! Chunked generation, smoothing, rendering, sync scoring and the COCO
//! export round trip.

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;

use virtual_conductor::infer::render::{fit_transform, render_skeleton, JOINT_COLORS};
use virtual_conductor::infer::{
    generate_motion_channels, smooth_motion, sync_score, to_canvas,
};
use virtual_conductor::models::{ModelBundle, ModelConfig, StageTag};
use virtual_conductor::motion::pose::{export_for_pose_transfer, ingest_pose_json};
use virtual_conductor::motion::{MotionSequence, N_JOINTS};

fn small_config() -> ModelConfig {
    ModelConfig {
        c_audio: 4,
        c_motion: 2 * N_JOINTS,
        d_feat: 8,
        n_layers: 2,
        kernel: 3,
        d_hidden: 10,
    }
}

fn rand_mat(rng: &mut impl Rng, t: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((t, c), |_| rng.random_range(-1.0..1.0))
}

#[test]
fn single_window_input_equals_direct_generate() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = small_config();
    let bundle = ModelBundle::<f64>::new(cfg.clone(), &mut rng);
    let x = rand_mat(&mut rng, 16, cfg.c_audio);
    let chunked = generate_motion_channels(&bundle, &x, 16).unwrap();
    assert_eq!(chunked, bundle.generate(&x).unwrap());
}

#[test]
fn output_length_matches_input_and_midpoint_is_averaged() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = small_config();
    let bundle = ModelBundle::<f64>::new(cfg.clone(), &mut rng);
    let w = 16usize;
    let x = rand_mat(&mut rng, 24, cfg.c_audio);
    let out = generate_motion_channels(&bundle, &x, w).unwrap();
    assert_eq!(out.nrows(), 24);

    // chunks start at 0 and 8; overlap [8,16), midpoint frame 12 blends 50/50
    let a = bundle.generate(&x.slice(ndarray::s![0..16, ..]).to_owned()).unwrap();
    let b = bundle.generate(&x.slice(ndarray::s![8..24, ..]).to_owned()).unwrap();
    for c in 0..cfg.c_motion {
        let want = 0.5 * (a[[12, c]] + b[[4, c]]);
        assert!((out[[12, c]] - want).abs() < 1e-12);
    }

    // too-short input
    assert!(generate_motion_channels(&bundle, &rand_mat(&mut rng, 10, cfg.c_audio), w).is_err());
}

#[test]
fn long_input_is_covered_without_gaps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = small_config();
    let bundle = ModelBundle::<f64>::new(cfg.clone(), &mut rng);
    for t_len in [16, 17, 24, 33, 100] {
        let x = rand_mat(&mut rng, t_len, cfg.c_audio);
        let out = generate_motion_channels(&bundle, &x, 16).unwrap();
        assert_eq!(out.nrows(), t_len);
        assert!(out.iter().all(|v| v.is_finite()));
    }
}

fn constant_motion(t: usize, v: f64) -> MotionSequence<f64> {
    let mut frames = Array3::zeros((t, N_JOINTS, 2));
    frames.fill(v);
    // keep the shoulders apart so downstream ops stay non-degenerate
    for ti in 0..t {
        frames[[ti, 5, 0]] = v - 0.5;
        frames[[ti, 6, 0]] = v + 0.5;
    }
    MotionSequence::new(frames, 30.0).unwrap()
}

#[test]
fn smoothing_identity_constant_and_step_cases() {
    let m = constant_motion(20, 0.3);
    let s1 = smooth_motion(&m, 1).unwrap();
    assert_eq!(s1.frames, m.frames);
    let s5 = smooth_motion(&m, 5).unwrap();
    assert_eq!(s5.frames, m.frames);

    assert!(smooth_motion(&m, 4).is_err());
    assert!(smooth_motion(&m, 0).is_err());

    // unit step on one coordinate: 5-tap averages 0, 0, 1/5, 2/5, 3/5, 4/5, 1...
    let mut frames = Array3::zeros((12, N_JOINTS, 2));
    for t in 6..12 {
        frames[[t, 0, 1]] = 1.0;
    }
    let m = MotionSequence::new(frames, 30.0).unwrap();
    let s = smooth_motion(&m, 5).unwrap();
    let want: [f64; 12] = [0.0, 0.0, 0.0, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.0, 1.0, 1.0];
    for (t, &w) in want.iter().enumerate() {
        assert!(
            (s.frames[[t, 0, 1]] - w).abs() < 1e-12,
            "frame {t}: {} vs {w}",
            s.frames[[t, 0, 1]]
        );
    }
}

#[test]
fn rendering_writes_one_deterministic_frame_per_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut frames = Array3::zeros((3, N_JOINTS, 2));
    for t in 0..3 {
        for j in 0..N_JOINTS {
            frames[[t, j, 0]] = rng.random_range(-1.0..1.0);
            frames[[t, j, 1]] = rng.random_range(-1.0..1.0);
        }
    }
    let m = MotionSequence::new(frames, 30.0).unwrap();
    let dir = tempdir().unwrap();
    let paths = render_skeleton(&m, 128, 128, &dir.path().join("a")).unwrap();
    assert_eq!(paths.len(), 3);
    assert!(paths[0].ends_with("frame_000000.png"));

    // all projected joints inside the canvas
    let fit = fit_transform(&m, 128, 128);
    for t in 0..3 {
        for j in 0..N_JOINTS {
            let (x, y) = fit.apply(m.frames[[t, j, 0]], m.frames[[t, j, 1]]);
            assert!(x >= 0.0 && x < 128.0 && y >= 0.0 && y < 128.0);
        }
    }

    // the pixel at a joint center carries that joint's color (discs are
    // drawn after bones)
    let img = image::open(&paths[0]).unwrap().to_rgb8();
    let (x, y) = fit.apply(m.frames[[0, 10, 0]], m.frames[[0, 10, 1]]);
    let px = img.get_pixel(x.round() as u32, y.round() as u32);
    assert_eq!(px.0, JOINT_COLORS[10]);

    // byte-identical re-render
    let paths2 = render_skeleton(&m, 128, 128, &dir.path().join("b")).unwrap();
    for (p1, p2) in paths.iter().zip(&paths2) {
        assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
    }
}

#[test]
fn sync_score_window_count_and_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = small_config();
    let bundle = ModelBundle::<f64>::new(cfg.clone(), &mut rng);
    let t_len = 100;
    let features = rand_mat(&mut rng, t_len, cfg.c_audio);
    let motion = rand_mat(&mut rng, t_len, cfg.c_motion);
    let (w, stride) = (16usize, 8usize);
    let (mean, scores) = sync_score(&bundle, &features, &motion, w, stride).unwrap();
    assert_eq!(scores.len(), (t_len - w) / stride + 1);
    assert!(mean > 0.0 && mean < 1.0);
    assert!(scores.iter().all(|s| *s > 0.0 && *s < 1.0));

    // generator-stage bundles are rejected
    let mut gen = bundle.clone();
    gen.stage = StageTag::Generator;
    assert!(sync_score(&gen, &features, &motion, w, stride).is_err());
    assert!(sync_score(&bundle, &features, &motion, 200, stride).is_err());
    assert!(sync_score(&bundle, &features, &motion, w, 0).is_err());
}

#[test]
fn canvas_transform_places_neck_origin_at_anchor() {
    let channels = Array2::<f64>::zeros((2, 2 * N_JOINTS));
    let out = to_canvas(&channels, 512, 512);
    for t in 0..2 {
        assert_eq!(out[[t, 0]], 256.0);
        assert_eq!(out[[t, 1]], 512.0 * 0.35);
    }
}

#[test]
fn pose_export_round_trips_and_carries_template_legs() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut frames = Array3::zeros((8, N_JOINTS, 2));
    for t in 0..8 {
        for j in 0..N_JOINTS {
            frames[[t, j, 0]] = rng.random_range(-1.0..1.0) + j as f64 * 0.1;
            frames[[t, j, 1]] = rng.random_range(-1.0..1.0);
        }
    }
    let m = MotionSequence::new(frames, 30.0).unwrap();
    let dir = tempdir().unwrap();
    let path = dir.path().join("pose.json");
    export_for_pose_transfer(&m, &path).unwrap();

    let parsed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let json_frames = parsed["frames"].as_array().unwrap();
    assert_eq!(json_frames.len(), 8);
    for f in json_frames {
        assert_eq!(f.as_array().unwrap().len(), 17);
    }
    // legs come from a fixed template hung off the neck: constant offset per frame
    for k in 13..17 {
        let off = |t: usize, ax: usize| {
            json_frames[t][k][ax].as_f64().unwrap() - m.frames[[t, 0, ax]]
        };
        let (dx0, dy0) = (off(0, 0), off(0, 1));
        for t in 1..8 {
            assert!((off(t, 0) - dx0).abs() < 1e-12);
            assert!((off(t, 1) - dy0).abs() < 1e-12);
        }
    }

    let back = ingest_pose_json::<f64>(&path, 30.0).unwrap();
    // shared joints reproduced exactly except the neck, which re-derives to
    // the same shoulder midpoint
    for t in 0..8 {
        for j in 1..N_JOINTS {
            assert!((back.frames[[t, j, 0]] - m.frames[[t, j, 0]]).abs() < 1e-9);
            assert!((back.frames[[t, j, 1]] - m.frames[[t, j, 1]]).abs() < 1e-9);
        }
    }
}
