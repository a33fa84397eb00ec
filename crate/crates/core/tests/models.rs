//! Forward contracts of the five networks and checkpoint round-tripping.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;

use virtual_conductor::models::{
    load_checkpoint, save_checkpoint, CheckpointExtra, ModelBundle, ModelConfig, StageTag,
};
use virtual_conductor::nn::{Adam, Net};

fn small_config() -> ModelConfig {
    ModelConfig {
        c_audio: 5,
        c_motion: 6,
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
fn encoders_preserve_time_axis_and_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = ModelConfig::default();
    let bundle = ModelBundle::<f64>::new(cfg.clone(), &mut rng);
    let x = rand_mat(&mut rng, 60, cfg.c_audio);
    let y = rand_mat(&mut rng, 60, cfg.c_motion);
    let fx = bundle.encode_music(&x).unwrap();
    assert_eq!(fx.dim(), (60, cfg.d_feat));
    assert!(fx.iter().all(|v| v.is_finite()));
    assert_eq!(fx, bundle.encode_music(&x).unwrap());
    let fy = bundle.encode_motion(&y).unwrap();
    assert_eq!(fy.dim(), (60, cfg.d_feat));
    assert_eq!(fy, bundle.encode_motion(&y).unwrap());

    // channel mismatch
    assert!(bundle.encode_music(&y).is_err());
    assert!(bundle.encode_motion(&x).is_err());
}

#[test]
fn zeroed_final_layer_silences_encoder_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = small_config();
    let mut bundle = ModelBundle::<f64>::new(cfg.clone(), &mut rng);
    let last = bundle.music_enc.layers.last_mut().unwrap();
    last.w.fill(0.0);
    last.b.fill(0.0);
    let x = rand_mat(&mut rng, 20, cfg.c_audio);
    assert!(bundle.encode_music(&x).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn amc_forward_stays_in_unit_interval_with_closed_form_extremes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = small_config();
    let mut bundle = ModelBundle::<f64>::new(cfg.clone(), &mut rng);
    let x = rand_mat(&mut rng, 20, cfg.c_audio);
    let y = rand_mat(&mut rng, 20, cfg.c_motion);
    let p = bundle.amc_forward(&x, &y).unwrap();
    assert!(p > 0.0 && p < 1.0);

    // mismatched window lengths
    let y_short = rand_mat(&mut rng, 10, cfg.c_motion);
    assert!(bundle.amc_forward(&x, &y_short).is_err());

    // zero fuse output layer: p = sigmoid(0) = 0.5
    bundle.fuse.l2.w.fill(0.0);
    bundle.fuse.l2.b.fill(0.0);
    assert_eq!(bundle.amc_forward(&x, &y).unwrap(), 0.5);

    // bias +10, zero weights: p = sigmoid(10)
    bundle.fuse.l2.b.fill(10.0);
    let p = bundle.amc_forward(&x, &y).unwrap();
    assert!((p - 0.9999546021312976).abs() < 1e-12);
}

#[test]
fn amc_forward_distinguishes_its_two_streams() {
    // c_audio == c_motion so the swapped call typechecks; outputs must differ
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = ModelConfig {
        c_audio: 6,
        c_motion: 6,
        ..small_config()
    };
    let bundle = ModelBundle::<f64>::new(cfg, &mut rng);
    let x = rand_mat(&mut rng, 20, 6);
    let y = rand_mat(&mut rng, 20, 6);
    let p_xy = bundle.amc_forward(&x, &y).unwrap();
    let p_yx = bundle.amc_forward(&y, &x).unwrap();
    assert!((p_xy - p_yx).abs() > 1e-9);
}

#[test]
fn generator_shape_determinism_and_short_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = small_config();
    let mut bundle = ModelBundle::<f64>::new(cfg.clone(), &mut rng);
    let x = rand_mat(&mut rng, 60, cfg.c_audio);
    let y = bundle.generate(&x).unwrap();
    assert_eq!(y.dim(), (60, cfg.c_motion));
    assert!(y.iter().all(|v| v.is_finite()));
    assert_eq!(y, bundle.generate(&x).unwrap());

    let too_short = rand_mat(&mut rng, bundle.min_gen_input() - 1, cfg.c_audio);
    assert!(bundle.generate(&too_short).is_err());

    let last = bundle.gen_head.layers.last_mut().unwrap();
    last.w.fill(0.0);
    last.b.fill(0.0);
    assert!(bundle.generate(&x).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn critic_scores_are_scalar_deterministic_and_bias_at_zero_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = small_config();
    let mut bundle = ModelBundle::<f64>::new(cfg.clone(), &mut rng);
    let y = rand_mat(&mut rng, 20, cfg.c_motion);
    let s = bundle.critic_score(&y).unwrap();
    assert!(s.is_finite());
    assert_eq!(s, bundle.critic_score(&y).unwrap());
    assert!(bundle.critic_score(&rand_mat(&mut rng, 20, 3)).is_err());

    let n = bundle.critic.num_params();
    bundle.critic.set_params_flat(&vec![0.0; n]);
    bundle.critic.head.b[0] = 0.75;
    assert_eq!(bundle.critic_score(&y).unwrap(), 0.75);
}

#[test]
fn checkpoint_round_trip_preserves_forward_behavior_and_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = small_config();
    let mut bundle = ModelBundle::<f64>::new(cfg.clone(), &mut rng);
    bundle.stage = StageTag::Generator;
    let mut adam = Adam::new(10, 1e-3);
    adam.t = 42;
    adam.m = (0..10).map(|i| i as f64 * 0.5).collect();
    adam.v = (0..10).map(|i| i as f64 * 0.25).collect();

    let dir = tempdir().unwrap();
    let path = dir.path().join("ckpt");
    let extra = CheckpointExtra {
        iter: 123,
        adam_t: vec![],
    };
    save_checkpoint(&path, &bundle, &extra, &[&adam]).unwrap();
    let (loaded, extra2, opts) = load_checkpoint::<f64>(&path).unwrap();

    assert_eq!(loaded.config, cfg);
    assert_eq!(loaded.stage, StageTag::Generator);
    assert_eq!(extra2.iter, 123);
    assert_eq!(loaded.params_flat(), bundle.params_flat());
    assert_eq!(opts.len(), 1);
    assert_eq!(opts[0].t, 42);
    assert_eq!(opts[0].m, adam.m);
    assert_eq!(opts[0].v, adam.v);

    let x = rand_mat(&mut rng, 30, cfg.c_audio);
    assert_eq!(bundle.generate(&x).unwrap(), loaded.generate(&x).unwrap());
    let y = rand_mat(&mut rng, 30, cfg.c_motion);
    assert_eq!(bundle.critic_score(&y).unwrap(), loaded.critic_score(&y).unwrap());
}

#[test]
fn checkpoint_rejects_garbage_and_truncation() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad");
    std::fs::write(&path, b"not a checkpoint at all").unwrap();
    assert!(load_checkpoint::<f64>(&path).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let bundle = ModelBundle::<f64>::new(small_config(), &mut rng);
    let good = dir.path().join("good");
    save_checkpoint(&good, &bundle, &CheckpointExtra::default(), &[]).unwrap();
    let bytes = std::fs::read(&good).unwrap();
    let cut = dir.path().join("cut");
    std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
    assert!(load_checkpoint::<f64>(&cut).is_err());
}

#[test]
fn invalid_model_configs_are_rejected() {
    let mut cfg = small_config();
    cfg.kernel = 4; // even kernels break same-padding symmetry
    assert!(cfg.validate().is_err());
    cfg.kernel = 3;
    cfg.d_feat = 0;
    assert!(cfg.validate().is_err());
}
