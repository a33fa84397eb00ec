use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::losses::{amc_loss, amc_loss_grads};
use super::{append_metrics, AmcTrainConfig, TrainMetricsRecord};
use crate::models::{load_checkpoint, save_checkpoint, CheckpointExtra, ModelBundle, ModelConfig, StageTag};
use crate::motion::{sample_pair, LoadedDataset};
use crate::nn::{Adam, Net};
use crate::{Error, Result, Scalar};

const CKPT_INTERVAL: u64 = 100;

/// Forward caches of one correspondence pair.
pub struct AmcCache<S> {
    music: crate::nn::StackCache<S>,
    motion: crate::nn::StackCache<S>,
    mlp: Vec<crate::nn::MlpCache<S>>,
    p: S,
    window: usize,
    d_feat: usize,
}

/// Correspondence probability with caches kept for the backward pass.
pub fn amc_forward_cache<S: Scalar>(
    bundle: &ModelBundle<S>,
    x: &Array2<S>,
    y: &Array2<S>,
) -> Result<(S, AmcCache<S>)> {
    if x.nrows() != y.nrows() {
        return Err(Error::ShapeMismatch("window lengths differ".into()));
    }
    let music = bundle.music_enc.forward_cache(x);
    let motion = bundle.motion_enc.forward_cache(y);
    let fa = music.acts.last().unwrap();
    let fm = motion.acts.last().unwrap();
    let d_feat = fa.ncols();
    let mut joint = Array1::zeros(2 * d_feat);
    let mut logit = S::zero();
    let mut mlp = Vec::with_capacity(fa.nrows());
    for t in 0..fa.nrows() {
        joint.slice_mut(ndarray::s![..d_feat]).assign(&fa.row(t));
        joint.slice_mut(ndarray::s![d_feat..]).assign(&fm.row(t));
        let (z, cache) = bundle.fuse.forward_cache(&joint);
        logit += z[0];
        mlp.push(cache);
    }
    logit /= S::from_f64c(fa.nrows() as f64);
    let p = crate::nn::sigmoid(logit);
    Ok((
        p,
        AmcCache {
            music,
            motion,
            mlp,
            p,
            window: x.nrows(),
            d_feat,
        },
    ))
}

/// Accumulate gradients of `g_p * p` into the encoders and fuse layers.
pub fn amc_backward<S: Scalar>(bundle: &mut ModelBundle<S>, cache: &AmcCache<S>, g_p: S) {
    let p = cache.p;
    let d = cache.d_feat;
    let t_len = cache.window;
    // the mean over per-frame logits spreads the sigmoid gradient evenly
    let g_logit = Array1::from_elem(1, g_p * p * (S::one() - p) / S::from_f64c(t_len as f64));
    let mut g_music = Array2::zeros((t_len, d));
    let mut g_motion = Array2::zeros((t_len, d));
    for (t, mlp_cache) in cache.mlp.iter().enumerate() {
        let g_joint = bundle.fuse.backward(mlp_cache, &g_logit);
        g_music.row_mut(t).assign(&g_joint.slice(ndarray::s![..d]));
        g_motion.row_mut(t).assign(&g_joint.slice(ndarray::s![d..]));
    }
    bundle.music_enc.backward(&cache.music, &g_music);
    bundle.motion_enc.backward(&cache.motion, &g_motion);
}

fn stage1_params<S: Scalar>(bundle: &ModelBundle<S>) -> Vec<S> {
    let mut v = Vec::new();
    bundle.music_enc.write_params(&mut v);
    bundle.motion_enc.write_params(&mut v);
    bundle.fuse.write_params(&mut v);
    v
}

fn stage1_grads<S: Scalar>(bundle: &ModelBundle<S>) -> Vec<S> {
    let mut v = Vec::new();
    bundle.music_enc.write_grads(&mut v);
    bundle.motion_enc.write_grads(&mut v);
    bundle.fuse.write_grads(&mut v);
    v
}

fn set_stage1_params<S: Scalar>(bundle: &mut ModelBundle<S>, p: &[S]) {
    let mut off = bundle.music_enc.read_params(p);
    off += bundle.motion_enc.read_params(&p[off..]);
    off += bundle.fuse.read_params(&p[off..]);
    assert_eq!(off, p.len());
}

/// Stage 1: train the correspondence network on sampled positive/negative
/// pairs. Returns the stage-tagged bundle and the per-iteration loss log.
/// When `rundir` is given, metrics are appended to `metrics.jsonl`,
/// checkpoints are written, and an existing `ckpt_latest` resumes the run.
pub fn train_amc<S: Scalar>(
    data: &LoadedDataset<S>,
    model_cfg: &ModelConfig,
    cfg: &AmcTrainConfig,
    rundir: Option<&Path>,
) -> Result<(ModelBundle<S>, Vec<TrainMetricsRecord>)> {
    cfg.validate()?;
    model_cfg.validate()?;
    let train_ids = &data.manifest.split.train;
    if train_ids.is_empty() {
        return Err(Error::CannotSample("empty train split".into()));
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut bundle = ModelBundle::<S>::new(model_cfg.clone(), &mut init_rng);
    let n_params = stage1_params(&bundle).len();
    let mut adam = Adam::new(n_params, S::from_f64c(cfg.lr));
    let mut start_iter = 0u64;

    if let Some(dir) = rundir {
        std::fs::create_dir_all(dir)?;
        let latest = dir.join("ckpt_latest");
        if latest.exists() {
            let (b, extra, opts) = load_checkpoint::<S>(&latest)?;
            if b.config != *model_cfg {
                return Err(Error::InvalidConfig(
                    "resume checkpoint was trained with a different model config".into(),
                ));
            }
            bundle = b;
            start_iter = extra.iter;
            if let Some(mut o) = opts.into_iter().next() {
                o.lr = S::from_f64c(cfg.lr);
                adam = o;
            }
        }
    }

    // replay the sampling stream past completed iterations so a resumed run
    // sees the same pair sequence as an uninterrupted one
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let half = cfg.batch / 2;
    for _ in 0..start_iter {
        for i in 0..cfg.batch {
            sample_pair(data, train_ids, i < half, cfg.window, &mut rng)?;
        }
    }
    let mut records = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut best_snapshot: Option<Vec<S>> = None;

    for iter in start_iter..cfg.iterations {
        let mut p_pos = Vec::with_capacity(half);
        let mut p_neg = Vec::with_capacity(cfg.batch - half);
        let mut caches = Vec::with_capacity(cfg.batch);
        for i in 0..cfg.batch {
            let correspond = i < half;
            let pair = sample_pair(data, train_ids, correspond, cfg.window, &mut rng)?;
            let (p, cache) = amc_forward_cache(&bundle, &pair.music, &pair.motion)?;
            if correspond {
                p_pos.push(p);
            } else {
                p_neg.push(p);
            }
            caches.push((correspond, cache));
        }
        let loss = amc_loss(&p_pos, &p_neg)?;
        let loss_f = loss.to_f64c();
        if !loss_f.is_finite() {
            return Err(Error::Divergence(format!(
                "amc loss became {loss_f} at iteration {iter}"
            )));
        }
        let (gp, gn) = amc_loss_grads(&p_pos, &p_neg);
        bundle.music_enc.zero_grads();
        bundle.motion_enc.zero_grads();
        bundle.fuse.zero_grads();
        let (mut ip, mut ineg) = (0usize, 0usize);
        for (correspond, cache) in &caches {
            let g = if *correspond {
                let g = gp[ip];
                ip += 1;
                g
            } else {
                let g = gn[ineg];
                ineg += 1;
                g
            };
            amc_backward(&mut bundle, cache, g);
        }
        let mut params = stage1_params(&bundle);
        let grads = stage1_grads(&bundle);
        adam.step(&mut params, &grads);
        set_stage1_params(&mut bundle, &params);

        let rec = TrainMetricsRecord::Amc {
            iter,
            loss_amc: loss_f,
        };
        records.push(rec.clone());
        if loss_f < best_loss {
            best_loss = loss_f;
            best_snapshot = Some(bundle.params_flat());
        }
        if let Some(dir) = rundir {
            append_metrics(dir, &[rec])?;
            if (iter + 1) % CKPT_INTERVAL == 0 || iter + 1 == cfg.iterations {
                let extra = CheckpointExtra {
                    iter: iter + 1,
                    adam_t: vec![],
                };
                save_checkpoint(&dir.join("ckpt_latest"), &bundle, &extra, &[&adam])?;
                if let Some(snap) = &best_snapshot {
                    let mut best = bundle.clone();
                    best.set_params_flat(snap);
                    save_checkpoint(&dir.join("ckpt_best"), &best, &extra, &[])?;
                }
            }
        }
    }
    bundle.stage = StageTag::Amc;
    Ok((bundle, records))
}

/// Fraction of validation pairs classified correctly at threshold 0.5.
pub fn pair_accuracy<S: Scalar>(
    bundle: &ModelBundle<S>,
    data: &LoadedDataset<S>,
    ids: &[usize],
    window: usize,
    n_pairs: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let mut correct = 0usize;
    for i in 0..n_pairs {
        let correspond = i % 2 == 0;
        let pair = sample_pair(data, ids, correspond, window, rng)?;
        let p = bundle.amc_forward(&pair.music, &pair.motion)?.to_f64c();
        if (p >= 0.5) == correspond {
            correct += 1;
        }
    }
    Ok(correct as f64 / n_pairs as f64)
}
