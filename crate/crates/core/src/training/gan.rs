use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::losses::{
    batch_mean, gradient_penalty_backward, mse, perceptual_loss_with_grad, wasserstein_estimate,
};
use super::{append_metrics, GenTrainConfig, TrainMetricsRecord};
use crate::models::{
    load_checkpoint, save_checkpoint, CheckpointExtra, ModelBundle, StageTag,
};
use crate::motion::LoadedDataset;
use crate::nn::{Adam, Net};
use crate::{Error, Result, Scalar};

const CKPT_INTERVAL: u64 = 100;

/// Components of the composite generator loss.
#[derive(Debug, Clone, Copy)]
pub struct GenLossParts<S> {
    pub mse: S,
    pub per: S,
    pub adv: S,
    pub total: S,
}

/// Weighted sum lambda_mse*MSE + lambda_per*perceptual + lambda_adv*mean(D(G(x))).
/// Parts are reported unweighted; any non-finite part aborts.
pub fn generator_loss<S: Scalar>(
    mse_part: S,
    per_part: S,
    adv_part: S,
    cfg: &GenTrainConfig,
) -> Result<GenLossParts<S>> {
    let total = S::from_f64c(cfg.lambda_mse) * mse_part
        + S::from_f64c(cfg.lambda_per) * per_part
        + S::from_f64c(cfg.lambda_adv) * adv_part;
    let parts = GenLossParts {
        mse: mse_part,
        per: per_part,
        adv: adv_part,
        total,
    };
    if !(mse_part.is_finite() && per_part.is_finite() && adv_part.is_finite()) {
        return Err(Error::Divergence(format!(
            "generator loss parts not finite: mse={mse_part} per={per_part} adv={adv_part}"
        )));
    }
    Ok(parts)
}

pub struct GenTrainReport {
    pub records: Vec<TrainMetricsRecord>,
    pub critic_updates: u64,
}

/// Draw an aligned (music, motion) window without scale augmentation.
fn sample_aligned<S: Scalar>(
    data: &LoadedDataset<S>,
    ids: &[usize],
    window: usize,
    rng: &mut impl Rng,
) -> Result<(Array2<S>, Array2<S>)> {
    if ids.is_empty() || data.min_len(ids) < window {
        return Err(Error::CannotSample(
            "no entry long enough for the requested window".into(),
        ));
    }
    let id = ids[rng.random_range(0..ids.len())];
    let e = &data.entries[id];
    let start = rng.random_range(0..=e.features.nrows() - window);
    Ok((
        e.features.slice(ndarray::s![start..start + window, ..]).to_owned(),
        e.motion.slice(ndarray::s![start..start + window, ..]).to_owned(),
    ))
}

fn gen_params<S: Scalar>(bundle: &ModelBundle<S>, fine_tune_front: bool) -> Vec<S> {
    let mut v = Vec::new();
    if fine_tune_front {
        bundle.music_enc.write_params(&mut v);
    }
    bundle.gen_head.write_params(&mut v);
    v
}

fn gen_grads<S: Scalar>(bundle: &ModelBundle<S>, fine_tune_front: bool) -> Vec<S> {
    let mut v = Vec::new();
    if fine_tune_front {
        bundle.music_enc.write_grads(&mut v);
    }
    bundle.gen_head.write_grads(&mut v);
    v
}

fn set_gen_params<S: Scalar>(bundle: &mut ModelBundle<S>, p: &[S], fine_tune_front: bool) {
    let mut off = 0;
    if fine_tune_front {
        off = bundle.music_enc.read_params(p);
    }
    off += bundle.gen_head.read_params(&p[off..]);
    assert_eq!(off, p.len());
}

/// Stage 2: adversarial-perceptual generator training.
///
/// The generator front-end starts from the stage-1 music encoder (and
/// fine-tunes by default); the motion encoder is frozen and defines the
/// perceptual feature space. Each generator step is preceded by `n_critic`
/// critic updates under a gradient penalty.
///
/// Critic sampling, generator sampling and penalty interpolation draw from
/// three independent seeded streams, so the generator's parameter trajectory
/// with lambda_adv = 0 depends on the generator stream alone.
pub fn train_generator<S: Scalar>(
    data: &LoadedDataset<S>,
    amc_bundle: &ModelBundle<S>,
    cfg: &GenTrainConfig,
    rundir: Option<&Path>,
) -> Result<(ModelBundle<S>, GenTrainReport)> {
    cfg.validate()?;
    if amc_bundle.stage != StageTag::Amc {
        return Err(Error::InvalidConfig(
            "generator training requires a stage-\"amc\" checkpoint".into(),
        ));
    }
    let train_ids = &data.manifest.split.train;

    let mut bundle = amc_bundle.clone();
    bundle.stage = StageTag::Generator;
    let em_before = bundle.motion_enc.params_flat();

    let mut adam_g = Adam::new(
        gen_params(&bundle, cfg.fine_tune_front).len(),
        S::from_f64c(cfg.lr_g),
    );
    let mut adam_d = Adam::new(bundle.critic.num_params(), S::from_f64c(cfg.lr_d));
    let mut start_iter = 0u64;

    if let Some(dir) = rundir {
        std::fs::create_dir_all(dir)?;
        let latest = dir.join("ckpt_latest");
        if latest.exists() {
            let (b, extra, opts) = load_checkpoint::<S>(&latest)?;
            if b.stage != StageTag::Generator {
                return Err(Error::InvalidConfig(
                    "resume checkpoint in rundir is not a generator-stage checkpoint".into(),
                ));
            }
            bundle = b;
            start_iter = extra.iter;
            let mut it = opts.into_iter();
            if let Some(mut o) = it.next() {
                o.lr = S::from_f64c(cfg.lr_g);
                adam_g = o;
            }
            if let Some(mut o) = it.next() {
                o.lr = S::from_f64c(cfg.lr_d);
                adam_d = o;
            }
        }
    }

    let mut rng_gen = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(1));
    let mut rng_critic =
        ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(2));
    let mut rng_gp = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(3));
    // replay streams past completed iterations on resume
    for _ in 0..start_iter {
        for _ in 0..cfg.n_critic {
            for _ in 0..cfg.batch {
                sample_aligned(data, train_ids, cfg.window, &mut rng_critic)?;
                rng_gp.random_range(0.0..1.0f64);
            }
        }
        for _ in 0..cfg.batch {
            sample_aligned(data, train_ids, cfg.window, &mut rng_gen)?;
        }
    }

    let mut records = Vec::new();
    let mut critic_updates = 0u64;
    let mut best_total = f64::INFINITY;
    let mut best_snapshot: Option<Vec<S>> = None;

    for iter in start_iter..cfg.iterations {
        // ---- critic updates ----
        let mut last_gp = S::zero();
        let mut last_w = S::zero();
        for _ in 0..cfg.n_critic {
            let mut reals = Vec::with_capacity(cfg.batch);
            let mut fakes = Vec::with_capacity(cfg.batch);
            for _ in 0..cfg.batch {
                let (x, y) = sample_aligned(data, train_ids, cfg.window, &mut rng_critic)?;
                let y_fake = bundle.generate(&x)?;
                reals.push(y);
                fakes.push(y_fake);
            }
            bundle.critic.zero_grads();
            let inv_m = S::one() / S::from_f64c(cfg.batch as f64);
            let mut d_real = Vec::with_capacity(cfg.batch);
            let mut d_fake = Vec::with_capacity(cfg.batch);
            for y in &reals {
                let (s, cache) = bundle.critic.forward_cache(y);
                d_real.push(s);
                bundle.critic.backward(&cache, inv_m);
            }
            for y in &fakes {
                let (s, cache) = bundle.critic.forward_cache(y);
                d_fake.push(s);
                bundle.critic.backward(&cache, -inv_m);
            }
            let gp = gradient_penalty_backward(
                &mut bundle.critic,
                &reals,
                &fakes,
                &mut rng_gp,
                S::from_f64c(cfg.gp_weight),
            );
            let loss_d =
                super::losses::critic_loss(&d_real, &d_fake, gp, S::from_f64c(cfg.gp_weight))?;
            if !loss_d.is_finite() {
                return Err(Error::Divergence(format!(
                    "critic loss became {loss_d} at generator step {iter}"
                )));
            }
            let mut params = bundle.critic.params_flat();
            let grads = bundle.critic.grads_flat();
            adam_d.step(&mut params, &grads);
            bundle.critic.set_params_flat(&params);
            critic_updates += 1;
            last_gp = gp;
            last_w = wasserstein_estimate(&d_real, &d_fake);
        }

        // ---- generator update ----
        bundle.music_enc.zero_grads();
        bundle.gen_head.zero_grads();
        let inv_m = S::one() / S::from_f64c(cfg.batch as f64);
        let mut mse_acc = S::zero();
        let mut per_acc = S::zero();
        let mut adv_scores = Vec::with_capacity(cfg.batch);
        for _ in 0..cfg.batch {
            let (x, y) = sample_aligned(data, train_ids, cfg.window, &mut rng_gen)?;
            let front_cache = bundle.music_enc.forward_cache(&x);
            let head_cache = bundle.gen_head.forward_cache(front_cache.acts.last().unwrap());
            let y_hat = head_cache.acts.last().unwrap().clone();

            let n_el = S::from_f64c(y_hat.len() as f64);
            let mse_part = mse(&y_hat, &y);
            mse_acc += mse_part * inv_m;
            let mut g_yhat = &y_hat - &y;
            g_yhat.mapv_inplace(|v| {
                v * S::from_f64c(2.0) * S::from_f64c(cfg.lambda_mse) / (n_el) * inv_m
            });

            let (per_part, g_per) = perceptual_loss_with_grad(&bundle.motion_enc, &y_hat, &y)?;
            per_acc += per_part * inv_m;
            if cfg.lambda_per != 0.0 {
                g_yhat
                    .zip_mut_with(&g_per, |a, &b| *a = *a + S::from_f64c(cfg.lambda_per) * b * inv_m);
            }

            let (score, d_cache) = bundle.critic.forward_cache(&y_hat);
            adv_scores.push(score);
            if cfg.lambda_adv != 0.0 {
                let g_adv = bundle
                    .critic
                    .input_grad(&d_cache, S::from_f64c(cfg.lambda_adv) * inv_m);
                g_yhat.zip_mut_with(&g_adv, |a, &b| *a = *a + b);
            }

            let g_feat = bundle.gen_head.backward(&head_cache, &g_yhat);
            if cfg.fine_tune_front {
                bundle.music_enc.backward(&front_cache, &g_feat);
            }
        }
        let adv_part = batch_mean(&adv_scores);
        let parts = generator_loss(mse_acc, per_acc, adv_part, cfg)?;

        let mut params = gen_params(&bundle, cfg.fine_tune_front);
        let grads = gen_grads(&bundle, cfg.fine_tune_front);
        adam_g.step(&mut params, &grads);
        set_gen_params(&mut bundle, &params, cfg.fine_tune_front);

        let rec = TrainMetricsRecord::Gen {
            iter,
            loss_mse: parts.mse.to_f64c(),
            loss_per: parts.per.to_f64c(),
            loss_adv: parts.adv.to_f64c(),
            loss_g_total: parts.total.to_f64c(),
            w_estimate: last_w.to_f64c(),
            gp: last_gp.to_f64c(),
        };
        if !rec.is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite metrics at generator step {iter}"
            )));
        }
        records.push(rec.clone());
        let total_f = parts.total.to_f64c();
        if total_f < best_total {
            best_total = total_f;
            best_snapshot = Some(bundle.params_flat());
        }
        if let Some(dir) = rundir {
            append_metrics(dir, &[rec])?;
            if (iter + 1) % CKPT_INTERVAL == 0 || iter + 1 == cfg.iterations {
                let extra = CheckpointExtra {
                    iter: iter + 1,
                    adam_t: vec![],
                };
                save_checkpoint(&dir.join("ckpt_latest"), &bundle, &extra, &[&adam_g, &adam_d])?;
                if let Some(snap) = &best_snapshot {
                    let mut best = bundle.clone();
                    best.set_params_flat(snap);
                    save_checkpoint(&dir.join("ckpt_best"), &best, &extra, &[])?;
                }
            }
        }
    }

    debug_assert_eq!(em_before, bundle.motion_enc.params_flat());
    Ok((
        bundle,
        GenTrainReport {
            records,
            critic_updates,
        },
    ))
}
