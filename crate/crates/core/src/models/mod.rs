//! The five networks: music encoder, motion encoder, fuse layers (together
//! the correspondence network), generator head, and Wasserstein critic.

mod checkpoint;
mod critic;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointExtra};
pub use critic::Critic;

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{mean_pool, sigmoid, ConvStack, Mlp, Net};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Audio feature channels (C).
    pub c_audio: usize,
    /// Motion channels, 2 per joint (2J).
    pub c_motion: usize,
    /// Encoder feature width; shared by both encoders.
    pub d_feat: usize,
    /// Convolution layers per temporal stack.
    pub n_layers: usize,
    /// Convolution kernel length (odd).
    pub kernel: usize,
    /// Fuse / critic hidden width.
    pub d_hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            c_audio: 24,
            c_motion: 26,
            d_feat: 32,
            n_layers: 4,
            kernel: 5,
            d_hidden: 64,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c_audio > 0
            && self.c_motion > 0
            && self.d_feat > 0
            && self.n_layers > 0
            && self.kernel % 2 == 1
            && self.d_hidden > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad model config: {self:?}")))
        }
    }
}

/// Which training stage produced a bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageTag {
    Amc,
    Generator,
}

/// All parameters of the pipeline. After stage 2 the music encoder holds the
/// fine-tuned generator front-end; the motion encoder keeps its stage-1
/// weights (it defines the perceptual feature space).
#[derive(Clone)]
pub struct ModelBundle<S> {
    pub config: ModelConfig,
    pub stage: StageTag,
    pub music_enc: ConvStack<S>,
    pub motion_enc: ConvStack<S>,
    pub fuse: Mlp<S>,
    pub gen_head: ConvStack<S>,
    pub critic: Critic<S>,
}

impl<S: Scalar> ModelBundle<S> {
    pub fn new(config: ModelConfig, rng: &mut impl Rng) -> Self {
        let c = &config;
        let music_enc = ConvStack::new(c.c_audio, c.d_feat, c.d_feat, c.n_layers, c.kernel, false, rng);
        let motion_enc =
            ConvStack::new(c.c_motion, c.d_feat, c.d_feat, c.n_layers, c.kernel, false, rng);
        let fuse = Mlp::new(2 * c.d_feat, c.d_hidden, 1, rng);
        let gen_head = ConvStack::new(c.d_feat, c.d_feat, c.c_motion, c.n_layers, c.kernel, false, rng);
        let critic = Critic::new(c.c_motion, c.d_hidden, c.n_layers, c.kernel, rng);
        ModelBundle {
            config,
            stage: StageTag::Amc,
            music_enc,
            motion_enc,
            fuse,
            gen_head,
            critic,
        }
    }

    /// Music encoder forward: (W x C) -> (W x d_feat). Stride-1 stack, the
    /// time axis is preserved.
    pub fn encode_music(&self, x: &Array2<S>) -> Result<Array2<S>> {
        if x.ncols() != self.config.c_audio {
            return Err(Error::ShapeMismatch(format!(
                "music input has {} channels, expected {}",
                x.ncols(),
                self.config.c_audio
            )));
        }
        Ok(self.music_enc.forward(x))
    }

    /// Motion encoder forward: (W x 2J) -> (W x d_feat).
    pub fn encode_motion(&self, y: &Array2<S>) -> Result<Array2<S>> {
        if y.ncols() != self.config.c_motion {
            return Err(Error::ShapeMismatch(format!(
                "motion input has {} channels, expected {}",
                y.ncols(),
                self.config.c_motion
            )));
        }
        Ok(self.motion_enc.forward(y))
    }

    /// Pooled motion feature, the representation the scale-invariance goal is
    /// stated over.
    pub fn pooled_motion_feature(&self, y: &Array2<S>) -> Result<Array1<S>> {
        Ok(mean_pool(&self.encode_motion(y)?))
    }

    /// Correspondence probability for an aligned-length (music, motion) pair.
    /// Encoder outputs are fused frame by frame and the logits averaged;
    /// output strictly inside (0,1).
    pub fn amc_forward(&self, x: &Array2<S>, y: &Array2<S>) -> Result<S> {
        if x.nrows() != y.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "window lengths differ: music {} vs motion {}",
                x.nrows(),
                y.nrows()
            )));
        }
        let fa = self.encode_music(x)?;
        let fm = self.encode_motion(y)?;
        let d = fa.ncols();
        // fuse frame by frame, then average the logits: pooling the encoder
        // outputs first would erase the temporal alignment the score is for
        let mut joint = Array1::zeros(2 * d);
        let mut logit = S::zero();
        for t in 0..fa.nrows() {
            joint.slice_mut(ndarray::s![..d]).assign(&fa.row(t));
            joint.slice_mut(ndarray::s![d..]).assign(&fm.row(t));
            logit += self.fuse.forward(&joint)[0];
        }
        logit /= S::from_f64c(fa.nrows() as f64);
        Ok(sigmoid(logit))
    }

    /// Shortest input the generator accepts (full receptive field of the
    /// front-end plus decoder head).
    pub fn min_gen_input(&self) -> usize {
        self.music_enc.receptive_field() + self.gen_head.receptive_field() - 1
    }

    /// Generator forward: audio features (T x C) -> motion channels (T x 2J).
    pub fn generate(&self, x: &Array2<S>) -> Result<Array2<S>> {
        if x.nrows() < self.min_gen_input() {
            return Err(Error::InputTooShort(format!(
                "generator needs at least {} frames, got {}",
                self.min_gen_input(),
                x.nrows()
            )));
        }
        let feat = self.encode_music(x)?;
        Ok(self.gen_head.forward(&feat))
    }

    /// Critic score for a motion window; unbounded real value.
    pub fn critic_score(&self, y: &Array2<S>) -> Result<S> {
        if y.ncols() != self.config.c_motion {
            return Err(Error::ShapeMismatch(format!(
                "critic input has {} channels, expected {}",
                y.ncols(),
                self.config.c_motion
            )));
        }
        Ok(self.critic.score(y))
    }

    /// Copy the stage-1 music encoder into the generator front-end.
    pub fn transfer_music_encoder_from(&mut self, amc: &ModelBundle<S>) {
        self.music_enc.set_params_flat(&amc.music_enc.params_flat());
        self.motion_enc.set_params_flat(&amc.motion_enc.params_flat());
        self.fuse.set_params_flat(&amc.fuse.params_flat());
    }
}

impl<S: Scalar> Net<S> for ModelBundle<S> {
    fn num_params(&self) -> usize {
        self.music_enc.num_params()
            + self.motion_enc.num_params()
            + self.fuse.num_params()
            + self.gen_head.num_params()
            + self.critic.num_params()
    }
    fn write_params(&self, out: &mut Vec<S>) {
        self.music_enc.write_params(out);
        self.motion_enc.write_params(out);
        self.fuse.write_params(out);
        self.gen_head.write_params(out);
        self.critic.write_params(out);
    }
    fn read_params(&mut self, src: &[S]) -> usize {
        let mut off = self.music_enc.read_params(src);
        off += self.motion_enc.read_params(&src[off..]);
        off += self.fuse.read_params(&src[off..]);
        off += self.gen_head.read_params(&src[off..]);
        off += self.critic.read_params(&src[off..]);
        off
    }
    fn write_grads(&self, out: &mut Vec<S>) {
        self.music_enc.write_grads(out);
        self.motion_enc.write_grads(out);
        self.fuse.write_grads(out);
        self.gen_head.write_grads(out);
        self.critic.write_grads(out);
    }
    fn zero_grads(&mut self) {
        self.music_enc.zero_grads();
        self.motion_enc.zero_grads();
        self.fuse.zero_grads();
        self.gen_head.zero_grads();
        self.critic.zero_grads();
    }
}
