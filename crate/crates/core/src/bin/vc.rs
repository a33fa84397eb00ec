//! Command-line front end: feature extraction, dataset synthesis, the two
//! training stages, motion generation and synchronization scoring.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use virtual_conductor::audio::{
    extract_features, read_vcf, read_wav, write_vcf, write_wav, FeatureConfig,
};
use virtual_conductor::infer::render::render_skeleton;
use virtual_conductor::infer::{
    generate_motion_channels_stepped, smooth_motion, sync_score, to_canvas,
};
use virtual_conductor::models::{load_checkpoint, ModelConfig, StageTag};
use virtual_conductor::motion::dataset::{DatasetManifest, LoadedDataset, ManifestEntry, SplitIds};
use virtual_conductor::motion::json::{load_motion, save_motion};
use virtual_conductor::motion::pose::export_for_pose_transfer;
use virtual_conductor::motion::synth::make_synthetic_dataset;
use virtual_conductor::motion::{normalize_motion, MotionSequence};
use virtual_conductor::training::{train_amc, train_generator, AmcTrainConfig, GenTrainConfig};
use virtual_conductor::{Error, Real, Result};

/// Run-level configuration; every key is optional and falls back to the
/// library defaults. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    features: FeatureConfig,
    model: ModelConfig,
    amc: AmcTrainConfig,
    gen: GenTrainConfig,
    inference: InferenceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct InferenceConfig {
    /// Generation chunk length in frames.
    window: usize,
    /// Fractional overlap between consecutive chunks.
    overlap: f64,
    /// Moving-average length for output smoothing; odd, 1 disables.
    smooth_window: usize,
    /// Square canvas side in pixels.
    canvas: u32,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            window: 60,
            overlap: 0.5,
            smooth_window: 5,
            canvas: 512,
        }
    }
}

impl RunConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text)
                    .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Ok(s) = std::env::var("VC_SEED") {
            let seed: u64 = s
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("VC_SEED must be an integer, got {s:?}")))?;
            cfg.amc.seed = seed;
            cfg.gen.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.model.validate()?;
        self.amc.validate()?;
        self.gen.validate()?;
        let inf = &self.inference;
        if inf.window == 0 || !(inf.overlap > 0.0 && inf.overlap < 1.0) || inf.canvas == 0 {
            return Err(Error::InvalidConfig(format!(
                "inference section: window and canvas must be positive, overlap in (0,1); got {inf:?}"
            )));
        }
        if inf.smooth_window == 0 || inf.smooth_window % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "inference.smooth_window must be odd, got {}",
                inf.smooth_window
            )));
        }
        Ok(())
    }

    fn chunk_step(&self) -> usize {
        let w = self.inference.window as f64;
        ((w * (1.0 - self.inference.overlap)).round() as usize).clamp(1, self.inference.window)
    }

    /// Write the effective configuration next to a run's outputs so the run
    /// is reproducible from its directory alone.
    fn echo(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::InvalidConfig(format!("config echo: {e}")))?;
        std::fs::write(dir.join("config.echo"), text)?;
        Ok(())
    }
}

#[derive(Parser)]
#[command(name = "vc", about = "Music-driven conductor motion generation", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML run configuration; omitted keys use built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Extract feature files (.vcf) from a wav file or a directory of them.
    Features {
        /// Input wav file or directory.
        input: PathBuf,
        /// Output directory for .vcf files.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Generate a synthetic beat-locked dataset with a manifest.
    Synth {
        /// Number of clips.
        #[arg(long, default_value_t = 20)]
        clips: usize,
        /// Clip duration in seconds.
        #[arg(long, default_value_t = 30.0)]
        seconds: f64,
        /// Dataset seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Stage 1: train the audio-motion correspondence network.
    TrainAmc {
        /// Dataset manifest (from `vc synth` or hand-written).
        #[arg(long)]
        manifest: PathBuf,
        /// Run directory: config.echo, metrics.jsonl, ckpt_latest, ckpt_best.
        #[arg(short, long)]
        out: PathBuf,
        /// Override the configured iteration count.
        #[arg(long)]
        iterations: Option<u64>,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Stage 2: train the generator and critic on top of a stage-1 checkpoint.
    TrainGen {
        #[arg(long)]
        manifest: PathBuf,
        /// Stage-1 checkpoint whose music encoder seeds the generator.
        #[arg(long)]
        amc_ckpt: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Override the configured generator step count.
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Generate conducting motion for an audio file.
    Generate {
        /// Input wav file.
        audio: PathBuf,
        /// Stage-2 checkpoint.
        #[arg(long)]
        gen_ckpt: PathBuf,
        /// Output directory; motion.json is always written.
        #[arg(short, long)]
        out: PathBuf,
        /// Also render one PNG per frame under frames/.
        #[arg(long)]
        frames: bool,
        /// Also write pose.json in the pose-transfer keypoint format.
        #[arg(long)]
        export_pose: bool,
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Score audio/motion synchronization with a stage-1 checkpoint.
    EvalSync {
        #[arg(long)]
        amc_ckpt: PathBuf,
        /// Feature file (.vcf).
        #[arg(long)]
        features: PathBuf,
        /// Motion file (.json).
        #[arg(long)]
        motion: PathBuf,
        /// Write {mean, window, stride, scores} JSON here as well.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Features { input, out, cfg } => cmd_features(&input, &out, cfg.config.as_deref()),
        Cmd::Synth { clips, seconds, seed, out, cfg } => {
            cmd_synth(clips, seconds, seed, &out, cfg.config.as_deref())
        }
        Cmd::TrainAmc { manifest, out, iterations, seed, cfg } => {
            cmd_train_amc(&manifest, &out, iterations, seed, cfg.config.as_deref())
        }
        Cmd::TrainGen { manifest, amc_ckpt, out, iterations, seed, cfg } => {
            cmd_train_gen(&manifest, &amc_ckpt, &out, iterations, seed, cfg.config.as_deref())
        }
        Cmd::Generate { audio, gen_ckpt, out, frames, export_pose, cfg } => {
            cmd_generate(&audio, &gen_ckpt, &out, frames, export_pose, cfg.config.as_deref())
        }
        Cmd::EvalSync { amc_ckpt, features, motion, out, cfg } => {
            cmd_eval_sync(&amc_ckpt, &features, &motion, out.as_deref(), cfg.config.as_deref())
        }
    }
}

fn wav_inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(input)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .collect();
        v.sort();
        Ok(v)
    } else {
        Ok(vec![input.to_path_buf()])
    }
}

fn cmd_features(input: &Path, out: &Path, cfg_path: Option<&Path>) -> Result<()> {
    let cfg = RunConfig::load(cfg_path)?;
    let inputs = wav_inputs(input)?;
    std::fs::create_dir_all(out)?;
    let mut warnings = 0usize;
    let mut written = 0usize;
    for p in &inputs {
        let stem = p.file_stem().unwrap_or_default().to_string_lossy();
        let result = read_wav::<Real>(p).and_then(|w| extract_features(&w, &cfg.features));
        match result {
            Ok(f) => {
                write_vcf(&out.join(format!("{stem}.vcf")), &f)?;
                written += 1;
            }
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", p.display());
                warnings += 1;
            }
        }
    }
    if inputs.is_empty() {
        eprintln!("warning: no wav files under {}", input.display());
    }
    println!("wrote {written} feature files ({warnings} skipped)");
    Ok(())
}

fn cmd_synth(
    clips: usize,
    seconds: f64,
    seed: u64,
    out: &Path,
    cfg_path: Option<&Path>,
) -> Result<()> {
    let cfg = RunConfig::load(cfg_path)?;
    let seed = std::env::var("VC_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(seed);
    let fps = cfg.features.motion_fps;
    let dataset = make_synthetic_dataset::<Real>(clips, seconds, (60.0, 180.0), seed, 22050, fps)?;
    std::fs::create_dir_all(out)?;
    cfg.echo(out)?;
    let mut entries = Vec::with_capacity(clips);
    for (i, clip) in dataset.iter().enumerate() {
        let stem = format!("clip_{i:03}");
        write_wav(&out.join(format!("{stem}.wav")), &clip.audio)?;
        let feats = extract_features(&clip.audio, &cfg.features)?;
        write_vcf(&out.join(format!("{stem}.vcf")), &feats)?;
        save_motion(&out.join(format!("{stem}.motion.json")), &clip.motion)?;
        entries.push(ManifestEntry {
            audio_feature_path: format!("{stem}.vcf").into(),
            motion_path: format!("{stem}.motion.json").into(),
            duration_s: clip.audio.duration_s(),
        });
    }
    let n_train = clips.max(1) * 4 / 5;
    let manifest = DatasetManifest {
        entries,
        split: SplitIds {
            train: (0..n_train).collect(),
            val: (n_train..clips).collect(),
        },
        seed,
    };
    manifest.save(&out.join("manifest.json"))?;
    println!("wrote {clips} clips and manifest.json to {}", out.display());
    Ok(())
}

fn load_dataset_checked(manifest: &Path, model: &ModelConfig) -> Result<LoadedDataset<Real>> {
    let data = LoadedDataset::load(manifest)?;
    if let Some(e) = data.entries.first() {
        if e.features.ncols() != model.c_audio {
            return Err(Error::InvalidConfig(format!(
                "dataset has {} audio channels but model.c_audio is {}",
                e.features.ncols(),
                model.c_audio
            )));
        }
        if e.motion.ncols() != model.c_motion {
            return Err(Error::InvalidConfig(format!(
                "dataset has {} motion channels but model.c_motion is {}",
                e.motion.ncols(),
                model.c_motion
            )));
        }
    }
    Ok(data)
}

fn cmd_train_amc(
    manifest: &Path,
    out: &Path,
    iterations: Option<u64>,
    seed: Option<u64>,
    cfg_path: Option<&Path>,
) -> Result<()> {
    let mut cfg = RunConfig::load(cfg_path)?;
    if let Some(n) = iterations {
        cfg.amc.iterations = n;
    }
    if let Some(s) = seed {
        cfg.amc.seed = s;
    }
    let data = load_dataset_checked(manifest, &cfg.model)?;
    cfg.echo(out)?;
    let (_, records) = train_amc(&data, &cfg.model, &cfg.amc, Some(out))?;
    println!(
        "trained {} iterations; run artifacts in {}",
        records.last().map(|r| r.iter() + 1).unwrap_or(0),
        out.display()
    );
    Ok(())
}

fn cmd_train_gen(
    manifest: &Path,
    amc_ckpt: &Path,
    out: &Path,
    iterations: Option<u64>,
    seed: Option<u64>,
    cfg_path: Option<&Path>,
) -> Result<()> {
    let mut cfg = RunConfig::load(cfg_path)?;
    if let Some(n) = iterations {
        cfg.gen.iterations = n;
    }
    if let Some(s) = seed {
        cfg.gen.seed = s;
    }
    let (amc_bundle, _, _) = load_checkpoint::<Real>(amc_ckpt)
        .map_err(|e| Error::Format(format!("stage-1 checkpoint {}: {e}", amc_ckpt.display())))?;
    if amc_bundle.stage != StageTag::Amc {
        return Err(Error::InvalidConfig(format!(
            "{} is not a stage-1 (amc) checkpoint",
            amc_ckpt.display()
        )));
    }
    let data = load_dataset_checked(manifest, &amc_bundle.config)?;
    cfg.model = amc_bundle.config.clone();
    cfg.echo(out)?;
    let (_, report) = train_generator(&data, &amc_bundle, &cfg.gen, Some(out))?;
    println!(
        "trained {} generator steps ({} critic updates); run artifacts in {}",
        report.records.len(),
        report.critic_updates,
        out.display()
    );
    Ok(())
}

fn cmd_generate(
    audio: &Path,
    gen_ckpt: &Path,
    out: &Path,
    frames: bool,
    export_pose: bool,
    cfg_path: Option<&Path>,
) -> Result<()> {
    let cfg = RunConfig::load(cfg_path)?;
    let (bundle, _, _) = load_checkpoint::<Real>(gen_ckpt)
        .map_err(|e| Error::Format(format!("generator checkpoint {}: {e}", gen_ckpt.display())))?;
    if bundle.stage != StageTag::Generator {
        return Err(Error::InvalidConfig(format!(
            "{} is not a stage-2 (generator) checkpoint",
            gen_ckpt.display()
        )));
    }
    let wave = read_wav::<Real>(audio)?;
    let feats = extract_features(&wave, &cfg.features)?;
    let inf = &cfg.inference;
    let channels =
        generate_motion_channels_stepped(&bundle, &feats.frames, inf.window, cfg.chunk_step())?;
    let canvas = to_canvas(&channels, inf.canvas, inf.canvas);
    let motion = MotionSequence::from_channels(&canvas, feats.fps)?;
    let motion = smooth_motion(&motion, inf.smooth_window)?;
    std::fs::create_dir_all(out)?;
    cfg.echo(out)?;
    save_motion(&out.join("motion.json"), &motion)?;
    if export_pose {
        export_for_pose_transfer(&motion, &out.join("pose.json"))?;
    }
    if frames {
        let paths = render_skeleton(&motion, inf.canvas, inf.canvas, &out.join("frames"))?;
        println!("rendered {} frames", paths.len());
    }
    println!(
        "generated {} motion frames ({:.1} s at {} fps) in {}",
        motion.len(),
        motion.len() as f64 / motion.fps,
        motion.fps,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SyncReport {
    mean: f64,
    window: usize,
    stride: usize,
    scores: Vec<f64>,
}

fn cmd_eval_sync(
    amc_ckpt: &Path,
    features: &Path,
    motion: &Path,
    out: Option<&Path>,
    cfg_path: Option<&Path>,
) -> Result<()> {
    let cfg = RunConfig::load(cfg_path)?;
    let (bundle, _, _) = load_checkpoint::<Real>(amc_ckpt)
        .map_err(|e| Error::Format(format!("stage-1 checkpoint {}: {e}", amc_ckpt.display())))?;
    let feats = read_vcf::<Real>(features)?;
    let m = normalize_motion(&load_motion::<Real>(motion)?)?;
    let window = cfg.inference.window;
    let stride = (window / 2).max(1);
    let (mean, scores) = sync_score(&bundle, &feats.frames, &m.to_channels(), window, stride)?;
    let report = SyncReport { mean, window, stride, scores };
    println!("mean_sync {mean:.6}");
    let json = serde_json::to_string_pretty(&report)?;
    match out {
        Some(p) => std::fs::write(p, json)?,
        None => println!("{json}"),
    }
    Ok(())
}
