use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio::{read_vcf, AudioFeatureSequence};
use crate::{Error, Result, Scalar};

use super::json::load_motion;
use super::random_scale;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub audio_feature_path: PathBuf,
    pub motion_path: PathBuf,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitIds {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub split: SplitIds,
    pub seed: u64,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let m: DatasetManifest = serde_json::from_str(&text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.entries.len();
        for &id in self.split.train.iter().chain(&self.split.val) {
            if id >= n {
                return Err(Error::Format(format!(
                    "split references entry {id}, but manifest has {n} entries"
                )));
            }
        }
        Ok(())
    }
}

/// One manifest entry with features and motion loaded and truncated to a
/// common frame count.
pub struct LoadedEntry<S> {
    /// (T x C) standardized audio features.
    pub features: Array2<S>,
    /// (T x 2J) motion channels, normalized coordinates.
    pub motion: Array2<S>,
    pub fps: f64,
}

pub struct LoadedDataset<S> {
    pub entries: Vec<LoadedEntry<S>>,
    pub manifest: DatasetManifest,
}

impl<S: Scalar> LoadedDataset<S> {
    /// Load every entry relative to the manifest's directory. Feature and
    /// motion frame counts must agree within +-2 frames; both are truncated
    /// to the minimum.
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let manifest = DatasetManifest::load(manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mut entries = Vec::with_capacity(manifest.entries.len());
        for e in &manifest.entries {
            let fpath = base.join(&e.audio_feature_path);
            let mpath = base.join(&e.motion_path);
            let feats: AudioFeatureSequence<S> = read_vcf(&fpath)?;
            let motion = load_motion::<S>(&mpath)?;
            let tf = feats.frames.nrows();
            let tm = motion.len();
            if tf.abs_diff(tm) > 2 {
                return Err(Error::Format(format!(
                    "{}: feature frames {tf} and motion frames {tm} differ by more than 2",
                    e.audio_feature_path.display()
                )));
            }
            let t = tf.min(tm);
            entries.push(LoadedEntry {
                features: feats.frames.slice(ndarray::s![..t, ..]).to_owned(),
                motion: motion.to_channels().slice(ndarray::s![..t, ..]).to_owned(),
                fps: feats.fps,
            });
        }
        Ok(LoadedDataset { entries, manifest })
    }

    pub fn min_len(&self, ids: &[usize]) -> usize {
        ids.iter()
            .map(|&i| self.entries[i].features.nrows())
            .min()
            .unwrap_or(0)
    }
}

/// A (music window, motion window) training pair.
#[derive(Debug, Clone)]
pub struct ClipPair<S> {
    /// (W x C)
    pub music: Array2<S>,
    /// (W x 2J), random-scaled.
    pub motion: Array2<S>,
    /// 1 = correspond, 0 = non-correspond.
    pub label: u8,
    pub scale_s: f64,
}

pub const SCALE_RANGE: (f64, f64) = (0.8, 1.2);

/// Minimum temporal offset, in seconds, between the windows of a same-entry
/// negative pair.
pub const NEG_MIN_OFFSET_S: f64 = 2.0;

/// Draw one pair over the entries listed in `ids`.
///
/// Positive: music and motion cut at the same position of the same entry.
/// Negative: motion from a different entry (p = 0.5 when possible) or from
/// the same entry at an offset of at least max(W, 2 s). Motion windows are
/// random-scaled in both cases.
pub fn sample_pair<S: Scalar>(
    data: &LoadedDataset<S>,
    ids: &[usize],
    correspond: bool,
    window: usize,
    rng: &mut impl Rng,
) -> Result<ClipPair<S>> {
    if ids.is_empty() {
        return Err(Error::CannotSample("empty id list".into()));
    }
    if data.min_len(ids) < window {
        return Err(Error::CannotSample(format!(
            "window {window} exceeds shortest entry length {}",
            data.min_len(ids)
        )));
    }
    let entry_id = ids[rng.random_range(0..ids.len())];
    let entry = &data.entries[entry_id];
    let t_len = entry.features.nrows();
    let start = rng.random_range(0..=t_len - window);
    let music = entry.features.slice(ndarray::s![start..start + window, ..]).to_owned();

    let (motion_raw, label) = if correspond {
        (
            entry.motion.slice(ndarray::s![start..start + window, ..]).to_owned(),
            1u8,
        )
    } else {
        let min_offset = window.max((NEG_MIN_OFFSET_S * entry.fps).round() as usize);
        let same_entry_ok = {
            // an offset start exists iff some position is at least min_offset away
            let max_start = t_len - window;
            start >= min_offset || max_start >= start + min_offset
        };
        let cross_ok = ids.iter().any(|&i| i != entry_id);
        let use_cross = match (cross_ok, same_entry_ok) {
            (true, true) => rng.random_range(0.0..1.0) < 0.5,
            (true, false) => true,
            (false, true) => false,
            (false, false) => {
                return Err(Error::CannotSample(
                    "single short entry: no valid negative offset".into(),
                ))
            }
        };
        let m = if use_cross {
            let others: Vec<usize> = ids.iter().copied().filter(|&i| i != entry_id).collect();
            let oid = others[rng.random_range(0..others.len())];
            let other = &data.entries[oid];
            let os = rng.random_range(0..=other.features.nrows() - window);
            other.motion.slice(ndarray::s![os..os + window, ..]).to_owned()
        } else {
            let max_start = t_len - window;
            // rejection-sample a start far enough from the music window
            let os = loop {
                let c = rng.random_range(0..=max_start);
                if c.abs_diff(start) >= min_offset {
                    break c;
                }
            };
            entry.motion.slice(ndarray::s![os..os + window, ..]).to_owned()
        };
        (m, 0u8)
    };
    let (motion, scale_s) = random_scale(&motion_raw, rng, SCALE_RANGE);
    Ok(ClipPair {
        music,
        motion,
        label,
        scale_s,
    })
}
