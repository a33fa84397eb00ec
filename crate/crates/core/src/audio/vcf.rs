use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::AudioFeatureSequence;
use crate::{Error, Result, Scalar};

const MAGIC: &[u8; 4] = b"VCFT";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct VcfMeta {
    channel_names: Vec<String>,
    fps: f64,
    tempo_bpm: f64,
    shape: [usize; 2],
}

/// Feature container: magic "VCFT", u32 LE version, u32 LE metadata length,
/// JSON metadata, then T x C float32 LE row-major payload.
pub fn write_vcf<S: Scalar>(path: &Path, seq: &AudioFeatureSequence<S>) -> Result<()> {
    let meta = VcfMeta {
        channel_names: seq.channel_names.clone(),
        fps: seq.fps,
        tempo_bpm: seq.tempo_bpm,
        shape: [seq.frames.nrows(), seq.frames.ncols()],
    };
    let json = serde_json::to_vec(&meta)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for v in seq.frames.iter() {
        w.write_all(&(v.to_f64c() as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vcf<S: Scalar>(path: &Path) -> Result<AudioFeatureSequence<S>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("not a feature file: bad magic {magic:?}")));
    }
    let mut u4 = [0u8; 4];
    r.read_exact(&mut u4)?;
    let version = u32::from_le_bytes(u4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported feature file version {version}")));
    }
    r.read_exact(&mut u4)?;
    let meta_len = u32::from_le_bytes(u4) as usize;
    let mut meta_buf = vec![0u8; meta_len];
    r.read_exact(&mut meta_buf)?;
    let meta: VcfMeta = serde_json::from_slice(&meta_buf)?;
    if meta.channel_names.len() != meta.shape[1] {
        return Err(Error::Format("channel name count does not match shape".into()));
    }
    let [t_len, c] = meta.shape;
    let mut frames = Array2::zeros((t_len, c));
    let mut buf = [0u8; 4];
    for t in 0..t_len {
        for ch in 0..c {
            r.read_exact(&mut buf)?;
            frames[[t, ch]] = S::from_f64c(f32::from_le_bytes(buf) as f64);
        }
    }
    Ok(AudioFeatureSequence {
        frames,
        fps: meta.fps,
        tempo_bpm: meta.tempo_bpm,
        channel_names: meta.channel_names,
    })
}
