use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelBundle, ModelConfig, StageTag};
use crate::nn::{Adam, Net};
use crate::{Error, Result, Scalar};

const MAGIC: &[u8; 4] = b"VCCK";
const VERSION: u32 = 1;

/// Training-state side data carried next to the model parameters so runs can
/// resume with continuous iteration numbering.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CheckpointExtra {
    pub iter: u64,
    /// Adam step counters, one per optimizer whose moments are stored.
    #[serde(default)]
    pub adam_t: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    config: ModelConfig,
    stage: StageTag,
    extra: CheckpointExtra,
}

fn write_blob<S: Scalar>(w: &mut impl Write, data: &[S]) -> Result<()> {
    w.write_all(&(data.len() as u64).to_le_bytes())?;
    for v in data {
        w.write_all(&v.to_f64c().to_le_bytes())?;
    }
    Ok(())
}

fn read_blob<S: Scalar>(r: &mut impl Read) -> Result<Vec<S>> {
    let mut len8 = [0u8; 8];
    r.read_exact(&mut len8)?;
    let n = u64::from_le_bytes(len8) as usize;
    let mut out = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        out.push(S::from_f64c(f64::from_le_bytes(buf)));
    }
    Ok(out)
}

pub fn save_checkpoint<S: Scalar>(
    path: &Path,
    bundle: &ModelBundle<S>,
    extra: &CheckpointExtra,
    optimizers: &[&Adam<S>],
) -> Result<()> {
    let mut extra = extra.clone();
    extra.adam_t = optimizers.iter().map(|o| o.t).collect();
    let header = Header {
        version: VERSION,
        config: bundle.config.clone(),
        stage: bundle.stage,
        extra,
    };
    let json = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    write_blob(&mut w, &bundle.params_flat())?;
    for opt in optimizers {
        write_blob(&mut w, &opt.m)?;
        write_blob(&mut w, &opt.v)?;
    }
    w.flush()?;
    Ok(())
}

/// Load a bundle; also returns the stored training-state side data and any
/// optimizer moment blobs in the order they were saved.
pub fn load_checkpoint<S: Scalar>(
    path: &Path,
) -> Result<(ModelBundle<S>, CheckpointExtra, Vec<Adam<S>>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "not a checkpoint file: bad magic {magic:?}"
        )));
    }
    let mut u4 = [0u8; 4];
    r.read_exact(&mut u4)?;
    let version = u32::from_le_bytes(u4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    r.read_exact(&mut u4)?;
    let json_len = u32::from_le_bytes(u4) as usize;
    let mut json = vec![0u8; json_len];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    header.config.validate()?;

    // Parameter initialization is immediately overwritten; any seed works.
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut bundle = ModelBundle::new(header.config, &mut rng);
    bundle.stage = header.stage;
    let params: Vec<S> = read_blob(&mut r)?;
    if params.len() != bundle.num_params() {
        return Err(Error::Format(format!(
            "checkpoint holds {} parameters, model needs {}",
            params.len(),
            bundle.num_params()
        )));
    }
    bundle.set_params_flat(&params);

    let mut optimizers = Vec::new();
    for &t in &header.extra.adam_t {
        let m: Vec<S> = read_blob(&mut r)?;
        let v: Vec<S> = read_blob(&mut r)?;
        let mut adam = Adam::new(m.len(), S::from_f64c(1e-4));
        adam.t = t;
        adam.m = m;
        adam.v = v;
        optimizers.push(adam);
    }
    Ok((bundle, header.extra, optimizers))
}
