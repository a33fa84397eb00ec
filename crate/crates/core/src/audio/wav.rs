use std::path::Path;

use super::Waveform;
use crate::{Error, Result, Scalar};

/// Read a WAV file, downmixing to mono by channel average.
pub fn read_wav<S: Scalar>(path: &Path) -> Result<Waveform<S>> {
    let mut reader =
        hound::WavReader::open(path).map_err(|e| Error::Audio(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    let ch = spec.channels as usize;
    if ch == 0 {
        return Err(Error::Audio("wav file reports zero channels".into()));
    }
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Audio(e.to_string()))?,
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Audio(e.to_string()))?
        }
    };
    let n = interleaved.len() / ch;
    let mut mono = Vec::with_capacity(n);
    for f in 0..n {
        let mut acc = 0.0;
        for c in 0..ch {
            acc += interleaved[f * ch + c];
        }
        mono.push(S::from_f64c(acc / ch as f64));
    }
    Waveform::new(mono, spec.sample_rate)
}

/// Write a mono 16-bit PCM WAV file.
pub fn write_wav<S: Scalar>(path: &Path, w: &Waveform<S>) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer =
        hound::WavWriter::create(path, spec).map_err(|e| Error::Audio(e.to_string()))?;
    for v in &w.samples {
        let s = (v.to_f64c() * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer
            .write_sample(s)
            .map_err(|e| Error::Audio(e.to_string()))?;
    }
    writer.finalize().map_err(|e| Error::Audio(e.to_string()))?;
    Ok(())
}
