use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use modal_core::error::{Error, Result};

/// Reads PCM 16/24/32-bit or 32-bit float audio as floats in `[-1, 1]`.
/// Multichannel files yield their first channel.
pub fn wav_read(path: &Path) -> Result<(Vec<f64>, u32)> {
    let mut reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav(other),
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels > 1 {
        log::warn!("{}: {channels} channels, using the first", path.display());
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader.samples::<f32>().step_by(channels).map(|s| s.map(f64::from)).collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .step_by(channels)
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()?
        }
        (format, bits) => {
            let kind = if format == SampleFormat::Float { "float" } else { "integer PCM" };
            return Err(Error::UnsupportedEncoding(format!("{bits}-bit {kind}")));
        }
    };
    Ok((samples, spec.sample_rate))
}

/// Writes mono 32-bit float audio.
pub fn wav_write(path: &Path, signal: &[f64], sample_rate: u32) -> Result<()> {
    let spec = WavSpec { channels: 1, sample_rate, bits_per_sample: 32, sample_format: SampleFormat::Float };
    let io = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav(other),
    };
    let mut writer = WavWriter::create(path, spec).map_err(io)?;
    for s in signal {
        writer.write_sample(*s as f32).map_err(io)?;
    }
    writer.finalize().map_err(io)
}

/// Writes mono 32-bit float audio, optionally scaled to unit peak.
pub fn wav_write_scaled(path: &Path, signal: &[f64], sample_rate: u32, normalise: bool) -> Result<()> {
    let peak = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if normalise && peak > 0.0 {
        let scaled: Vec<f64> = signal.iter().map(|v| v / peak).collect();
        wav_write(path, &scaled, sample_rate)
    } else {
        wav_write(path, signal, sample_rate)
    }
}
