//! 16-bit PCM mono WAV input and output.

use std::path::Path;

use snnkws_core::afe::AudioClip;

use crate::error::{KwsError, Result};

/// Errors after the file is open mean a malformed file: hound reports
/// truncation as an I/O error.
fn wav_error(path: &Path, e: hound::Error) -> KwsError {
    KwsError::format(path, e.to_string())
}

/// Reads a mono 16-bit PCM file, scaling samples by 1/32768.
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let file = std::fs::File::open(path).map_err(|e| KwsError::io(path, e))?;
    let reader = hound::WavReader::new(std::io::BufReader::new(file)).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(KwsError::format(path, format!("expected mono audio, found {} channels", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(KwsError::format(
            path,
            format!("expected 16-bit PCM, found {:?} with {} bits", spec.sample_format, spec.bits_per_sample),
        ));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f32::from(v) / 32768.0))
        .collect::<std::result::Result<Vec<f32>, _>>()
        .map_err(|e| wav_error(path, e))?;
    AudioClip::new(samples, spec.sample_rate).map_err(|e| KwsError::format(path, e.to_string()))
}

/// Writes `clip` as 16-bit PCM, rounding and clamping to the i16 range.
pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let write_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => KwsError::io(path, io),
        other => KwsError::format(path, other.to_string()),
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(write_err)?;
    for &s in &clip.samples {
        let v = (f64::from(s) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v).map_err(write_err)?;
    }
    w.finalize().map_err(write_err)
}
