use alloc::vec::Vec;

use crate::{Error, Result};

pub const DEFAULT_SAMPLE_RATE_HZ: u32 = 48_000;

/// Mono audio, amplitudes nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(alloc::format!("sample {i} is not finite")));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }
}

/// Truncates or zero-pads (at the end) to `round(target_s * rate)` samples.
pub fn pad_clip(audio: &AudioClip, target_s: f64) -> Result<AudioClip> {
    if !(target_s > 0.0) || !target_s.is_finite() {
        return Err(Error::invalid(alloc::format!("target duration must be positive, got {target_s}")));
    }
    let len = libm::round(target_s * f64::from(audio.sample_rate_hz)) as usize;
    let mut samples = Vec::with_capacity(len);
    samples.extend(audio.samples.iter().copied().take(len));
    samples.resize(len, 0.0);
    Ok(AudioClip { samples, sample_rate_hz: audio.sample_rate_hz })
}
