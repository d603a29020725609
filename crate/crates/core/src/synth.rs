//! Deterministic two-class corpus: a rising multi-band chirp in background
//! noise versus a noise burst of matching length, level and band.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::afe::{AudioClip, Biquad};
use crate::{Error, Result};

/// Quality factor of the non-target noise band.
const NOISE_Q: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sample_rate_hz: u32,
    pub duration_s: f64,
    pub train_samples: usize,
    pub test_samples: usize,
    pub chirp_start_hz: f64,
    pub chirp_end_hz: f64,
    /// Motif length range in seconds.
    pub motif_s: (f64, f64),
    /// Peak amplitude range of the motif.
    pub amplitude: (f64, f64),
    /// Standard deviation of the background noise.
    pub background_rms: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 48_000,
            duration_s: 3.0,
            train_samples: 400,
            test_samples: 100,
            chirp_start_hz: 400.0,
            chirp_end_hz: 3000.0,
            motif_s: (0.6, 0.9),
            amplitude: (0.4, 0.7),
            background_rms: 0.01,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz == 0 || !(self.duration_s > 0.0) {
            return Err(Error::config("sample rate and duration must be positive"));
        }
        let nyq = f64::from(self.sample_rate_hz) / 2.0;
        // the harmonic sits at twice the end frequency
        if !(self.chirp_start_hz > 0.0 && self.chirp_start_hz < self.chirp_end_hz && 2.0 * self.chirp_end_hz < nyq) {
            return Err(Error::config(format!(
                "chirp {}..{} Hz does not fit below {nyq} Hz",
                self.chirp_start_hz, self.chirp_end_hz
            )));
        }
        let (lo, hi) = self.motif_s;
        if !(lo > 0.0 && lo <= hi && hi + 0.4 < self.duration_s) {
            return Err(Error::config("motif length must be positive and leave 0.2 s margins"));
        }
        let (a, b) = self.amplitude;
        if !(a > 0.0 && a <= b && b <= 1.0) {
            return Err(Error::config("amplitude range must lie in (0, 1]"));
        }
        if !(self.background_rms >= 0.0) {
            return Err(Error::config("background noise level must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    /// Stable file stem, e.g. `train_0007_kw`.
    pub name: String,
    pub clip: AudioClip,
    pub target: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn tag(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Generates one sample. Labels alternate with `index`, starting with a target.
pub fn synth_sample(cfg: &SynthConfig, seed: u64, split: Split, index: usize) -> Result<SynthSample> {
    cfg.validate()?;
    let stream = match split {
        Split::Train => 0u64,
        Split::Test => 1u64 << 40,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    rng.set_stream(stream + index as u64);

    let target = index.is_multiple_of(2);
    let fs = f64::from(cfg.sample_rate_hz);
    let n = libm::round(cfg.duration_s * fs) as usize;
    let mut samples: Vec<f64> = (0..n).map(|_| cfg.background_rms * gaussian(&mut rng)).collect();

    let motif = rng.gen_range(cfg.motif_s.0..=cfg.motif_s.1);
    let onset = rng.gen_range(0.2..=cfg.duration_s - 0.2 - motif);
    let amp = rng.gen_range(cfg.amplitude.0..=cfg.amplitude.1);
    let start = libm::round(onset * fs) as usize;
    let len = (libm::round(motif * fs) as usize).min(n - start);

    if target {
        let r = cfg.chirp_end_hz / cfg.chirp_start_hz;
        let k = libm::log(r) / motif;
        for i in 0..len {
            let t = i as f64 / fs;
            // exponential sweep: phase = 2 pi f0 (e^{kt} - 1) / k
            let phase = 2.0 * PI * cfg.chirp_start_hz * (libm::exp(k * t) - 1.0) / k;
            let s = libm::sin(phase) + 0.5 * libm::sin(2.0 * phase);
            samples[start + i] += amp * tukey(i, len) * s;
        }
    } else {
        // narrowband noise centred inside the chirp's span, scaled to the
        // chirp's RMS; sin + 0.5 sin(2x) has RMS sqrt(0.625)
        let span = libm::log(cfg.chirp_end_hz / cfg.chirp_start_hz);
        let centre = cfg.chirp_start_hz * libm::exp(rng.gen_range(0.0..=span));
        let mut filter = Biquad::band_pass(centre, NOISE_Q, fs);
        let burst: Vec<f64> = (0..len).map(|_| filter.process(gaussian(&mut rng))).collect();
        let rms = libm::sqrt(burst.iter().map(|v| v * v).sum::<f64>() / len.max(1) as f64);
        let level = if rms > 0.0 { amp * libm::sqrt(0.625) / rms } else { 0.0 };
        for (i, b) in burst.into_iter().enumerate() {
            samples[start + i] += level * tukey(i, len) * b;
        }
    }

    let clip = AudioClip::new(samples.into_iter().map(|v| v.clamp(-1.0, 1.0) as f32).collect(), cfg.sample_rate_hz)?;
    let name = format!("{}_{index:04}_{}", split.tag(), if target { "kw" } else { "bg" });
    Ok(SynthSample { name, clip, target })
}

/// All train then all test samples of the corpus.
pub fn synth_corpus(cfg: &SynthConfig, seed: u64) -> Result<(Vec<SynthSample>, Vec<SynthSample>)> {
    let train = (0..cfg.train_samples).map(|i| synth_sample(cfg, seed, Split::Train, i)).collect::<Result<Vec<_>>>()?;
    let test = (0..cfg.test_samples).map(|i| synth_sample(cfg, seed, Split::Test, i)).collect::<Result<Vec<_>>>()?;
    Ok((train, test))
}

/// Flat top with raised-cosine ramps over the outer 10% on each side.
fn tukey(i: usize, len: usize) -> f64 {
    let ramp = len / 10;
    let edge = i.min(len - 1 - i);
    if ramp == 0 || edge >= ramp {
        return 1.0;
    }
    0.5 - 0.5 * libm::cos(PI * edge as f64 / ramp as f64)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; 1 - u keeps the argument of ln away from zero
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u)) * libm::cos(2.0 * PI * v)
}
