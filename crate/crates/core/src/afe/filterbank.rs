use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::AudioClip;
use crate::{Error, Result};

/// Digital gain applied ahead of the filterbank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainDb {
    Zero,
    Six,
    #[default]
    Twelve,
}

impl GainDb {
    pub fn from_db(db: i32) -> Result<Self> {
        match db {
            0 => Ok(GainDb::Zero),
            6 => Ok(GainDb::Six),
            12 => Ok(GainDb::Twelve),
            other => Err(Error::config(format!("gain must be 0, 6 or 12 dB, got {other}"))),
        }
    }

    pub fn db(self) -> i32 {
        match self {
            GainDb::Zero => 0,
            GainDb::Six => 6,
            GainDb::Twelve => 12,
        }
    }

    pub fn factor(self) -> f64 {
        libm::pow(10.0, f64::from(self.db()) / 20.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterbankConfig {
    pub num_bands: usize,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    pub q: f64,
    pub gain_db: GainDb,
}

impl Default for FilterbankConfig {
    fn default() -> Self {
        Self { num_bands: 16, f_low_hz: 40.0, f_high_hz: 16_940.0, q: 4.0, gain_db: GainDb::Twelve }
    }
}

impl FilterbankConfig {
    /// Geometrically spaced centre frequencies from `f_low_hz` to `f_high_hz`.
    pub fn center_frequencies(&self) -> Vec<f64> {
        if self.num_bands == 1 {
            return alloc::vec![self.f_low_hz];
        }
        let ratio = self.f_high_hz / self.f_low_hz;
        let last = (self.num_bands - 1) as f64;
        (0..self.num_bands)
            .map(|i| {
                if i == self.num_bands - 1 {
                    self.f_high_hz
                } else {
                    self.f_low_hz * libm::pow(ratio, i as f64 / last)
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.num_bands == 0 {
            return Err(Error::config("filterbank needs at least one band"));
        }
        if !(self.f_low_hz > 0.0) || !self.f_high_hz.is_finite() {
            return Err(Error::config(format!("f_low_hz must be positive, got {}", self.f_low_hz)));
        }
        let ordered =
            if self.num_bands == 1 { self.f_low_hz <= self.f_high_hz } else { self.f_low_hz < self.f_high_hz };
        if !ordered {
            return Err(Error::config(format!(
                "f_low_hz ({}) must be below f_high_hz ({})",
                self.f_low_hz, self.f_high_hz
            )));
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return Err(Error::config(format!("q must be positive, got {}", self.q)));
        }
        Ok(())
    }
}

/// Second-order section in transposed direct form II, `a0` normalised to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Biquad {
    pub center_hz: f64,
    pub b: [f64; 3],
    pub a: [f64; 2],
    state: [f64; 2],
}

impl Biquad {
    /// Band-pass with the analog prototype `B s / (s^2 + B s + W0^2)`.
    ///
    /// Both band edges `f0 -/+ f0/(2q)` are pre-warped before the bilinear
    /// transform, so the digital response is exactly -3 dB at those edges
    /// even for bands close to Nyquist.
    pub fn band_pass(center_hz: f64, q: f64, sample_rate_hz: f64) -> Self {
        let k = 2.0 * sample_rate_hz;
        let warp = |f: f64| k * libm::tan(PI * f / sample_rate_hz);
        let half_bw = center_hz / (2.0 * q);
        let w_lo = warp(center_hz - half_bw);
        let w_hi = warp(center_hz + half_bw);
        let w0_sq = w_lo * w_hi;
        let bw = w_hi - w_lo;

        let a0 = k * k + bw * k + w0_sq;
        let b0 = bw * k / a0;
        Self {
            center_hz,
            b: [b0, 0.0, -b0],
            a: [2.0 * (w0_sq - k * k) / a0, (k * k - bw * k + w0_sq) / a0],
            state: [0.0; 2],
        }
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.state[0];
        self.state[0] = self.b[1] * x - self.a[0] * y + self.state[1];
        self.state[1] = self.b[2] * x - self.a[1] * y;
        y
    }

    pub fn reset(&mut self) {
        self.state = [0.0; 2];
    }

    /// Largest pole magnitude of `z^2 + a1 z + a2`.
    pub fn pole_radius(&self) -> f64 {
        let [a1, a2] = self.a;
        let disc = a1 * a1 - 4.0 * a2;
        if disc < 0.0 {
            libm::sqrt(a2)
        } else {
            let r = libm::sqrt(disc);
            libm::fmax(libm::fabs((-a1 + r) / 2.0), libm::fabs((-a1 - r) / 2.0))
        }
    }

    /// `|H(e^{jw})|` at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        let (c1, s1) = (libm::cos(w), libm::sin(w));
        let (c2, s2) = (libm::cos(2.0 * w), libm::sin(2.0 * w));
        // evaluate in z^-1 = e^{-jw}
        let num_re = self.b[0] + self.b[1] * c1 + self.b[2] * c2;
        let num_im = -(self.b[1] * s1 + self.b[2] * s2);
        let den_re = 1.0 + self.a[0] * c1 + self.a[1] * c2;
        let den_im = -(self.a[0] * s1 + self.a[1] * s2);
        libm::sqrt((num_re * num_re + num_im * num_im) / (den_re * den_re + den_im * den_im))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiquadBank {
    pub sample_rate_hz: u32,
    pub bands: Vec<Biquad>,
}

impl BiquadBank {
    pub fn num_bands(&self) -> usize {
        self.bands.len()
    }

    /// Filters one (already gain-scaled) sample and writes rectified outputs.
    #[inline]
    pub fn process_sample(&mut self, x: f64, out: &mut [f64]) {
        for (band, o) in self.bands.iter_mut().zip(out.iter_mut()) {
            *o = libm::fabs(band.process(x));
        }
    }

    pub fn reset(&mut self) {
        self.bands.iter_mut().for_each(Biquad::reset);
    }
}

pub fn design_filterbank(config: &FilterbankConfig, sample_rate_hz: u32) -> Result<BiquadBank> {
    config.validate()?;
    if sample_rate_hz == 0 {
        return Err(Error::config("sample rate must be positive"));
    }
    let fs = f64::from(sample_rate_hz);
    let nyquist = fs / 2.0;
    let centers = config.center_frequencies();
    let mut bands = Vec::with_capacity(centers.len());
    for (i, &fc) in centers.iter().enumerate() {
        if fc >= nyquist {
            return Err(Error::config(format!("band {i} centre {fc:.1} Hz is at or above Nyquist ({nyquist:.1} Hz)")));
        }
        let upper = fc + fc / (2.0 * config.q);
        if upper >= nyquist {
            return Err(Error::config(format!(
                "band {i} upper edge {upper:.1} Hz is at or above Nyquist ({nyquist:.1} Hz)"
            )));
        }
        bands.push(Biquad::band_pass(fc, config.q, fs));
    }
    Ok(BiquadBank { sample_rate_hz, bands })
}

/// Runs the whole clip through `bank`, returning one rectified signal per band.
///
/// The bank keeps its filter state, so consecutive calls continue the stream.
pub fn process_audio(bank: &mut BiquadBank, audio: &AudioClip, gain_db: GainDb) -> Result<Vec<Vec<f32>>> {
    if audio.sample_rate_hz != bank.sample_rate_hz {
        return Err(Error::invalid(format!(
            "audio sampled at {} Hz but filterbank designed for {} Hz",
            audio.sample_rate_hz, bank.sample_rate_hz
        )));
    }
    let gain = gain_db.factor();
    let n = bank.num_bands();
    let mut out: Vec<Vec<f32>> = (0..n).map(|_| Vec::with_capacity(audio.samples.len())).collect();
    let mut frame = alloc::vec![0.0; n];
    for &s in &audio.samples {
        bank.process_sample(f64::from(s) * gain, &mut frame);
        for (o, &v) in out.iter_mut().zip(&frame) {
            o.push(v as f32);
        }
    }
    Ok(out)
}
