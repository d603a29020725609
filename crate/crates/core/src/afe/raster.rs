use alloc::format;
use alloc::vec::Vec;

use super::EventTrains;
use crate::{Error, Result};

/// Channels x timesteps grid of event counts, stored row-major by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRaster {
    channels: usize,
    timesteps: usize,
    bin_ms: f64,
    counts: Vec<u16>,
}

impl EventRaster {
    pub fn zeros(channels: usize, timesteps: usize, bin_ms: f64) -> Self {
        Self { channels, timesteps, bin_ms, counts: alloc::vec![0; channels * timesteps] }
    }

    pub fn from_counts(channels: usize, timesteps: usize, bin_ms: f64, counts: Vec<u16>) -> Result<Self> {
        if counts.len() != channels * timesteps {
            return Err(Error::invalid(format!(
                "raster of {channels}x{timesteps} needs {} counts, got {}",
                channels * timesteps,
                counts.len()
            )));
        }
        if !(bin_ms > 0.0) {
            return Err(Error::invalid(format!("bin width must be positive, got {bin_ms}")));
        }
        Ok(Self { channels, timesteps, bin_ms, counts })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn bin_ms(&self) -> f64 {
        self.bin_ms
    }

    pub fn counts(&self) -> &[u16] {
        &self.counts
    }

    #[inline]
    pub fn count(&self, channel: usize, t: usize) -> u16 {
        self.counts[channel * self.timesteps + t]
    }

    pub fn set(&mut self, channel: usize, t: usize, value: u16) {
        self.counts[channel * self.timesteps + t] = value;
    }

    /// Input vector for one timestep.
    pub fn column(&self, t: usize) -> Vec<u16> {
        (0..self.channels).map(|c| self.count(c, t)).collect()
    }

    pub fn column_into(&self, t: usize, out: &mut [u16]) {
        for (c, o) in out.iter_mut().enumerate().take(self.channels) {
            *o = self.count(c, t);
        }
    }

    pub fn total_events(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Copy of timesteps `start..end`.
    pub fn slice_time(&self, start: usize, end: usize) -> Self {
        let end = end.min(self.timesteps);
        let start = start.min(end);
        let len = end - start;
        let mut counts = Vec::with_capacity(self.channels * len);
        for c in 0..self.channels {
            let row = &self.counts[c * self.timesteps..(c + 1) * self.timesteps];
            counts.extend_from_slice(&row[start..end]);
        }
        Self { channels: self.channels, timesteps: len, bin_ms: self.bin_ms, counts }
    }
}

/// Number of bins covering `duration_s`, i.e. `ceil(duration_s * 1000 / bin_ms)`.
pub fn timesteps_for(duration_s: f64, bin_ms: f64) -> usize {
    let ratio = duration_s * 1000.0 / bin_ms;
    let nearest = libm::round(ratio);
    if libm::fabs(ratio - nearest) < 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        libm::ceil(ratio) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedRaster {
    pub raster: EventRaster,
    /// Events at or after `duration_s` that were discarded.
    pub dropped: usize,
}

/// Counts events into `[t * bin_ms, (t + 1) * bin_ms)` bins over `duration_s`.
pub fn bin_raster(events: &EventTrains, bin_ms: f64, duration_s: f64) -> Result<BinnedRaster> {
    if !(bin_ms > 0.0) || !(duration_s > 0.0) {
        return Err(Error::invalid(format!("bin width ({bin_ms} ms) and duration ({duration_s} s) must be positive")));
    }
    if events.sample_rate_hz == 0 {
        return Err(Error::invalid("event trains carry a zero sample rate"));
    }
    let fs = f64::from(events.sample_rate_hz);
    let steps = timesteps_for(duration_s, bin_ms);
    let samples_per_bin = fs * bin_ms / 1000.0;
    let end_sample = duration_s * fs;
    let mut raster = EventRaster::zeros(events.channels.len(), steps, bin_ms);
    let mut dropped = 0;
    for (c, train) in events.channels.iter().enumerate() {
        for &idx in train {
            let pos = idx as f64;
            let bin = libm::floor(pos / samples_per_bin) as usize;
            if pos >= end_sample || bin >= steps {
                dropped += 1;
                continue;
            }
            let slot = &mut raster.counts[c * steps + bin];
            *slot = slot.saturating_add(1);
        }
    }
    Ok(BinnedRaster { raster, dropped })
}
