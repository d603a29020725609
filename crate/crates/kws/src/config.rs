//! Run configuration, loadable from TOML. Every field has a default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use snnkws_core::afe::{AfeConfig, EncoderConfig, FilterbankConfig, GainDb};
use snnkws_core::energy::{DeviceTiming, EnergyModelParams};
use snnkws_core::quantize::QuantConfig;
use snnkws_core::snn::SynNetSpec;
use snnkws_core::synth::SynthConfig;
use snnkws_core::train::{PeakLoss, TrainConfig};

use crate::error::{KwsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Time per network step for decay codes and the loss window.
    pub dt_ms: f64,
    pub bin_ms: f64,
    pub afe: AfeSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub quantize: QuantSection,
    pub bench: BenchSection,
    pub synth: SynthSection,
    pub energy: EnergySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AfeSection {
    pub num_bands: usize,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    pub q: f64,
    pub gain_db: i32,
    pub encoder_tau_ms: f64,
    pub encoder_threshold: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden: Vec<usize>,
    pub tau: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub surrogate_slope: f64,
    pub validation_fraction: f64,
    pub peak_window_ms: f64,
    pub peak_target: f64,
    pub nontarget_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantSection {
    pub headroom: u32,
    pub threshold_ceiling: i16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub repeats: usize,
    pub roc_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub train_samples: usize,
    pub test_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    pub idle_power_uw: f64,
    pub energy_per_synop_nj: f64,
    pub energy_per_neuron_update_nj: f64,
    pub timestep_overhead_nj: f64,
    pub clock_hz: f64,
    pub cycles_per_synop: f64,
    pub cycles_per_update: f64,
    pub cycles_per_step: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            dt_ms: 10.0,
            bin_ms: 100.0,
            afe: AfeSection::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            quantize: QuantSection::default(),
            bench: BenchSection::default(),
            synth: SynthSection::default(),
            energy: EnergySection::default(),
        }
    }
}

impl Default for AfeSection {
    fn default() -> Self {
        let fb = FilterbankConfig::default();
        let enc = EncoderConfig::default();
        Self {
            num_bands: fb.num_bands,
            f_low_hz: fb.f_low_hz,
            f_high_hz: fb.f_high_hz,
            q: fb.q,
            gain_db: fb.gain_db.db(),
            encoder_tau_ms: enc.tau_ms,
            encoder_threshold: enc.threshold,
            duration_s: AfeConfig::default().duration_s,
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { hidden: vec![32, 16], tau: vec![2, 2] }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            surrogate_slope: t.surrogate_slope,
            validation_fraction: t.validation_fraction,
            peak_window_ms: t.loss.window_ms,
            peak_target: t.loss.target,
            nontarget_weight: t.loss.nontarget_weight,
        }
    }
}

impl Default for QuantSection {
    fn default() -> Self {
        let q = QuantConfig::default();
        Self { headroom: q.headroom, threshold_ceiling: q.threshold_ceiling }
    }
}

impl Default for BenchSection {
    fn default() -> Self {
        Self { repeats: 5, roc_points: 256 }
    }
}

impl Default for SynthSection {
    fn default() -> Self {
        let s = SynthConfig::default();
        Self { train_samples: s.train_samples, test_samples: s.test_samples }
    }
}

impl Default for EnergySection {
    fn default() -> Self {
        let p = EnergyModelParams::default();
        let t = DeviceTiming::default();
        Self {
            idle_power_uw: p.idle_power_uw,
            energy_per_synop_nj: p.energy_per_synop_nj,
            energy_per_neuron_update_nj: p.energy_per_neuron_update_nj,
            timestep_overhead_nj: p.timestep_overhead_nj,
            clock_hz: t.clock_hz,
            cycles_per_synop: t.cycles_per_synop,
            cycles_per_update: t.cycles_per_update,
            cycles_per_step: t.cycles_per_step,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| KwsError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KwsError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            KwsError::Config(m) => KwsError::Config(format!("{}: {m}", path.display())),
            KwsError::Core(e) => KwsError::Config(format!("{}: {e}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.afe_config()?;
        self.spec().validate()?;
        self.train_config().validate()?;
        if !(self.dt_ms > 0.0 && self.bin_ms > 0.0) {
            return Err(KwsError::Config("dt_ms and bin_ms must be positive".into()));
        }
        if self.bench.repeats == 0 || self.bench.roc_points < 2 {
            return Err(KwsError::Config("bench needs at least 1 repeat and 2 ROC points".into()));
        }
        self.energy_params().validate()?;
        Ok(())
    }

    pub fn afe_config(&self) -> Result<AfeConfig> {
        let a = &self.afe;
        Ok(AfeConfig {
            filterbank: FilterbankConfig {
                num_bands: a.num_bands,
                f_low_hz: a.f_low_hz,
                f_high_hz: a.f_high_hz,
                q: a.q,
                gain_db: GainDb::from_db(a.gain_db)?,
            },
            encoder: EncoderConfig { tau_ms: a.encoder_tau_ms, threshold: a.encoder_threshold },
            bin_ms: self.bin_ms,
            duration_s: a.duration_s,
        })
    }

    pub fn spec(&self) -> SynNetSpec {
        let mut s = SynNetSpec::new(self.model.hidden.clone(), self.model.tau.clone());
        s.input_channels = self.afe.num_bands;
        s.dt_ms = self.dt_ms;
        s
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            loss: PeakLoss { window_ms: t.peak_window_ms, target: t.peak_target, nontarget_weight: t.nontarget_weight },
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            surrogate_slope: t.surrogate_slope,
            validation_fraction: t.validation_fraction,
            seed: self.seed,
        }
    }

    pub fn quant_config(&self) -> QuantConfig {
        QuantConfig { headroom: self.quantize.headroom, threshold_ceiling: self.quantize.threshold_ceiling }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            duration_s: self.afe.duration_s,
            train_samples: self.synth.train_samples,
            test_samples: self.synth.test_samples,
            ..SynthConfig::default()
        }
    }

    pub fn energy_params(&self) -> EnergyModelParams {
        let e = &self.energy;
        EnergyModelParams {
            idle_power_uw: e.idle_power_uw,
            energy_per_synop_nj: e.energy_per_synop_nj,
            energy_per_neuron_update_nj: e.energy_per_neuron_update_nj,
            timestep_overhead_nj: e.timestep_overhead_nj,
        }
    }

    pub fn device_timing(&self) -> DeviceTiming {
        let e = &self.energy;
        DeviceTiming {
            clock_hz: e.clock_hz,
            cycles_per_synop: e.cycles_per_synop,
            cycles_per_update: e.cycles_per_update,
            cycles_per_step: e.cycles_per_step,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_the_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn partial_sections_merge_with_defaults() {
        let c = Config::from_toml("seed = 9\n[model]\nhidden = [8]\ntau = [1]\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.model.hidden, vec![8]);
        assert_eq!(c.train, TrainSection::default());
    }

    #[test]
    fn round_trip_and_hash() {
        let c = Config::default();
        let back = Config::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 16);
        let d = Config { seed: 1, ..Config::default() };
        assert_ne!(d.hash(), c.hash());
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(Config::from_toml("bogus = 1").is_err());
        assert!(Config::from_toml("[afe]\ngain_db = 3").is_err());
        assert!(Config::from_toml("[model]\nhidden = [8, 4]\ntau = [1]").is_err());
        assert!(Config::from_toml("dt_ms = 0").is_err());
    }
}
