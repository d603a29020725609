//! Operation-counting energy model. Every figure produced here is modeled,
//! not measured.

use alloc::format;
use alloc::vec::Vec;

use crate::snn::{ReadoutTrace, SynNetSpec};
use crate::{Error, Result};

/// Network steps per inference.
pub const STEPS_PER_INFERENCE: u64 = 10;

/// Tag attached to every energy figure.
pub const PROVENANCE: &str = "modeled";

/// Activity counters accumulated over one or more forward passes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActivityStats {
    pub timesteps: u64,
    pub synops: f64,
    pub neuron_updates: f64,
}

impl ActivityStats {
    pub fn from_trace(trace: &ReadoutTrace) -> Self {
        Self {
            timesteps: trace.v_readout.len() as u64,
            synops: trace.synop_count as f64,
            neuron_updates: trace.neuron_updates as f64,
        }
    }

    pub fn inferences(&self) -> f64 {
        self.timesteps as f64 / STEPS_PER_INFERENCE as f64
    }

    pub fn merge(&mut self, other: &ActivityStats) {
        self.timesteps += other.timesteps;
        self.synops += other.synops;
        self.neuron_updates += other.neuron_updates;
    }

    pub fn synops_per_inference(&self) -> f64 {
        let n = self.inferences();
        if n == 0.0 {
            0.0
        } else {
            self.synops / n
        }
    }
}

/// Average activity used to synthesize stats for arbitrary topologies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityProfile {
    /// Input events per step summed over all channels.
    pub input_events_per_step: f64,
    /// Probability that a hidden neuron spikes in a step.
    pub hidden_spike_prob: f64,
}

impl Default for ActivityProfile {
    fn default() -> Self {
        Self { input_events_per_step: REFERENCE_INPUT_EVENTS, hidden_spike_prob: REFERENCE_SPIKE_PROB }
    }
}

// measured on the quantised desk-scale model over the synthetic test split
// (`snnkws calibrate` re-measures it)
const REFERENCE_INPUT_EVENTS: f64 = 0.469;
const REFERENCE_SPIKE_PROB: f64 = 12_644.0 / 144_000.0;

impl ActivityProfile {
    /// Measures a profile from forward passes of a model with the given
    /// hidden layer widths.
    pub fn measure<'a>(
        hidden_widths: &[usize],
        input_events: u64,
        traces: impl IntoIterator<Item = &'a ReadoutTrace>,
    ) -> Result<Self> {
        let mut steps = 0u64;
        let mut spikes = 0u64;
        for t in traces {
            if t.hidden_spike_counts.len() != hidden_widths.len() {
                return Err(Error::invalid("trace layer count does not match hidden widths"));
            }
            steps += t.v_readout.len() as u64;
            spikes += t.hidden_spike_counts.iter().flatten().map(|&s| u64::from(s)).sum::<u64>();
        }
        if steps == 0 {
            return Err(Error::invalid("no timesteps to measure activity from"));
        }
        let hidden: usize = hidden_widths.iter().sum();
        let p = if hidden == 0 { 0.0 } else { spikes as f64 / (steps as f64 * hidden as f64) };
        Ok(Self { input_events_per_step: input_events as f64 / steps as f64, hidden_spike_prob: p })
    }

    /// Expected stats of `timesteps` steps of `spec` under this profile.
    pub fn synthetic_stats(&self, spec: &SynNetSpec, timesteps: u64) -> ActivityStats {
        let shapes = spec.layer_shapes();
        let mut per_step = 0.0;
        for (k, &(inputs, outputs)) in shapes.iter().enumerate() {
            let events = if k == 0 { self.input_events_per_step } else { self.hidden_spike_prob * inputs as f64 };
            per_step += events * outputs as f64;
        }
        let n = timesteps as f64;
        ActivityStats { timesteps, synops: per_step * n, neuron_updates: spec.total_neurons() as f64 * n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModelParams {
    pub idle_power_uw: f64,
    pub energy_per_synop_nj: f64,
    pub energy_per_neuron_update_nj: f64,
    pub timestep_overhead_nj: f64,
}

impl Default for EnergyModelParams {
    fn default() -> Self {
        Self {
            idle_power_uw: 216.0,
            energy_per_synop_nj: 0.038_490_335_000_551_02,
            energy_per_neuron_update_nj: 1.240_667_908_652_453_5,
            timestep_overhead_nj: 3.849_033_500_055_101_7,
        }
    }
}

impl EnergyModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("idle_power_uw", self.idle_power_uw),
            ("energy_per_synop_nj", self.energy_per_synop_nj),
            ("energy_per_neuron_update_nj", self.energy_per_neuron_update_nj),
            ("timestep_overhead_nj", self.timestep_overhead_nj),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Dynamic energy of `stats` in nanojoules.
    pub fn dynamic_energy_nj(&self, stats: &ActivityStats) -> f64 {
        stats.synops * self.energy_per_synop_nj
            + stats.neuron_updates * self.energy_per_neuron_update_nj
            + stats.timesteps as f64 * self.timestep_overhead_nj
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            idle_power_uw: self.idle_power_uw,
            energy_per_synop_nj: self.energy_per_synop_nj * factor,
            energy_per_neuron_update_nj: self.energy_per_neuron_update_nj * factor,
            timestep_overhead_nj: self.timestep_overhead_nj * factor,
        }
    }
}

/// Cycle costs of a synchronous device running as fast as its clock allows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceTiming {
    pub clock_hz: f64,
    pub cycles_per_synop: f64,
    pub cycles_per_update: f64,
    pub cycles_per_step: f64,
}

impl Default for DeviceTiming {
    fn default() -> Self {
        Self {
            clock_hz: 6.25e6,
            cycles_per_synop: 1.0,
            cycles_per_update: 25.786_585_824_928_622,
            cycles_per_step: 100.0,
        }
    }
}

impl DeviceTiming {
    pub fn cycles(&self, stats: &ActivityStats) -> f64 {
        stats.synops * self.cycles_per_synop
            + stats.neuron_updates * self.cycles_per_update
            + stats.timesteps as f64 * self.cycles_per_step
    }

    /// Modeled inferences per second when streaming in accelerated time.
    pub fn inference_rate(&self, stats: &ActivityStats) -> Result<f64> {
        let cycles = self.cycles(stats);
        if !(cycles > 0.0) || stats.timesteps == 0 {
            return Err(Error::invalid("no work to time"));
        }
        Ok(self.clock_hz * stats.inferences() / cycles)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub inferences: f64,
    pub inference_rate: f64,
    pub dynamic_power_uw: f64,
    pub active_power_uw: f64,
    pub dynamic_energy_uj_per_inf: f64,
    pub active_energy_uj_per_inf: f64,
    pub provenance: &'static str,
}

/// Energy and power at `inference_rate` inferences per second.
pub fn estimate_energy(stats: &ActivityStats, params: &EnergyModelParams, inference_rate: f64) -> Result<EnergyReport> {
    params.validate()?;
    if !(inference_rate.is_finite() && inference_rate > 0.0) {
        return Err(Error::invalid(format!("inference rate must be positive, got {inference_rate}")));
    }
    let inferences = stats.inferences();
    if inferences == 0.0 {
        return Err(Error::invalid("stats cover no timesteps"));
    }
    let duration_s = inferences / inference_rate;
    // nJ / s = 1e-3 uW
    let dynamic_power_uw = params.dynamic_energy_nj(stats) * 1e-3 / duration_s;
    let active_power_uw = dynamic_power_uw + params.idle_power_uw;
    Ok(EnergyReport {
        inferences,
        inference_rate,
        dynamic_power_uw,
        active_power_uw,
        dynamic_energy_uj_per_inf: dynamic_power_uw / inference_rate,
        active_energy_uj_per_inf: active_power_uw / inference_rate,
        provenance: PROVENANCE,
    })
}

/// Anchor and priors for fitting [`EnergyModelParams`] and [`DeviceTiming`].
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTarget {
    pub spec: SynNetSpec,
    pub profile: ActivityProfile,
    pub dynamic_power_uw: f64,
    pub dynamic_energy_uj_per_inf: f64,
    pub idle_power_uw: f64,
    pub clock_hz: f64,
    pub cycles_per_synop: f64,
    pub cycles_per_step: f64,
    /// Energy per cycle of a neuron update relative to a synop.
    pub update_energy_ratio: f64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        Self {
            spec: SynNetSpec::default(),
            profile: ActivityProfile::default(),
            dynamic_power_uw: 291.0,
            dynamic_energy_uj_per_inf: 6.6,
            idle_power_uw: 216.0,
            clock_hz: 6.25e6,
            cycles_per_synop: 1.0,
            cycles_per_step: 100.0,
            update_energy_ratio: 1.25,
        }
    }
}

/// Fits the update cycle cost to the anchor's inference rate and the per-op
/// energies to its energy per inference.
pub fn calibrate(target: &CalibrationTarget) -> Result<(DeviceTiming, EnergyModelParams)> {
    target.spec.validate()?;
    let positive = [
        target.dynamic_power_uw,
        target.dynamic_energy_uj_per_inf,
        target.clock_hz,
        target.cycles_per_synop,
        target.update_energy_ratio,
    ];
    if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || target.cycles_per_step < 0.0 {
        return Err(Error::config("calibration constants must be positive"));
    }
    let step = target.profile.synthetic_stats(&target.spec, 1);
    let rate = target.dynamic_power_uw / target.dynamic_energy_uj_per_inf;
    let cycles_per_step_total = target.clock_hz / (rate * STEPS_PER_INFERENCE as f64);
    let fixed = step.synops * target.cycles_per_synop + target.cycles_per_step;
    let cycles_per_update = (cycles_per_step_total - fixed) / step.neuron_updates;
    if !(cycles_per_update > 0.0) {
        return Err(Error::config(format!("anchor rate {rate:.2} Inf/s leaves no cycles for neuron updates")));
    }
    let timing = DeviceTiming {
        clock_hz: target.clock_hz,
        cycles_per_synop: target.cycles_per_synop,
        cycles_per_update,
        cycles_per_step: target.cycles_per_step,
    };
    let weighted_cycles = step.synops * target.cycles_per_synop
        + step.neuron_updates * cycles_per_update * target.update_energy_ratio
        + target.cycles_per_step;
    let step_energy_nj = target.dynamic_energy_uj_per_inf * 1e3 / STEPS_PER_INFERENCE as f64;
    let per_cycle = step_energy_nj / weighted_cycles;
    let params = EnergyModelParams {
        idle_power_uw: target.idle_power_uw,
        energy_per_synop_nj: per_cycle * target.cycles_per_synop,
        energy_per_neuron_update_nj: per_cycle * cycles_per_update * target.update_energy_ratio,
        timestep_overhead_nj: per_cycle * target.cycles_per_step,
    };
    Ok((timing, params))
}

/// The seven topologies of the reference size sweep, largest first.
pub fn reference_specs() -> Vec<SynNetSpec> {
    [(160, 60), (110, 60), (150, 50), (60, 60), (140, 40), (130, 30), (120, 20)]
        .into_iter()
        .map(|(first, rest)| {
            SynNetSpec::new(alloc::vec![first, rest, rest, rest, rest, rest], alloc::vec![2, 2, 4, 4, 8, 8])
        })
        .collect()
}

/// Modeled report for `spec` under `profile`, timed by `timing`.
pub fn model_size_report(
    spec: &SynNetSpec,
    profile: &ActivityProfile,
    timing: &DeviceTiming,
    params: &EnergyModelParams,
) -> Result<EnergyReport> {
    let stats = profile.synthetic_stats(spec, 30);
    let rate = timing.inference_rate(&stats)?;
    estimate_energy(&stats, params, rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    #[test]
    fn defaults_are_the_fitted_values() {
        let (timing, params) = calibrate(&CalibrationTarget::default()).unwrap();
        let d = EnergyModelParams::default();
        assert!(close(params.energy_per_synop_nj, d.energy_per_synop_nj, 1e-12), "{params:?}");
        assert!(close(params.energy_per_neuron_update_nj, d.energy_per_neuron_update_nj, 1e-12), "{params:?}");
        assert!(close(params.timestep_overhead_nj, d.timestep_overhead_nj, 1e-12), "{params:?}");
        assert_eq!(params.idle_power_uw, d.idle_power_uw);
        assert!(close(timing.cycles_per_update, DeviceTiming::default().cycles_per_update, 1e-12), "{timing:?}");
    }

    #[test]
    fn anchor_is_reproduced() {
        let spec = SynNetSpec::default();
        let r = model_size_report(
            &spec,
            &ActivityProfile::default(),
            &DeviceTiming::default(),
            &EnergyModelParams::default(),
        )
        .unwrap();
        assert!(close(r.dynamic_power_uw, 291.0, 1e-9), "{r:?}");
        assert!(close(r.dynamic_energy_uj_per_inf, 6.6, 1e-9), "{r:?}");
        assert_eq!(r.provenance, "modeled");
    }

    #[test]
    fn reference_sizes_stay_in_the_energy_range() {
        let specs = reference_specs();
        assert_eq!(
            specs.iter().map(SynNetSpec::total_neurons).collect::<Vec<_>>(),
            [461, 411, 401, 361, 341, 281, 221]
        );
        for spec in &specs {
            let r = model_size_report(
                spec,
                &ActivityProfile::default(),
                &DeviceTiming::default(),
                &EnergyModelParams::default(),
            )
            .unwrap();
            assert!((2.4..=7.3).contains(&r.dynamic_energy_uj_per_inf), "{} neurons: {r:?}", spec.total_neurons());
        }
    }

    #[test]
    fn zero_activity_costs_overhead_only() {
        let params = EnergyModelParams::default();
        let stats = ActivityStats { timesteps: 30, synops: 0.0, neuron_updates: 0.0 };
        let r = estimate_energy(&stats, &params, 50.0).unwrap();
        let overhead_uj = params.timestep_overhead_nj * 10.0 * 1e-3;
        assert!(close(r.dynamic_energy_uj_per_inf, overhead_uj, 1e-12));
        assert!(close(r.active_energy_uj_per_inf, params.idle_power_uw / 50.0 + overhead_uj, 1e-12));
    }

    #[test]
    fn three_second_sample_is_three_inferences() {
        let stats = ActivityStats { timesteps: 30, ..Default::default() };
        assert_eq!(stats.inferences(), 3.0);
    }

    #[test]
    fn invalid_inputs() {
        let stats = ActivityStats { timesteps: 30, synops: 1.0, neuron_updates: 1.0 };
        let p = EnergyModelParams::default();
        assert!(estimate_energy(&stats, &p, 0.0).is_err());
        assert!(estimate_energy(&stats, &EnergyModelParams { energy_per_synop_nj: -1.0, ..p }, 1.0).is_err());
        assert!(estimate_energy(&ActivityStats::default(), &p, 1.0).is_err());
    }

    #[test]
    fn measured_profile_round_trips_through_synthetic_stats() {
        let spec = SynNetSpec::new(alloc::vec![4, 2], alloc::vec![1, 1]);
        let trace = ReadoutTrace {
            v_readout: alloc::vec![0; 10],
            hidden_spike_counts: alloc::vec![alloc::vec![2; 10], alloc::vec![1; 10]],
            synop_count: 0,
            neuron_updates: 70,
            saturation_events: alloc::vec![0; 3],
        };
        let p = ActivityProfile::measure(&spec.hidden_widths, 50, [&trace]).unwrap();
        assert!(close(p.input_events_per_step, 5.0, 1e-15));
        assert!(close(p.hidden_spike_prob, 0.5, 1e-15));
        let s = p.synthetic_stats(&spec, 10);
        // 5*4 + 0.5*4*2 + 0.5*2*1 = 25 per step
        assert!(close(s.synops, 250.0, 1e-15));
        assert_eq!(s.neuron_updates, 70.0);
    }

    proptest! {
        #[test]
        fn dynamic_power_is_linear_in_coefficients(
            synops in 0.0f64..1e6, updates in 0.0f64..1e5, steps in 1u64..1000,
            rate in 1.0f64..500.0, k in 0.1f64..10.0,
        ) {
            let stats = ActivityStats { timesteps: steps, synops, neuron_updates: updates };
            let p = EnergyModelParams::default();
            let a = estimate_energy(&stats, &p, rate).unwrap();
            let b = estimate_energy(&stats, &p.scaled(k), rate).unwrap();
            prop_assert!(close(b.dynamic_power_uw, k * a.dynamic_power_uw, 1e-12));
            let c = estimate_energy(&stats, &p.scaled(2.0), rate).unwrap();
            prop_assert!(close(c.dynamic_power_uw, 2.0 * a.dynamic_power_uw, 1e-12));
        }

        #[test]
        fn inference_count_ignores_activity(steps in 0u64..10_000, synops in 0.0f64..1e9) {
            let a = ActivityStats { timesteps: steps, synops, neuron_updates: synops };
            prop_assert_eq!(a.inferences(), steps as f64 / 10.0);
        }
    }
}
