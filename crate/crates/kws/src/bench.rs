//! Evaluation, ROC, throughput and energy accounting over datasets.

use std::time::Instant;

use rayon::prelude::*;
use snnkws_core::afe::EventRaster;
use snnkws_core::energy::{
    calibrate, estimate_energy, model_size_report, reference_specs, ActivityProfile, ActivityStats, CalibrationTarget,
    DeviceTiming, EnergyModelParams, EnergyReport, STEPS_PER_INFERENCE,
};
use snnkws_core::metrics::{auc, confusion_at, default_grid, roc_from_peaks, Confusion, RocPoint};
use snnkws_core::snn::{forward_int, QuantizedModel, ReadoutTrace};

use crate::dataset::{with_pool, Sample};
use crate::error::{KwsError, Result};

/// Per-sample result of one integer forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub peak: i32,
    pub target: bool,
    pub input_events: u64,
    pub trace: ReadoutTrace,
}

/// Runs every sample through the integer engine, in parallel, keeping order.
pub fn run_samples(model: &QuantizedModel, samples: &[Sample]) -> Result<Vec<SampleRun>> {
    with_pool(|| {
        samples
            .par_iter()
            .map(|s| {
                let trace = forward_int(model, &s.raster).map_err(|e| KwsError::format(&s.path, e.to_string()))?;
                let peak = trace.peak().map_or(i32::MIN, i32::from);
                Ok(SampleRun { peak, target: s.target, input_events: s.raster.total_events(), trace })
            })
            .collect()
    })?
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub threshold: i32,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub roc: Vec<RocPoint>,
    pub auc: f64,
    pub activity: ActivityStats,
    pub synops_per_inference: f64,
    /// Modeled device rate in accelerated streaming.
    pub inferences_per_s: f64,
    /// Rate when audio arrives in real time.
    pub realtime_inferences_per_s: f64,
    pub energy: EnergyReport,
}

/// Network steps per second of real-time audio.
pub fn realtime_rate(bin_ms: f64) -> f64 {
    1000.0 / (bin_ms * STEPS_PER_INFERENCE as f64)
}

pub struct EvalSettings<'a> {
    pub threshold: i32,
    /// Explicit ROC grid; otherwise `roc_points` thresholds over the peak range.
    pub grid: Option<&'a [i32]>,
    pub roc_points: usize,
    pub bin_ms: f64,
    pub timing: DeviceTiming,
    pub energy: EnergyModelParams,
}

pub fn evaluate(model: &QuantizedModel, samples: &[Sample], settings: &EvalSettings) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(KwsError::Config("cannot evaluate an empty dataset".into()));
    }
    let runs = run_samples(model, samples)?;
    summarize(&runs, settings)
}

/// Builds a report from cached forward passes.
pub fn summarize(runs: &[SampleRun], settings: &EvalSettings) -> Result<EvalReport> {
    let peaks: Vec<i32> = runs.iter().map(|r| r.peak).collect();
    let targets: Vec<bool> = runs.iter().map(|r| r.target).collect();
    let confusion = confusion_at(&peaks, &targets, settings.threshold);
    let grid = match settings.grid {
        Some(g) => g.to_vec(),
        None => default_grid(&peaks, settings.roc_points),
    };
    let roc = roc_from_peaks(&peaks, &targets, &grid)?;
    let mut activity = ActivityStats::default();
    for r in runs {
        activity.merge(&ActivityStats::from_trace(&r.trace));
    }
    let inferences_per_s = settings.timing.inference_rate(&activity)?;
    let energy = estimate_energy(&activity, &settings.energy, inferences_per_s)?;
    Ok(EvalReport {
        threshold: settings.threshold,
        accuracy: confusion.accuracy(),
        tpr: confusion.tpr(),
        fpr: confusion.fpr(),
        confusion,
        roc,
        auc: auc(&peaks, &targets),
        synops_per_inference: activity.synops_per_inference(),
        activity,
        inferences_per_s,
        realtime_inferences_per_s: realtime_rate(settings.bin_ms),
        energy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub repeats: usize,
    pub inferences_per_repeat: f64,
    /// Median over repeats of wall-clock inferences per second.
    pub wall_inferences_per_s: f64,
    pub per_repeat: Vec<f64>,
    pub synops_per_inference: f64,
    pub neuron_updates_per_inference: f64,
}

/// Times `repeats` sequential passes over `rasters` on this thread.
pub fn throughput_bench(model: &QuantizedModel, rasters: &[EventRaster], repeats: usize) -> Result<ThroughputReport> {
    if repeats == 0 {
        return Err(KwsError::Config("repeats must be at least 1".into()));
    }
    if rasters.is_empty() {
        return Err(KwsError::Config("nothing to benchmark".into()));
    }
    let mut activity = ActivityStats::default();
    let mut per_repeat = Vec::with_capacity(repeats);
    for rep in 0..repeats {
        let start = Instant::now();
        let mut steps = 0u64;
        for r in rasters {
            let trace = forward_int(model, r)?;
            steps += trace.timesteps() as u64;
            if rep == 0 {
                activity.merge(&ActivityStats::from_trace(&trace));
            }
        }
        let secs = start.elapsed().as_secs_f64().max(1e-9);
        per_repeat.push(steps as f64 / STEPS_PER_INFERENCE as f64 / secs);
    }
    let mut sorted = per_repeat.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) };
    let inferences = activity.inferences();
    Ok(ThroughputReport {
        repeats,
        inferences_per_repeat: inferences,
        wall_inferences_per_s: median,
        per_repeat,
        synops_per_inference: activity.synops_per_inference(),
        neuron_updates_per_inference: activity.neuron_updates / inferences,
    })
}

/// One row of the size sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeRow {
    pub neurons: usize,
    pub hidden: Vec<usize>,
    pub report: EnergyReport,
}

pub const DYNAMIC_POWER_BAND_UW: (f64, f64) = (251.0, 298.0);

impl SizeRow {
    pub fn in_band(&self) -> bool {
        (DYNAMIC_POWER_BAND_UW.0..=DYNAMIC_POWER_BAND_UW.1).contains(&self.report.dynamic_power_uw)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub profile: ActivityProfile,
    /// Coefficients refitted to the measured profile.
    pub fitted: (DeviceTiming, EnergyModelParams),
    /// Reference sizes under the supplied coefficients and the measured profile.
    pub sizes: Vec<SizeRow>,
}

impl CalibrationReport {
    pub fn sizes_in_band(&self) -> usize {
        self.sizes.iter().filter(|r| r.in_band()).count()
    }
}

/// Measures the activity profile of `runs` (from a model with hidden widths
/// `hidden`) and models the reference sizes at that sparsity.
pub fn calibration_report(
    hidden: &[usize],
    runs: &[SampleRun],
    timing: &DeviceTiming,
    params: &EnergyModelParams,
) -> Result<CalibrationReport> {
    let events = runs.iter().map(|r| r.input_events).sum();
    let profile = ActivityProfile::measure(hidden, events, runs.iter().map(|r| &r.trace))?;
    let fitted = calibrate(&CalibrationTarget { profile, ..CalibrationTarget::default() })?;
    let sizes = reference_specs()
        .into_iter()
        .map(|spec| {
            let report = model_size_report(&spec, &profile, timing, params)?;
            Ok(SizeRow { neurons: spec.total_neurons(), hidden: spec.hidden_widths.clone(), report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CalibrationReport { profile, fitted, sizes })
}
