//! Acceptance suite: one PASS/FAIL/SKIP line per criterion. Criterion 5
//! runs only when `SNNKWS_ALOHA_DIR` names a directory holding `train.tsv`
//! and `test.tsv` manifests.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use snnkws::bench::{calibration_report, run_samples, summarize, throughput_bench, EvalSettings, SampleRun};
use snnkws::config::Config;
use snnkws::dataset::{load_dataset, Sample};
use snnkws_core::afe::{design_filterbank, encode_clip, AudioClip, EventRaster, FilterbankConfig};
use snnkws_core::energy::ActivityStats;
use snnkws_core::metrics::roc_from_peaks;
use snnkws_core::quantize::{audit, quantize_with};
use snnkws_core::snn::{build_model, forward_int, QuantizedModel, SynNetSpec};
use snnkws_core::synth::{synth_corpus, SynthConfig, SynthSample};
use snnkws_core::train::{grad_check, train, LabeledRaster, PeakLoss};

const SEED: u64 = 0;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

fn filterbank_fidelity() -> Outcome {
    let start = Instant::now();
    let cfg = FilterbankConfig::default();
    let bank = design_filterbank(&cfg, 48_000).unwrap();
    let (mut centre, mut edge) = (0.0f64, 0.0f64);
    for (band, f) in bank.bands.iter().zip(cfg.center_frequencies()) {
        centre = centre.max(db(band.magnitude_at(f, 48_000.0)).abs());
        for e in [f - f / 8.0, f + f / 8.0] {
            edge = edge.max((db(band.magnitude_at(e, 48_000.0)) + 3.0).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        bank.bands.len() == 16 && centre < 1.0 && edge < 1.5 && secs < 5.0,
        format!(
            "{} bands, worst centre {centre:.3} dB, worst edge {edge:.3} dB from -3 dB, {secs:.2} s",
            bank.bands.len()
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut bound_misses = 0;
    let mut worst = 0.0f64;
    let set = common::instances(2024, 200);
    for inst in &set {
        let trace = forward_int(&inst.model, &inst.raster).unwrap();
        let expected = common::oracle(&inst.model, &inst.raster).unwrap();
        if trace.v_readout != expected.readout || trace.total_saturations() != 0 {
            mismatches += 1;
        }
        let (excess, abs) = common::float_discrepancy(&inst.model, &inst.raster, &trace.v_readout);
        worst = worst.max(abs);
        if excess > 0.0 {
            bound_misses += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        set.len() == 200 && mismatches == 0 && bound_misses == 0 && secs < 60.0,
        format!(
            "{} instances, {mismatches} oracle mismatches, {bound_misses} over the 2(t+1) LSB float bound (worst {worst:.1} LSB), {secs:.2} s",
            set.len()
        ),
    )
}

fn peak_loss_analytics() -> Outcome {
    let start = Instant::now();
    let l = PeakLoss::default();
    let dt = 10.0;
    let exact = l.loss(&[l.target; 30], true, dt).unwrap() == 0.0
        && l.loss(&[0.0; 30], false, dt).unwrap() == 0.0
        && l.loss(&[1.0; 30], false, dt).unwrap() == l.nontarget_weight;

    let spec = SynNetSpec::new(vec![8], vec![2]);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = 0.0f64;
    let mut informative = 0;
    let probes = 20;
    for p in 0..probes {
        let mut model = build_model(&spec, p).unwrap();
        model.layers[0].weights.iter_mut().for_each(|w| *w *= 4.0);
        let mut raster = EventRaster::zeros(16, 30, 100.0);
        for c in 0..16 {
            for t in 0..30 {
                if rng.gen_bool(0.3) {
                    raster.set(c, t, rng.gen_range(1..4));
                }
            }
        }
        let sample = LabeledRaster { raster, target: p % 2 == 0 };
        let gc = grad_check(&model, &sample, &l, dt, 8).unwrap();
        if !gc.inconclusive() {
            informative += 1;
            worst = worst.max(gc.max_relative_error);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        exact && informative >= probes / 2 && worst < 1e-4 && secs < 60.0,
        format!(
            "examples {}, {informative}/{probes} informative probes, max relative error {worst:.2e}, {secs:.2} s",
            if exact { "exact" } else { "WRONG" }
        ),
    )
}

fn encode_all(clips: &[SynthSample], cfg: &Config) -> Vec<Sample> {
    let afe = cfg.afe_config().unwrap();
    clips
        .par_iter()
        .map(|s| Sample {
            name: s.name.clone(),
            path: PathBuf::from(&s.name),
            raster: encode_clip(&s.clip, &afe).unwrap(),
            target: s.target,
        })
        .collect()
}

fn labeled(samples: &[Sample]) -> Vec<LabeledRaster> {
    samples.iter().map(|s| LabeledRaster { raster: s.raster.clone(), target: s.target }).collect()
}

fn settings(cfg: &Config, threshold: i32) -> EvalSettings<'static> {
    EvalSettings {
        threshold,
        grid: None,
        roc_points: cfg.bench.roc_points,
        bin_ms: cfg.bin_ms,
        timing: cfg.device_timing(),
        energy: cfg.energy_params(),
    }
}

struct Desk {
    model: QuantizedModel,
    runs: Vec<SampleRun>,
}

fn desk_end_to_end(cfg: &Config) -> (Outcome, Option<Desk>) {
    let start = Instant::now();
    let (train_clips, test_clips) = synth_corpus(&SynthConfig::default(), cfg.seed).unwrap();
    let train_set = encode_all(&train_clips, cfg);
    let test_set = encode_all(&test_clips, cfg);
    let outcome = train(&cfg.spec(), &labeled(&train_set), &cfg.train_config()).unwrap();
    let q = quantize_with(&outcome.model, &cfg.quant_config()).unwrap();
    let rep = audit(&outcome.model, &q, &labeled(&test_set)).unwrap();
    let elapsed = start.elapsed();
    let runs = run_samples(&q, &test_set).unwrap();
    let ok = train_set.len() == 400
        && test_set.len() == 100
        && rep.float_accuracy >= 0.90
        && rep.quantized_accuracy >= 0.90
        && rep.gap_points() <= 2.0
        && elapsed <= Duration::from_secs(600);
    let detail = format!(
        "H={:?} tau={:?}, {} train / {} test, float {:.1}%, quantized {:.1}%, drop {:.1} points, {:.1} s",
        cfg.model.hidden,
        cfg.model.tau,
        train_set.len(),
        test_set.len(),
        100.0 * rep.float_accuracy,
        100.0 * rep.quantized_accuracy,
        rep.gap_points(),
        elapsed.as_secs_f64()
    );
    (check(ok, detail), Some(Desk { model: q, runs }))
}

fn aloha(cfg: &Config) -> Outcome {
    let Some(dir) = std::env::var_os("SNNKWS_ALOHA_DIR") else {
        return Outcome::Skip("SNNKWS_ALOHA_DIR not set".into());
    };
    let dir = Path::new(&dir);
    let (train_m, test_m) = (dir.join("train.tsv"), dir.join("test.tsv"));
    if !train_m.is_file() || !test_m.is_file() {
        return Outcome::Skip(format!("{} lacks train.tsv/test.tsv", dir.display()));
    }
    let afe = cfg.afe_config().unwrap();
    let (train_set, test_set) = match (load_dataset(&train_m, &afe), load_dataset(&test_m, &afe)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::Fail(format!("loading dataset: {e}")),
    };
    let outcome = train(&cfg.spec(), &train_set.labeled(), &cfg.train_config()).unwrap();
    let q = quantize_with(&outcome.model, &cfg.quant_config()).unwrap();
    let runs = run_samples(&q, &test_set.samples).unwrap();
    let rep = summarize(&runs, &settings(cfg, q.readout_threshold())).unwrap();
    let (acc, tpr, fpr) = (100.0 * rep.accuracy, 100.0 * rep.tpr, 100.0 * rep.fpr);
    check(
        acc >= 93.0,
        format!(
            "quantized accuracy {acc:.2}% (reference {:+.2}), TPR {tpr:.2}% ({:+.2}), FPR {fpr:.2}% ({:+.2})",
            acc - 95.31,
            tpr - 91.67,
            fpr - 1.04
        ),
    )
}

fn inference_accounting(cfg: &Config, model: &QuantizedModel) -> Outcome {
    let afe = cfg.afe_config().unwrap();
    let synth = SynthConfig { train_samples: 2, test_samples: 2, ..SynthConfig::default() };
    let (clips, _) = synth_corpus(&synth, 99).unwrap();
    let mut clips: Vec<AudioClip> = clips.into_iter().map(|s| s.clip).collect();
    clips.push(AudioClip::new(vec![0.0; 144_000], 48_000).unwrap());
    let mut bad = Vec::new();
    for (i, c) in clips.iter().enumerate() {
        let r = encode_clip(c, &afe).unwrap();
        let trace = forward_int(model, &r).unwrap();
        let inferences = ActivityStats::from_trace(&trace).inferences();
        let bench = throughput_bench(model, std::slice::from_ref(&r), 1).unwrap();
        if r.timesteps() != 30 || trace.timesteps() != 30 || inferences != 3.0 || bench.inferences_per_repeat != 3.0 {
            bad.push(format!("clip {i}: {} steps, {inferences} inferences", r.timesteps()));
        }
    }
    let mut detail = format!("{} clips of 3 s at 100 ms bins -> 30 steps, 3 inferences", clips.len());
    if !bad.is_empty() {
        detail = format!("{detail}; mismatches: {}", bad.join("; "));
    }
    check(bad.is_empty(), detail)
}

fn roc_properties(cfg: &Config, desk: &Desk) -> Outcome {
    let rep = summarize(&desk.runs, &settings(cfg, desk.model.readout_threshold())).unwrap();
    let peaks: Vec<i32> = desk.runs.iter().map(|r| r.peak).collect();
    let targets: Vec<bool> = desk.runs.iter().map(|r| r.target).collect();
    let ends = roc_from_peaks(&peaks, &targets, &[i32::MIN, i32::MAX]).unwrap();
    let ends_ok = (ends[0].tpr, ends[0].fpr) == (1.0, 1.0) && (ends[1].tpr, ends[1].fpr) == (0.0, 0.0);
    let monotone = rep.roc.windows(2).all(|w| w[1].tpr <= w[0].tpr && w[1].fpr <= w[0].fpr);
    let first = rep.roc[0];
    let last = rep.roc[rep.roc.len() - 1];
    let grid_ends = (first.tpr, first.fpr) == (1.0, 1.0) && (last.tpr, last.fpr) == (0.0, 0.0);
    check(
        ends_ok && monotone && grid_ends && rep.auc >= 0.95,
        format!(
            "endpoints {}, {} grid points {}, AUC {:.4}",
            if ends_ok && grid_ends { "(1,1)/(0,0)" } else { "WRONG" },
            rep.roc.len(),
            if monotone { "monotone" } else { "NOT monotone" },
            rep.auc
        ),
    )
}

fn energy_sanity(cfg: &Config, desk: &Desk) -> Outcome {
    let hidden: Vec<usize> = desk.model.layers[..desk.model.layers.len() - 1].iter().map(|l| l.outputs).collect();
    let rep = calibration_report(&hidden, &desk.runs, &cfg.device_timing(), &cfg.energy_params()).unwrap();
    let rows: Vec<String> =
        rep.sizes.iter().map(|r| format!("{}:{:.1}", r.neurons, r.report.dynamic_power_uw)).collect();
    check(
        rep.sizes.len() == 7 && rep.sizes_in_band() >= 5,
        format!(
            "modeled, not measured: {}/7 sizes in 251-298 uW at p={:.4}, {:.3} events/step [{}]",
            rep.sizes_in_band(),
            rep.profile.hidden_spike_prob,
            rep.profile.input_events_per_step,
            rows.join(" ")
        ),
    )
}

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_snnkws"))
        .arg("--out")
        .arg(dir)
        .args(["--seed", "17"])
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline(dir: &Path) -> Result<(), String> {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    cli(dir, &["synth", "--train", "60", "--test", "30"])?;
    cli(dir, &["encode", "--manifest", &p("train.tsv")])?;
    cli(dir, &["encode", "--manifest", &p("test.tsv")])?;
    cli(dir, &["train", "--manifest", &p("train.evrs.tsv"), "--epochs", "5"])?;
    cli(dir, &["quantize", "--model", &p("model.synf"), "--manifest", &p("test.evrs.tsv")])?;
    cli(dir, &["eval", "--model", &p("model.synq"), "--manifest", &p("test.evrs.tsv")])
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    if let Err(e) = pipeline(&a).and_then(|_| pipeline(&b)) {
        return Outcome::Fail(e);
    }
    let mut names: Vec<String> = std::fs::read_dir(&a)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let differing: Vec<&String> =
        names.iter().filter(|n| std::fs::read(a.join(n)).ok() != std::fs::read(b.join(n)).ok()).collect();
    check(
        names.len() >= 10 && differing.is_empty(),
        format!("{} output files compared, differing: {differing:?}", names.len()),
    )
}

fn main() {
    let cfg = Config { seed: SEED, ..Config::default() };
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "filterbank fidelity", filterbank_fidelity()));
    results.push((2, "integer engine oracle equivalence", oracle_equivalence()));
    results.push((3, "PeakLoss analytics", peak_loss_analytics()));
    let (o4, desk) = desk_end_to_end(&cfg);
    results.push((4, "desk-scale end-to-end", o4));
    results.push((5, "Aloha reproduction", aloha(&cfg)));
    let desk = desk.expect("desk model");
    results.push((6, "inference accounting", inference_accounting(&cfg, &desk.model)));
    results.push((7, "ROC properties", roc_properties(&cfg, &desk)));
    results.push((8, "energy model sanity", energy_sanity(&cfg, &desk)));
    results.push((9, "determinism", determinism()));

    let mut failed = 0;
    for (n, name, outcome) in &results {
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {n} {name}: {detail}");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
