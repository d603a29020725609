//! Command-line interface. Exit status: 0 on success, 1 on validation
//! errors (including bad flags), 2 on I/O errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use snnkws_core::afe::{encode_clip, timesteps_for};
use snnkws_core::energy::{PROVENANCE, STEPS_PER_INFERENCE};
use snnkws_core::quantize::{audit, quantize_with};
use snnkws_core::snn::QuantizedModel;
use snnkws_core::synth::synth_corpus;
use snnkws_core::train::train_with_progress;

use crate::bench::{calibration_report, evaluate, run_samples, summarize, throughput_bench, EvalSettings};
use crate::config::Config;
use crate::dataset::{load_dataset, read_manifest, Dataset};
use crate::error::{KwsError, Result};
use crate::formats::{read_synf, read_synq, write_raster, write_synf, write_synq};
use crate::report::{ensure_dir, num, write_file, Provenance, Table, TextReport};
use crate::wav::{read_wav, write_wav};

#[derive(Debug, Parser)]
#[command(name = "snnkws", version, about = "Spiking keyword-spotting pipeline: encode, train, quantize, evaluate")]
struct Cli {
    /// Seed for data synthesis, initialisation and shuffling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Time per network step used for decay codes and the loss window.
    #[arg(long, global = true)]
    dt_ms: Option<f64>,
    /// Raster bin width (one network step).
    #[arg(long, global = true)]
    bin_ms: Option<f64>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for models and reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the synthetic two-class corpus as WAVs plus train/test manifests.
    Synth {
        #[arg(long)]
        train: Option<usize>,
        #[arg(long)]
        test: Option<usize>,
    },
    /// Encode WAV files (or every entry of a manifest) to EVRS rasters.
    Encode {
        #[arg(long)]
        manifest: Option<PathBuf>,
        inputs: Vec<PathBuf>,
    },
    /// Train a float model; writes model.synf and loss_curve.csv.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Hidden widths, e.g. 32,16.
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        /// Time-constant counts per hidden layer, e.g. 2,2.
        #[arg(long, value_delimiter = ',')]
        tau: Option<Vec<usize>>,
    },
    /// Quantize a SYNF checkpoint to SYNQ, auditing against a manifest if given.
    Quantize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Accuracy, TPR/FPR, ROC summary and modeled energy of a SYNQ model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Readout threshold; defaults to the model's own.
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<i32>,
    },
    /// ROC curve by sweeping the readout threshold.
    Roc {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Wall-clock throughput of the integer engine.
    Bench {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Measure activity sparsity and model the reference sizes' power.
    Calibrate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Print the resolved configuration as TOML.
    ShowConfig,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion
                | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Ctx {
    cfg: Config,
    out: PathBuf,
    prov: Provenance,
}

impl Ctx {
    fn csv(&self, name: &str, table: &Table) -> Result<PathBuf> {
        write_file(&self.out, name, &table.to_csv(&self.prov))
    }

    /// Path of an output file, creating the output directory.
    fn output(&self, name: &str) -> Result<PathBuf> {
        ensure_dir(&self.out)?;
        Ok(self.out.join(name))
    }

    fn text(&self, name: &str, report: &TextReport) -> Result<PathBuf> {
        write_file(&self.out, name, &report.render(&self.prov))
    }

    fn dataset(&self, manifest: &Path) -> Result<Dataset> {
        let ds = load_dataset(manifest, &self.cfg.afe_config()?)?;
        for w in &ds.warnings {
            eprintln!("warning: {w}");
        }
        Ok(ds)
    }
}

fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.dt_ms {
        cfg.dt_ms = d;
    }
    if let Some(b) = cli.bin_ms {
        cfg.bin_ms = b;
    }
    match &cli.command {
        Command::Synth { train, test } => {
            cfg.synth.train_samples = train.unwrap_or(cfg.synth.train_samples);
            cfg.synth.test_samples = test.unwrap_or(cfg.synth.test_samples);
        }
        Command::Train { epochs, lr, hidden, tau, .. } => {
            cfg.train.epochs = epochs.unwrap_or(cfg.train.epochs);
            cfg.train.learning_rate = lr.unwrap_or(cfg.train.learning_rate);
            if let Some(h) = hidden {
                cfg.model.hidden = h.clone();
            }
            if let Some(t) = tau {
                cfg.model.tau = t.clone();
            }
        }
        Command::Roc { points: Some(p), .. } => cfg.bench.roc_points = *p,
        Command::Bench { repeats: Some(r), .. } => cfg.bench.repeats = *r,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    let prov = Provenance { seed: cfg.seed, config_hash: cfg.hash() };
    let ctx = Ctx { cfg, out: cli.out.clone(), prov };
    match cli.command {
        Command::Synth { .. } => cmd_synth(&ctx),
        Command::Encode { manifest, inputs } => cmd_encode(&ctx, manifest.as_deref(), &inputs),
        Command::Train { manifest, .. } => cmd_train(&ctx, &manifest),
        Command::Quantize { model, manifest } => cmd_quantize(&ctx, &model, manifest.as_deref()),
        Command::Eval { model, manifest, threshold } => cmd_eval(&ctx, &model, &manifest, threshold),
        Command::Roc { model, manifest, .. } => cmd_roc(&ctx, &model, &manifest),
        Command::Bench { model, manifest, .. } => cmd_bench(&ctx, &model, &manifest),
        Command::Calibrate { model, manifest } => cmd_calibrate(&ctx, &model, &manifest),
        Command::ShowConfig => {
            print!("{}", ctx.cfg.to_toml());
            Ok(())
        }
    }
}

fn label(target: bool) -> &'static str {
    if target {
        "1"
    } else {
        "0"
    }
}

fn cmd_synth(ctx: &Ctx) -> Result<()> {
    let (train, test) = synth_corpus(&ctx.cfg.synth_config(), ctx.cfg.seed)?;
    let wav_dir = ctx.out.join("wav");
    ensure_dir(&wav_dir)?;
    for (split, samples) in [("train", &train), ("test", &test)] {
        let mut manifest = String::new();
        for s in samples.iter() {
            write_wav(&wav_dir.join(format!("{}.wav", s.name)), &s.clip)?;
            manifest.push_str(&format!("wav/{}.wav\t{}\n", s.name, label(s.target)));
        }
        write_file(&ctx.out, &format!("{split}.tsv"), &manifest)?;
    }
    eprintln!("wrote {} train and {} test clips to {}", train.len(), test.len(), ctx.out.display());
    Ok(())
}

fn stem(path: &Path) -> Result<String> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| KwsError::format(path, "path has no file name"))
}

fn cmd_encode(ctx: &Ctx, manifest: Option<&Path>, inputs: &[PathBuf]) -> Result<()> {
    let afe = ctx.cfg.afe_config()?;
    let mut jobs: Vec<(String, PathBuf, Option<bool>)> =
        inputs.iter().map(|p| (p.display().to_string(), p.clone(), None)).collect();
    if let Some(m) = manifest {
        jobs.extend(read_manifest(m)?.into_iter().map(|e| (e.name, e.path, Some(e.target))));
    }
    if jobs.is_empty() {
        return Err(KwsError::Config("nothing to encode: pass WAV files or --manifest".into()));
    }
    let raster_dir = ctx.out.join("rasters");
    ensure_dir(&raster_dir)?;
    let mut seen = BTreeSet::new();
    let mut table = Table::new(&["input", "label", "raster", "timesteps", "inferences", "events"]);
    let mut out_manifest = String::new();
    for (name, path, target) in &jobs {
        let file = format!("{}.evrs", stem(path)?);
        if !seen.insert(file.clone()) {
            return Err(KwsError::Config(format!("two inputs would both be written to rasters/{file}")));
        }
        let clip = read_wav(path)?;
        let raster = encode_clip(&clip, &afe).map_err(|e| KwsError::format(path, e.to_string()))?;
        write_raster(&raster_dir.join(&file), &raster)?;
        let lbl = target.map_or("", label);
        if target.is_some() {
            out_manifest.push_str(&format!("rasters/{file}\t{lbl}\n"));
        }
        table.push(vec![
            name.clone(),
            lbl.to_string(),
            format!("rasters/{file}"),
            raster.timesteps().to_string(),
            num(raster.timesteps() as f64 / STEPS_PER_INFERENCE as f64),
            raster.total_events().to_string(),
        ]);
    }
    if let Some(m) = manifest {
        write_file(&ctx.out, &format!("{}.evrs.tsv", stem(m)?), &out_manifest)?;
    }
    ctx.csv("encode.csv", &table)?;
    eprintln!(
        "encoded {} clips ({} steps each at {} ms)",
        jobs.len(),
        timesteps_for(afe.duration_s, afe.bin_ms),
        afe.bin_ms
    );
    Ok(())
}

fn cmd_train(ctx: &Ctx, manifest: &Path) -> Result<()> {
    let ds = ctx.dataset(manifest)?;
    let spec = ctx.cfg.spec();
    let tcfg = ctx.cfg.train_config();
    let data = ds.labeled();
    let start = std::time::Instant::now();
    let outcome = train_with_progress(&spec, &data, &tcfg, |s| {
        eprintln!("epoch {:>4}  train {:.5}  val {:.5}  val_acc {:.3}", s.epoch, s.train_loss, s.val_loss, s.val_acc);
    })?;
    eprintln!("trained in {:.1} s", start.elapsed().as_secs_f64());
    write_synf(&ctx.output("model.synf")?, &outcome.model)?;

    let mut curve = Table::new(&["epoch", "train_loss", "val_loss", "val_acc"]);
    for h in &outcome.history {
        curve.push(vec![h.epoch.to_string(), num(h.train_loss), num(h.val_loss), num(h.val_acc)]);
    }
    ctx.csv("loss_curve.csv", &curve)?;
    let best = &outcome.history[outcome.best_epoch - 1];
    let mut t = TextReport::default();
    t.line("hidden", format!("{:?}", spec.hidden_widths))
        .line("tau", format!("{:?}", spec.tau_counts))
        .line("neurons", spec.total_neurons())
        .line("samples", data.len())
        .line("epochs", tcfg.epochs)
        .line("best_epoch", outcome.best_epoch)
        .line("best_val_loss", num(best.val_loss))
        .line("best_val_acc", num(best.val_acc));
    ctx.text("train.txt", &t)?;
    Ok(())
}

fn cmd_quantize(ctx: &Ctx, model: &Path, manifest: Option<&Path>) -> Result<()> {
    let float = read_synf(model)?;
    let q = quantize_with(&float, &ctx.cfg.quant_config())?;
    write_synq(&ctx.output("model.synq")?, &q)?;
    let mut layers = Table::new(&["layer", "inputs", "outputs", "weight_scale", "weight_shift", "threshold_max"]);
    for (k, l) in q.layers.iter().enumerate() {
        layers.push(vec![
            k.to_string(),
            l.inputs.to_string(),
            l.outputs.to_string(),
            num(f64::from(l.weight_scale)),
            l.weight_shift.to_string(),
            l.threshold.iter().max().copied().unwrap_or(0).to_string(),
        ]);
    }
    ctx.csv("quantize.csv", &layers)?;
    if let Some(m) = manifest {
        let ds = ctx.dataset(m)?;
        let rep = audit(&float, &q, &ds.labeled())?;
        let mut t = TextReport::default();
        t.line("samples", rep.samples)
            .line("float_accuracy", num(rep.float_accuracy))
            .line("quantized_accuracy", num(rep.quantized_accuracy))
            .line("gap_points", num(rep.gap_points()))
            .line("disagreements", rep.disagreements)
            .line("max_readout_discrepancy", num(rep.max_readout_discrepancy));
        for (k, l) in rep.layers.iter().enumerate() {
            t.line(&format!("layer{k}_max_weight_error"), num(l.max_abs_error))
                .line(&format!("layer{k}_saturations"), l.saturation_events);
        }
        ctx.text("quantize.txt", &t)?;
    }
    Ok(())
}

fn eval_settings<'a>(ctx: &Ctx, q: &QuantizedModel, threshold: Option<i32>) -> EvalSettings<'a> {
    EvalSettings {
        threshold: threshold.unwrap_or_else(|| q.readout_threshold()),
        grid: None,
        roc_points: ctx.cfg.bench.roc_points,
        bin_ms: ctx.cfg.bin_ms,
        timing: ctx.cfg.device_timing(),
        energy: ctx.cfg.energy_params(),
    }
}

fn cmd_eval(ctx: &Ctx, model: &Path, manifest: &Path, threshold: Option<i32>) -> Result<()> {
    let q = read_synq(model)?;
    let ds = ctx.dataset(manifest)?;
    if ds.is_empty() {
        return Err(KwsError::Config(format!("{}: nothing to evaluate", manifest.display())));
    }
    let runs = run_samples(&q, &ds.samples)?;
    let rep = summarize(&runs, &eval_settings(ctx, &q, threshold))?;

    let mut preds = Table::new(&["sample", "label", "peak", "predicted"]);
    for (s, r) in ds.samples.iter().zip(&runs) {
        preds.push(vec![
            s.name.clone(),
            label(s.target).into(),
            r.peak.to_string(),
            label(r.peak >= rep.threshold).into(),
        ]);
    }
    ctx.csv("predictions.csv", &preds)?;

    let c = rep.confusion;
    let e = rep.energy;
    let mut m = Table::new(&["metric", "value", "kind"]);
    let measured = [
        ("threshold", rep.threshold.to_string()),
        ("samples", c.total().to_string()),
        ("tp", c.tp.to_string()),
        ("fp", c.fp.to_string()),
        ("tn", c.tn.to_string()),
        ("fn", c.fn_.to_string()),
        ("accuracy", num(rep.accuracy)),
        ("tpr", num(rep.tpr)),
        ("fpr", num(rep.fpr)),
        ("auc", num(rep.auc)),
        ("inferences", num(rep.activity.inferences())),
        ("synops_per_inference", num(rep.synops_per_inference)),
        ("inferences_per_s_realtime", num(rep.realtime_inferences_per_s)),
    ];
    for (k, v) in measured {
        m.push(vec![k.into(), v, "computed".into()]);
    }
    let modeled = [
        ("inferences_per_s_device", e.inference_rate),
        ("dynamic_power_uw", e.dynamic_power_uw),
        ("active_power_uw", e.active_power_uw),
        ("dynamic_energy_uj_per_inf", e.dynamic_energy_uj_per_inf),
        ("active_energy_uj_per_inf", e.active_energy_uj_per_inf),
    ];
    for (k, v) in modeled {
        m.push(vec![k.into(), num(v), PROVENANCE.into()]);
    }
    ctx.csv("eval.csv", &m)?;

    let mut t = TextReport::default();
    t.line("samples", c.total())
        .line("threshold", rep.threshold)
        .line("accuracy", format!("{:.2}%", 100.0 * rep.accuracy))
        .line("tpr", format!("{:.2}%", 100.0 * rep.tpr))
        .line("fpr", format!("{:.2}%", 100.0 * rep.fpr))
        .line("confusion", format!("TP {} FP {} TN {} FN {}", c.tp, c.fp, c.tn, c.fn_))
        .line("auc", num(rep.auc))
        .line("synops/inference", num(rep.synops_per_inference))
        .line("inferences/s (real time)", num(rep.realtime_inferences_per_s))
        .line("inferences/s (device, modeled)", num(e.inference_rate))
        .line("dynamic power (modeled)", format!("{:.1} uW", e.dynamic_power_uw))
        .line("dynamic energy (modeled)", format!("{:.3} uJ/Inf", e.dynamic_energy_uj_per_inf))
        .line("active energy (modeled)", format!("{:.3} uJ/Inf", e.active_energy_uj_per_inf));
    ctx.text("eval.txt", &t)?;
    print!("{}", t.render(&ctx.prov));
    Ok(())
}

fn cmd_roc(ctx: &Ctx, model: &Path, manifest: &Path) -> Result<()> {
    let q = read_synq(model)?;
    let ds = ctx.dataset(manifest)?;
    let rep = evaluate(&q, &ds.samples, &eval_settings(ctx, &q, None))?;
    let mut t = Table::new(&["threshold", "tpr", "fpr", "accuracy"]);
    for p in &rep.roc {
        t.push(vec![p.threshold.to_string(), num(p.tpr), num(p.fpr), num(p.accuracy)]);
    }
    ctx.csv("roc.csv", &t)?;
    let mut txt = TextReport::default();
    txt.line("points", rep.roc.len()).line("auc", num(rep.auc));
    ctx.text("roc.txt", &txt)?;
    Ok(())
}

fn cmd_bench(ctx: &Ctx, model: &Path, manifest: &Path) -> Result<()> {
    let q = read_synq(model)?;
    let ds = ctx.dataset(manifest)?;
    let rasters: Vec<_> = ds.samples.iter().map(|s| s.raster.clone()).collect();
    let rep = throughput_bench(&q, &rasters, ctx.cfg.bench.repeats)?;
    let mut t = Table::new(&["repeat", "inferences_per_s_wall"]);
    for (i, r) in rep.per_repeat.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), num(*r)]);
    }
    ctx.csv("bench.csv", &t)?;
    let runs = run_samples(&q, &ds.samples)?;
    let eval = summarize(&runs, &eval_settings(ctx, &q, None))?;
    let mut txt = TextReport::default();
    txt.line("samples", rasters.len())
        .line("inferences per pass", num(rep.inferences_per_repeat))
        .line("inferences/s (wall clock, median)", num(rep.wall_inferences_per_s))
        .line("inferences/s (real time)", num(eval.realtime_inferences_per_s))
        .line("inferences/s (device, modeled)", num(eval.inferences_per_s))
        .line("synops/inference", num(rep.synops_per_inference))
        .line("neuron updates/inference", num(rep.neuron_updates_per_inference))
        .line("dynamic energy (modeled)", format!("{:.3} uJ/Inf", eval.energy.dynamic_energy_uj_per_inf))
        .line("active energy (modeled)", format!("{:.3} uJ/Inf", eval.energy.active_energy_uj_per_inf));
    ctx.text("bench.txt", &txt)?;
    print!("{}", txt.render(&ctx.prov));
    Ok(())
}

fn cmd_calibrate(ctx: &Ctx, model: &Path, manifest: &Path) -> Result<()> {
    let q = read_synq(model)?;
    let ds = ctx.dataset(manifest)?;
    if ds.is_empty() {
        return Err(KwsError::Config(format!("{}: nothing to measure", manifest.display())));
    }
    let runs = run_samples(&q, &ds.samples)?;
    let hidden: Vec<usize> = q.layers[..q.layers.len() - 1].iter().map(|l| l.outputs).collect();
    let rep = calibration_report(&hidden, &runs, &ctx.cfg.device_timing(), &ctx.cfg.energy_params())?;
    let mut t = Table::new(&[
        "neurons",
        "hidden",
        "inferences_per_s_modeled",
        "dynamic_power_uw_modeled",
        "dynamic_energy_uj_per_inf_modeled",
        "active_energy_uj_per_inf_modeled",
        "in_band",
    ]);
    for r in &rep.sizes {
        t.push(vec![
            r.neurons.to_string(),
            r.hidden.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
            num(r.report.inference_rate),
            num(r.report.dynamic_power_uw),
            num(r.report.dynamic_energy_uj_per_inf),
            num(r.report.active_energy_uj_per_inf),
            r.in_band().to_string(),
        ]);
    }
    ctx.csv("calibration.csv", &t)?;
    let (timing, params) = rep.fitted;
    let mut txt = TextReport::default();
    txt.line("note", "all power and energy figures are modeled, not measured")
        .line("input_events_per_step", num(rep.profile.input_events_per_step))
        .line("hidden_spike_prob", num(rep.profile.hidden_spike_prob))
        .line("sizes_in_251_298_uw", format!("{} of {}", rep.sizes_in_band(), rep.sizes.len()))
        .line("refit cycles_per_update", format!("{:?}", timing.cycles_per_update))
        .line("refit energy_per_synop_nj", format!("{:?}", params.energy_per_synop_nj))
        .line("refit energy_per_neuron_update_nj", format!("{:?}", params.energy_per_neuron_update_nj))
        .line("refit timestep_overhead_nj", format!("{:?}", params.timestep_overhead_nj));
    ctx.text("calibration.txt", &txt)?;
    print!("{}", txt.render(&ctx.prov));
    Ok(())
}
