//! Manifest-driven datasets. A manifest is UTF-8 text with one
//! `path<TAB>label` line per sample, label 0 or 1; relative paths resolve
//! against the manifest's directory. Blank lines and `#` comments are skipped.
//! Entries ending in `.evrs` are read as rasters, anything else as WAV.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use snnkws_core::afe::{encode_clip, AfeConfig, EventRaster};
use snnkws_core::train::LabeledRaster;

use crate::error::{KwsError, Result};
use crate::formats::read_raster;
use crate::wav::read_wav;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "SNNKWS_THREADS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path as written in the manifest.
    pub name: String,
    pub path: PathBuf,
    pub target: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub name: String,
    pub path: PathBuf,
    pub raster: EventRaster,
    pub target: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn labeled(&self) -> Vec<LabeledRaster> {
        self.samples.iter().map(|s| LabeledRaster { raster: s.raster.clone(), target: s.target }).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Parses manifest text, collecting every malformed line.
pub fn parse_manifest(text: &str, base: &Path) -> std::result::Result<Vec<ManifestEntry>, Vec<String>> {
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((path, label)) = line.rsplit_once('\t') else {
            errors.push(format!("line {}: expected `path<TAB>label`, got {line:?}", n + 1));
            continue;
        };
        let target = match label.trim() {
            "0" => false,
            "1" => true,
            other => {
                errors.push(format!("line {}: {path}: label must be 0 or 1, got {other:?}", n + 1));
                continue;
            }
        };
        let p = Path::new(path);
        let resolved = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        entries.push(ManifestEntry { name: path.to_string(), path: resolved, target });
    }
    if errors.is_empty() {
        Ok(entries)
    } else {
        Err(errors)
    }
}

pub fn read_manifest(manifest: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(manifest).map_err(|e| KwsError::io(manifest, e))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base).map_err(|errors| KwsError::Dataset { manifest: manifest.into(), errors, io: false })
}

/// Reads or encodes one entry.
pub fn load_raster(path: &Path, afe: &AfeConfig) -> Result<EventRaster> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("evrs")) {
        let r = read_raster(path)?;
        if r.channels() != afe.filterbank.num_bands || (r.bin_ms() - afe.bin_ms).abs() > 1e-6 {
            return Err(KwsError::format(
                path,
                format!(
                    "raster has {} channels at {} ms bins, configuration expects {} at {} ms",
                    r.channels(),
                    r.bin_ms(),
                    afe.filterbank.num_bands,
                    afe.bin_ms
                ),
            ));
        }
        Ok(r)
    } else {
        let clip = read_wav(path)?;
        encode_clip(&clip, afe).map_err(|e| KwsError::format(path, e.to_string()))
    }
}

/// Loads every manifest entry in order, encoding WAVs in parallel. All
/// failing entries are reported together.
pub fn load_dataset(manifest: &Path, afe: &AfeConfig) -> Result<Dataset> {
    let entries = read_manifest(manifest)?;
    let mut warnings = Vec::new();
    if entries.is_empty() {
        warnings.push(format!("{}: manifest lists no samples", manifest.display()));
    }
    let loaded: Vec<Result<EventRaster>> =
        with_pool(|| entries.par_iter().map(|e| load_raster(&e.path, afe)).collect())?;
    let mut samples = Vec::with_capacity(entries.len());
    let mut errors = Vec::new();
    let mut io = false;
    for (entry, r) in entries.into_iter().zip(loaded) {
        match r {
            Ok(raster) => samples.push(Sample { name: entry.name, path: entry.path, raster, target: entry.target }),
            Err(e) => {
                io |= matches!(e, KwsError::Io { .. });
                errors.push(e.to_string());
            }
        }
    }
    if !errors.is_empty() {
        return Err(KwsError::Dataset { manifest: manifest.into(), errors, io });
    }
    Ok(Dataset { samples, warnings })
}

/// Worker count from `SNNKWS_THREADS`, or `None` for the rayon default.
pub fn thread_limit() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(KwsError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Runs `f` on a pool sized by `SNNKWS_THREADS`.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_limit()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| KwsError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
