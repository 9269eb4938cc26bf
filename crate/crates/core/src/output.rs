//! Run manifests and CSV/JSON result files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{LinkBudget, ScenarioConfig};
use crate::error::{Error, Result};
use crate::harness::{SweepRow, SweepSpec, SweepTable};

pub const CSV_HEADER: [&str; 7] =
    ["sweep_param", "value", "scheme", "mean_J_bps", "stderr_J_bps", "mean_NG", "mean_evals"];

const HASH_PREFIX: &str = "# manifest_sha256=";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Provenance record written alongside every result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    /// Linear-unit values derived from `config`.
    pub link_budget: LinkBudget<f64>,
    pub sweep: SweepSpec,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_s: f64,
    pub total_evaluations: f64,
}

impl<'de> Deserialize<'de> for LinkBudget<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            pt_w: f64,
            noise_psd_w_hz: f64,
            noise_power_w: f64,
            bandwidth_hz: f64,
            c0: f64,
        }
        let r = Raw::deserialize(d)?;
        Ok(LinkBudget {
            pt_w: r.pt_w,
            noise_psd_w_hz: r.noise_psd_w_hz,
            noise_power_w: r.noise_power_w,
            bandwidth_hz: r.bandwidth_hz,
            c0: r.c0,
        })
    }
}

impl RunManifest {
    pub fn new(command: &str, sweep: &SweepSpec) -> Self {
        Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: sweep.base.seed,
            config: sweep.base.clone(),
            link_budget: sweep.base.link_budget(),
            sweep: sweep.clone(),
            outputs: Vec::new(),
            wall_clock_s: 0.0,
            total_evaluations: 0.0,
        }
    }

    /// SHA-256 over the reproducible part of the manifest: version, command,
    /// seed, configuration and sweep. Output paths, timing and totals are
    /// excluded so identical runs hash identically.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            artifact_version: &'a str,
            command: &'a str,
            seed: u64,
            config: &'a ScenarioConfig,
            sweep: &'a SweepSpec,
        }
        let key = Key {
            artifact_version: &self.artifact_version,
            command: &self.command,
            seed: self.seed,
            config: &self.config,
            sweep: &self.sweep,
        };
        let bytes = serde_json::to_vec(&key).expect("manifest key serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub manifest_sha256: String,
    pub manifest: RunManifest,
    pub rows: Vec<SweepRow>,
}

pub fn write_csv<W: Write>(table: &SweepTable, manifest_hash: &str, out: W) -> Result<()> {
    let mut out = out;
    writeln!(out, "{HASH_PREFIX}{manifest_hash}").map_err(|e| Error::io("<csv>", e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let ser = |e: csv::Error| Error::Serialize { path: "<csv>".into(), message: e.to_string() };
    w.write_record(CSV_HEADER).map_err(ser)?;
    for row in &table.rows {
        w.serialize(row).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Writes the table at `path` in the requested format. CSV output gets a
/// `<path>.manifest.json` sidecar; JSON output embeds the manifest.
pub fn emit_results(table: &SweepTable, manifest: &RunManifest, format: Format, path: &Path) -> Result<()> {
    let hash = manifest.hash();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    match format {
        Format::Csv => {
            write_csv(table, &hash, &mut writer).map_err(|e| relabel(e, path))?;
            let sidecar = sidecar_path(path);
            let doc = serde_json::json!({ "manifest_sha256": hash, "manifest": manifest });
            let text = serde_json::to_string_pretty(&doc)
                .map_err(|e| Error::Serialize { path: sidecar.clone(), message: e.to_string() })?;
            std::fs::write(&sidecar, text + "\n").map_err(|e| Error::io(&sidecar, e))?;
        }
        Format::Json => {
            let doc = ResultsDocument { manifest_sha256: hash, manifest: manifest.clone(), rows: table.rows.clone() };
            serde_json::to_writer_pretty(&mut writer, &doc)
                .map_err(|e| Error::Serialize { path: path.to_path_buf(), message: e.to_string() })?;
            writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        Error::Serialize { message, .. } => Error::Serialize { path: path.to_path_buf(), message },
        other => other,
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Reads a CSV written by [`emit_results`], returning the embedded manifest
/// hash and the table.
pub fn read_csv(path: &Path) -> Result<(String, SweepTable)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| Error::io(path, e))?;
    let hash = first
        .trim_end()
        .strip_prefix(HASH_PREFIX)
        .ok_or_else(|| Error::Serialize { path: path.to_path_buf(), message: "missing manifest hash line".into() })?
        .to_string();
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Serialize { path: path.to_path_buf(), message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    if header != CSV_HEADER {
        return Err(Error::Serialize { path: path.to_path_buf(), message: format!("unexpected header {header:?}") });
    }
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()
        .map_err(|e| Error::Serialize { path: path.to_path_buf(), message: e.to_string() })?;
    Ok((hash, SweepTable { rows }))
}

pub fn read_json(path: &Path) -> Result<ResultsDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Serialize { path: path.to_path_buf(), message: e.to_string() })
}
