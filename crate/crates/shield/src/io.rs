//! Trace, event and report files, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use shield_core::defense::ControllerEvent;
use shield_core::sim::Windows;

use crate::config::Config;
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.toml";

/// Header fields of an exported trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHeader {
    pub scenario_id: String,
    pub seed: u64,
    pub config_hash: String,
}

/// `tick_index,sample` rows preceded by `#` metadata lines. `tick_index` is
/// the first tick of the sample window.
pub fn trace_csv(header: &TraceHeader, samples: &[u64], windows: Windows) -> Vec<u8> {
    let mut out = format!(
        "# scenario_id: {}\n# seed: {}\n# config_hash: {}\n",
        header.scenario_id, header.seed, header.config_hash
    )
    .into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tick_index", "sample"]).expect("in-memory write");
    for (j, s) in samples.iter().enumerate() {
        let tick = windows.boundary(j as u64).ceil() as u64;
        w.write_record([tick.to_string(), s.to_string()]).expect("in-memory write");
    }
    out.extend(w.into_inner().expect("in-memory flush"));
    out
}

pub fn read_trace(path: &Path) -> Result<(TraceHeader, Vec<u64>)> {
    let text = fs::read_to_string(path)?;
    let mut header = TraceHeader {
        scenario_id: String::new(),
        seed: 0,
        config_hash: String::new(),
    };
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let Some((k, v)) = line[1..].split_once(':') else { continue };
        let v = v.trim();
        match k.trim() {
            "scenario_id" => header.scenario_id = v.to_string(),
            "seed" => {
                header.seed = v
                    .parse()
                    .map_err(|_| Error::runtime(format!("{}: bad seed `{v}`", path.display())))?
            }
            "config_hash" => header.config_hash = v.to_string(),
            _ => {}
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let cols = r.headers()?.clone();
    if cols.iter().collect::<Vec<_>>() != ["tick_index", "sample"] {
        return Err(Error::runtime(format!("{}: expected header tick_index,sample", path.display())));
    }
    let mut samples = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let s = rec
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::runtime(format!("{}: bad sample row {:?}", path.display(), rec)))?;
        samples.push(s);
    }
    Ok((header, samples))
}

/// All `trace_*.csv` files of a directory in name order.
pub fn read_trace_dir(dir: &Path) -> Result<Vec<(TraceHeader, Vec<u64>)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("trace_") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::runtime(format!("no trace_*.csv files in {}", dir.display())));
    }
    paths.iter().map(|p| read_trace(p)).collect()
}

pub fn events_csv(events: &[ControllerEvent]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sample_index", "event", "active_k", "threshold"])
        .expect("in-memory write");
    for e in events {
        w.write_record([
            e.sample_index.to_string(),
            e.transition.name().to_string(),
            e.active_k.to_string(),
            e.threshold.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// CSV from a header and already formatted rows.
pub fn table<S: AsRef<str>>(header: &[&str], rows: &[Vec<S>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.iter().map(|c| c.as_ref())).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Files produced by one command, held in memory until written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    pub fn listing(&self) -> Vec<OutputFile> {
        self.files
            .iter()
            .map(|(p, b)| OutputFile {
                path: p.clone(),
                sha256: sha256_hex(b),
            })
            .collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for (rel, bytes) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, bytes)?;
        }
        Ok(())
    }
}

/// Everything needed to rerun a command bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    /// Ground-truth secret exponent.
    pub key: String,
    pub replay: String,
    pub invocation: crate::commands::Invocation,
    pub outputs: Vec<OutputFile>,
    /// The resolved configuration the hash covers.
    pub config: Config,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::runtime(format!("{}: {}", path.display(), e.message().trim())))
    }
}
