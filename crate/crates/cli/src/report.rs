use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::experiments::Row;

pub const HEADER: &str = "experiment,parameter,value,std_error,truncation,seed";

pub fn csv(experiment: &str, rows: &[Row], seed: u64) -> String {
    let mut out = format!("{HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{experiment},{},{},{},{},{seed}", r.parameter, r.value, r.std_error, r.truncation);
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub experiment: &'a str,
    pub config_sha256: String,
    pub seed: u64,
    pub n_samples: usize,
    pub batch_count: usize,
    pub gammarad_version: &'a str,
    pub cli_version: &'a str,
    pub rows: usize,
    pub wall_time_ms: u128,
    pub status: &'a str,
    pub violations: &'a [String],
    pub report: String,
}

pub fn output_dir(explicit: Option<&str>) -> PathBuf {
    explicit
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("GAMMARAD_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("gammarad-out"))
}

pub fn write(dir: &Path, name: &str, csv: &str, manifest: &Manifest<'_>) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{name}.csv")), csv)?;
    let json = serde_json::to_string_pretty(manifest).expect("manifest serialises");
    fs::write(dir.join(format!("{name}.manifest.json")), json + "\n")
}
