use super::config::{ExperimentConfig, ExperimentId};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

/// One table cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// Output format of result tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn file_name(&self) -> &'static str {
        match self {
            Format::Csv => "results.csv",
            Format::Json => "results.json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

/// A table with fixed headers, filled in grid order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(headers: &[&str]) -> Self {
        ResultTable { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.headers.len(), "row width must match the headers");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Numeric value of column `name` in row `row`.
    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        self.rows.get(row)?.get(self.column(name)?)?.as_f64()
    }

    /// Text value of column `name` in row `row`.
    pub fn text(&self, row: usize, name: &str) -> Option<String> {
        Some(self.rows.get(row)?.get(self.column(name)?)?.render())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let records: Vec<BTreeMap<&str, &Cell>> =
            self.rows.iter().map(|row| self.headers.iter().map(String::as_str).zip(row).collect()).collect();
        let mut out = serde_json::to_vec_pretty(&records)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Random streams consumed for one grid point and role.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub a: f64,
    /// `poisson`, `chain`, `control`, `moments`, `covariance` or `integrals`.
    pub role: String,
    pub seed: u64,
    /// First stream (or chain index) and number of consecutive ones used.
    pub first: u64,
    pub count: u64,
}

/// Output of an experiment driver.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    /// `e1`..`e4`, or another label for ad-hoc runs.
    pub experiment: String,
    pub table: ResultTable,
    pub seeds: Vec<SeedRecord>,
}

/// Everything needed to reproduce a run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub seeds: Vec<SeedRecord>,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    /// SHA-256 of each written output file, keyed by file name.
    pub checksums: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }

    /// Rebuilds the configuration recorded in the manifest.
    pub fn config(&self) -> Result<ExperimentConfig> {
        let text: String = self.config.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        ExperimentConfig::parse(&text, self.experiment.parse().unwrap_or(ExperimentId::E1))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes the result table and `manifest.json` into `dir`; returns the
/// paths written.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    output: &ExperimentOutput,
    format: Format,
    wall_clock_seconds: f64,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let bytes = output.table.render(format)?;
    let results = dir.join(format.file_name());
    fs::write(&results, &bytes)?;
    let manifest = RunManifest {
        experiment: output.experiment.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.to_pairs(),
        seeds: output.seeds.clone(),
        threads: rayon::current_num_threads(),
        wall_clock_seconds,
        checksums: BTreeMap::from([(format.file_name().to_string(), sha256_hex(&bytes))]),
    };
    let manifest_path = dir.join("manifest.json");
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    fs::write(&manifest_path, text)?;
    Ok(vec![results, manifest_path])
}
