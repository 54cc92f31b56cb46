//! On-disk layout of one scenario's results:
//!
//! ```text
//! <out>/<scenario_id>/summary.csv
//!                     summary.json
//!                     records.csv     (optional)
//!                     manifest.json
//! ```
//!
//! Everything except `manifest.json` is a pure function of the scenario.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{ScenarioResult, SummaryRow};
use super::scenario::Scenario;

pub const SUMMARY_COLUMNS: [&str; 32] = [
    "scenario_id",
    "study",
    "setting",
    "mechanism",
    "miss_pct",
    "n",
    "true_effect",
    "method",
    "estimand",
    "n_reps",
    "n_used",
    "n_failed",
    "n_excluded",
    "available",
    "bias",
    "mcse_bias",
    "emp_se",
    "mcse_emp_se",
    "model_se",
    "mcse_model_se",
    "se_ratio",
    "mcse_se_ratio",
    "coverage",
    "mcse_coverage",
    "mse",
    "mcse_mse",
    "rejection_rate",
    "mcse_rejection_rate",
    "ci_level",
    "m",
    "master_seed",
    "config_hash",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario_id: String,
    pub master_seed: u64,
    pub config_hash: String,
    pub software_version: String,
    pub n_reps: usize,
    pub n_records: usize,
    pub n_failed: usize,
    pub wall_time_secs: f64,
    pub finished_unix_secs: u64,
    pub files: Vec<String>,
}

/// NaN (unavailable) cells are left empty.
fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn summary_record(sc: &Scenario, hash: &str, row: &SummaryRow) -> Vec<String> {
    let s = &row.summary;
    let d = &sc.design;
    vec![
        sc.id.clone(),
        d.study().as_str().to_string(),
        d.setting(),
        d.mechanism_id(),
        d.miss_pct().to_string(),
        d.n().to_string(),
        num(row.truth),
        row.method.clone(),
        row.estimand.to_string(),
        sc.n_reps.to_string(),
        s.n_reps_used.to_string(),
        s.n_failed.to_string(),
        s.n_excluded.to_string(),
        s.available.to_string(),
        num(s.bias),
        num(s.mcse_bias),
        num(s.empirical_se),
        num(s.mcse_empirical_se),
        num(s.mean_model_se),
        num(s.mcse_model_se),
        num(s.se_ratio),
        num(s.mcse_se_ratio),
        num(s.coverage),
        num(s.mcse_coverage),
        num(s.mse),
        num(s.mcse_mse),
        num(s.rejection_rate),
        num(s.mcse_rejection_rate),
        num(1.0 - sc.summary.alpha),
        sc.m.to_string(),
        sc.master_seed.to_string(),
        hash.to_string(),
    ]
}

pub fn write_summary_csv<W: Write>(result: &ScenarioResult, out: W) -> csv::Result<()> {
    let hash = result.scenario.content_hash();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for row in &result.summaries {
        w.write_record(summary_record(&result.scenario, &hash, row))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    scenario: &'a Scenario,
    config_hash: String,
    summaries: &'a [SummaryRow],
}

pub fn write_summary_json<W: Write>(result: &ScenarioResult, out: W) -> serde_json::Result<()> {
    let doc = SummaryJson {
        scenario: &result.scenario,
        config_hash: result.scenario.content_hash(),
        summaries: &result.summaries,
    };
    serde_json::to_writer_pretty(out, &doc)
}

pub fn write_records_csv<W: Write>(result: &ScenarioResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &result.records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn scenario_dir(out: &Path, scenario_id: &str) -> PathBuf {
    out.join(scenario_id)
}

pub fn read_manifest(dir: &Path) -> Option<Manifest> {
    let text = fs::read_to_string(dir.join("manifest.json")).ok()?;
    serde_json::from_str(&text).ok()
}

/// True when `dir` already holds every output of this exact scenario.
pub fn is_complete(dir: &Path, sc: &Scenario, files: &[String]) -> bool {
    match read_manifest(dir) {
        Some(m) => {
            m.config_hash == sc.content_hash()
                && files.iter().all(|f| m.files.contains(f) && dir.join(f).is_file())
        }
        None => false,
    }
}

pub fn output_files(formats: &[Format], dump_records: bool) -> Vec<String> {
    let mut files = Vec::new();
    if formats.contains(&Format::Csv) {
        files.push("summary.csv".to_string());
    }
    if formats.contains(&Format::Json) {
        files.push("summary.json".to_string());
    }
    if dump_records {
        files.push("records.csv".to_string());
    }
    files
}

fn io_err(e: impl std::fmt::Display) -> io::Error {
    io::Error::other(e.to_string())
}

/// Writes the requested files, then the manifest last so a partial write is
/// never mistaken for a finished scenario.
pub fn write_scenario(out: &Path, result: &ScenarioResult, formats: &[Format], dump_records: bool) -> io::Result<PathBuf> {
    let dir = scenario_dir(out, &result.scenario.id);
    fs::create_dir_all(&dir)?;
    let _ = fs::remove_file(dir.join("manifest.json"));
    let files = output_files(formats, dump_records);
    for f in &files {
        let file = io::BufWriter::new(fs::File::create(dir.join(f))?);
        match f.as_str() {
            "summary.csv" => write_summary_csv(result, file).map_err(io_err)?,
            "summary.json" => write_summary_json(result, file).map_err(io_err)?,
            "records.csv" => write_records_csv(result, file).map_err(io_err)?,
            _ => unreachable!(),
        }
    }
    let manifest = Manifest {
        scenario_id: result.scenario.id.clone(),
        master_seed: result.scenario.master_seed,
        config_hash: result.scenario.content_hash(),
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        n_reps: result.scenario.n_reps,
        n_records: result.records.len(),
        n_failed: result.records.iter().filter(|r| r.failed).count(),
        wall_time_secs: result.wall_time_secs,
        finished_unix_secs: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        files,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).map_err(io_err)?)?;
    Ok(dir)
}

/// One parsed `summary.csv` row, keyed by column name.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryCsvRow(pub Vec<(String, String)>);

impl SummaryCsvRow {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn num(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }
}

pub fn read_summary_csv(path: &Path) -> csv::Result<Vec<SummaryCsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(SummaryCsvRow(
                headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect(),
            ))
        })
        .collect()
}
