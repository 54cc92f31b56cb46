//! Tidy long-format rows for the summary figures.

use std::io::Write;
use std::path::Path;

use crate::analyze::EstimandId;
use crate::harness::{read_summary_csv, registry, scenario_dir, SummaryCsvRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    /// Study 1, n = 200, null effect: bias, SE ratio, type I error.
    Fig3,
    /// Study 1, n = 200, alternative: bias, SE ratio, power (+ coverage for interactions).
    Fig4,
    /// Study 2: ANCOVA and MMRM side by side.
    Fig5,
}

impl Figure {
    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    /// Registry ids this figure draws from.
    pub fn scenario_ids(self) -> Vec<String> {
        registry()
            .into_iter()
            .filter(|e| e.figure == Some(self.as_str()))
            .map(|e| e.id)
            .collect()
    }

    /// `(output measure, value column, mcse column)` for one summary row.
    fn measures(self, setting: &str) -> Vec<(&'static str, &'static str, &'static str)> {
        let bias = ("bias", "bias", "mcse_bias");
        let ratio = ("se_ratio", "se_ratio", "mcse_se_ratio");
        let cover = ("coverage", "coverage", "mcse_coverage");
        match self {
            Figure::Fig3 => vec![bias, ratio, ("type1_error", "rejection_rate", "mcse_rejection_rate")],
            Figure::Fig4 => {
                let mut v = vec![bias, ratio, ("power", "rejection_rate", "mcse_rejection_rate")];
                if setting.starts_with("int-") {
                    v.push(cover);
                }
                v
            }
            Figure::Fig5 => vec![bias, cover, ratio, ("power", "rejection_rate", "mcse_rejection_rate")],
        }
    }

    fn keeps(self, estimand: &str) -> bool {
        match self {
            Figure::Fig3 | Figure::Fig4 => estimand == "ate",
            Figure::Fig5 => estimand == "ate" || estimand == EstimandId::MmrmCollapsed.to_string(),
        }
    }
}

pub const PLOT_COLUMNS: [&str; 9] =
    ["scenario", "setting", "mechanism", "method", "estimand", "analysis", "measure", "value", "mcse"];

#[derive(Debug)]
pub enum PlotError {
    Missing(Vec<String>),
    Io(String),
}

/// Writes the figure's rows. Missing scenarios are an error unless `partial`
/// is set and at least one scenario is present.
pub fn write_plotdata<W: Write>(results: &Path, figure: Figure, partial: bool, out: W) -> Result<usize, PlotError> {
    let mut rows: Vec<SummaryCsvRow> = Vec::new();
    let mut missing = Vec::new();
    for id in figure.scenario_ids() {
        let path = scenario_dir(results, &id).join("summary.csv");
        if !path.is_file() {
            missing.push(id);
            continue;
        }
        rows.extend(read_summary_csv(&path).map_err(|e| PlotError::Io(format!("{}: {e}", path.display())))?);
    }
    if rows.is_empty() || (!missing.is_empty() && !partial) {
        return Err(PlotError::Missing(missing));
    }
    let io = |e: csv::Error| PlotError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOT_COLUMNS).map_err(io)?;
    let mut n = 0;
    for r in &rows {
        let est = r.get("estimand").unwrap_or_default();
        if !figure.keeps(est) {
            continue;
        }
        let setting = r.get("setting").unwrap_or_default();
        let analysis = if est == "ate" { "ancova" } else { "mmrm" };
        for (measure, col, mcse) in figure.measures(setting) {
            w.write_record([
                r.get("scenario_id").unwrap_or_default(),
                setting,
                r.get("mechanism").unwrap_or_default(),
                r.get("method").unwrap_or_default(),
                est,
                analysis,
                measure,
                r.get(col).unwrap_or_default(),
                r.get(mcse).unwrap_or_default(),
            ])
            .map_err(io)?;
            n += 1;
        }
    }
    w.flush().map_err(|e| PlotError::Io(e.to_string()))?;
    Ok(n)
}
