use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::scenario::{Analysis, Design, MethodSpec, Scenario};
use crate::analyze::{fit_ancova, fit_mmrm_with, AnalysisResult, EstimandId};
use crate::datagen::{apply_missingness, apply_week_missingness, gen_study1, gen_study2, RepeatedDataset, TrialDataset};
use crate::impute::{complete_cases, complete_cases_repeated, mi_by_arm, mice_wide_with, CompletedSet};
use crate::metrics::{summarize_with, PerformanceSummary, ReplicateRecord};
use crate::pool::{rubin_pool, t_inference, TInference};
use crate::regress::MmrmOptions;
use crate::rng::{derive_stream, Label, RngStream};

/// Masked data for one replicate.
#[derive(Debug, Clone)]
pub enum ReplicateData {
    Trial(TrialDataset),
    Repeated(RepeatedDataset),
}

/// Generates and masks the data of replicate `rep` (streams `rep/datagen` and `rep/miss`).
pub fn replicate_data(sc: &Scenario, rep: u64) -> Result<ReplicateData, String> {
    let root = replicate_stream(sc, rep);
    let mut gen = root.derive(Label::Datagen, 0);
    let mut miss = root.derive(Label::Miss, 0);
    match &sc.design {
        Design::Study1 { config, mechanism } => {
            let full = gen_study1(config, &mut gen).map_err(|e| e.0)?;
            Ok(ReplicateData::Trial(apply_missingness(&full, mechanism, &mut miss)))
        }
        Design::Study2 { n, mechanism } => {
            let full = gen_study2(*n, &mut gen).map_err(|e| e.0)?;
            Ok(ReplicateData::Repeated(apply_week_missingness(&full, *mechanism, &mut miss)))
        }
    }
}

pub fn replicate_stream(sc: &Scenario, rep: u64) -> RngStream {
    derive_stream(sc.master_seed, &[(Label::Rep, rep)])
}

/// One record per valid `(method, analysis)` estimand, in pair order.
/// Method failures become failed records.
pub fn run_replicate(sc: &Scenario, rep: u64) -> Vec<ReplicateRecord> {
    let pairs = sc.pairs();
    let data = match replicate_data(sc, rep) {
        Ok(d) => d,
        Err(reason) => {
            return pairs
                .iter()
                .flat_map(|(m, a)| a.estimands().iter().map(move |e| (m, *e)))
                .map(|(m, e)| ReplicateRecord::failure(&sc.id, rep, m.id(), e, format!("data generation: {reason}")))
                .collect();
        }
    };
    // Every MI method sees the same imputation streams.
    let mi_stream = replicate_stream(sc, rep);
    let mut out = Vec::new();
    for method in &sc.methods {
        let analyses: Vec<Analysis> = pairs.iter().filter(|(m, _)| m == method).map(|(_, a)| *a).collect();
        let results = run_method(sc, method, &analyses, &data, &mi_stream);
        for (analysis, res) in analyses.iter().zip(results) {
            for &e in analysis.estimands() {
                out.push(match &res {
                    Ok(fits) => match fits.iter().find(|f| f.0 == e) {
                        Some(&(_, est, se, df, inf)) => {
                            ReplicateRecord::success(&sc.id, rep, method.id(), e, est, se, df, inf)
                        }
                        None => ReplicateRecord::failure(&sc.id, rep, method.id(), e, "estimand not produced"),
                    },
                    Err(reason) => ReplicateRecord::failure(&sc.id, rep, method.id(), e, reason.clone()),
                });
            }
        }
    }
    out
}

type Inferred = (EstimandId, f64, f64, f64, TInference);

fn analyse<D>(sc: &Scenario, analysis: Analysis, ds: &D) -> Result<AnalysisResult, String>
where
    D: AnalysisTarget,
{
    match analysis {
        Analysis::Ancova => ds.ancova(),
        Analysis::Mmrm => ds.mmrm(sc),
    }
}

/// Bridges the two dataset shapes to the analyses they support.
trait AnalysisTarget {
    fn ancova(&self) -> Result<AnalysisResult, String>;
    fn mmrm(&self, sc: &Scenario) -> Result<AnalysisResult, String>;
}

impl AnalysisTarget for TrialDataset {
    fn ancova(&self) -> Result<AnalysisResult, String> {
        fit_ancova(self).map_err(|e| e.to_string())
    }
    fn mmrm(&self, _: &Scenario) -> Result<AnalysisResult, String> {
        Err("mmrm requires repeated measures".into())
    }
}

impl AnalysisTarget for RepeatedDataset {
    fn ancova(&self) -> Result<AnalysisResult, String> {
        fit_ancova(self).map_err(|e| e.to_string())
    }
    fn mmrm(&self, sc: &Scenario) -> Result<AnalysisResult, String> {
        fit_mmrm_with(self, &sc.mmrm_design, &MmrmOptions::new(4)).map_err(|e| e.to_string())
    }
}

fn single_fit(sc: &Scenario, res: AnalysisResult) -> Vec<Inferred> {
    res.fits
        .iter()
        .map(|f| (f.estimand, f.estimate, f.se, f.df, t_inference(f.estimate, f.se, f.df, sc.summary.alpha, 0.0)))
        .collect()
}

fn pooled<D: AnalysisTarget>(sc: &Scenario, analysis: Analysis, set: &CompletedSet<D>) -> Result<Vec<Inferred>, String> {
    let fits = set
        .datasets
        .iter()
        .map(|d| analyse(sc, analysis, d))
        .collect::<Result<Vec<_>, _>>()?;
    analysis
        .estimands()
        .iter()
        .map(|&e| {
            let per: Vec<_> = fits
                .iter()
                .map(|r| r.get(e).copied().ok_or_else(|| format!("estimand {e} missing from fit")))
                .collect::<Result<_, _>>()?;
            let est: Vec<f64> = per.iter().map(|f| f.estimate).collect();
            let var: Vec<f64> = per.iter().map(|f| f.se * f.se).collect();
            let p = rubin_pool(&est, &var, per[0].df, sc.summary.alpha, 0.0).map_err(|err| err.to_string())?;
            let inf = TInference {
                ci_low: p.ci_low,
                ci_high: p.ci_high,
                p_value: p.p_value,
            };
            Ok((e, p.qbar, p.se(), p.df, inf))
        })
        .collect()
}

fn run_method(
    sc: &Scenario,
    method: &MethodSpec,
    analyses: &[Analysis],
    data: &ReplicateData,
    stream: &RngStream,
) -> Vec<Result<Vec<Inferred>, String>> {
    match (method, data) {
        (MethodSpec::Cc, ReplicateData::Trial(ds)) => {
            let cc = complete_cases(ds).map_err(|e| e.to_string());
            analyses
                .iter()
                .map(|a| Ok(single_fit(sc, analyse(sc, *a, cc.as_ref().map_err(Clone::clone)?)?)))
                .collect()
        }
        (MethodSpec::Cc, ReplicateData::Repeated(ds)) => {
            let cc = complete_cases_repeated(ds).map_err(|e| e.to_string());
            analyses
                .iter()
                .map(|a| Ok(single_fit(sc, analyse(sc, *a, cc.as_ref().map_err(Clone::clone)?)?)))
                .collect()
        }
        (MethodSpec::MmrmDefault, ReplicateData::Repeated(ds)) => analyses
            .iter()
            .map(|a| Ok(single_fit(sc, analyse(sc, *a, ds)?)))
            .collect(),
        (MethodSpec::MmrmDefault, ReplicateData::Trial(_)) => {
            analyses.iter().map(|_| Err("mmrm_default requires repeated measures".into())).collect()
        }
        // Imputation runs once per method; every analysis shares the completed sets.
        (MethodSpec::Mi { method }, ReplicateData::Trial(ds)) => match mi_by_arm(ds, method, sc.m, stream) {
            Ok(set) => analyses.iter().map(|a| pooled(sc, *a, &set)).collect(),
            Err(e) => analyses.iter().map(|_| Err(format!("imputation: {e}"))).collect(),
        },
        (MethodSpec::Mi { method }, ReplicateData::Repeated(ds)) => {
            match mice_wide_with(ds, method, sc.m, &sc.mice, stream) {
                Ok(set) => analyses.iter().map(|a| pooled(sc, *a, &set)).collect(),
                Err(e) => analyses.iter().map(|_| Err(format!("imputation: {e}"))).collect(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub estimand: EstimandId,
    pub truth: f64,
    pub summary: PerformanceSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub summaries: Vec<SummaryRow>,
    pub records: Vec<ReplicateRecord>,
    pub wall_time_secs: f64,
}

impl ScenarioResult {
    pub fn summary(&self, method: &str, estimand: EstimandId) -> Option<&PerformanceSummary> {
        self.summaries
            .iter()
            .find(|r| r.method == method && r.estimand == estimand)
            .map(|r| &r.summary)
    }

    /// Records of one `(method, estimand)` in replicate order.
    pub fn records_for(&self, method: &str, estimand: EstimandId) -> Vec<&ReplicateRecord> {
        self.records
            .iter()
            .filter(|r| r.method_id == method && r.estimand_id == estimand)
            .collect()
    }
}

/// Summaries per `(method, estimand)` in pair order, against the design's true effect.
pub fn summarize_records(sc: &Scenario, records: &[ReplicateRecord]) -> Vec<SummaryRow> {
    let truth = sc.design.true_effect();
    sc.pairs()
        .iter()
        .flat_map(|(m, a)| a.estimands().iter().map(move |e| (m.id(), *e)))
        .map(|(method, estimand)| {
            let recs: Vec<ReplicateRecord> = records
                .iter()
                .filter(|r| r.method_id == method && r.estimand_id == estimand)
                .cloned()
                .collect();
            SummaryRow {
                method: method.to_string(),
                estimand,
                truth,
                summary: summarize_with(&recs, truth, &sc.summary),
            }
        })
        .collect()
}

/// Runs every replicate on up to `parallelism` threads (0 is treated as 1).
/// The result depends only on the scenario, never on scheduling.
pub fn run_scenario(sc: &Scenario, parallelism: usize) -> ScenarioResult {
    let start = Instant::now();
    let reps = sc.n_reps as u64;
    let per_rep: Vec<Vec<ReplicateRecord>> = if parallelism <= 1 {
        (0..reps).map(|r| run_replicate(sc, r)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .expect("thread pool");
        pool.install(|| (0..reps).into_par_iter().map(|r| run_replicate(sc, r)).collect())
    };
    let records: Vec<ReplicateRecord> = per_rep.into_iter().flatten().collect();
    let failed = records.iter().filter(|r| r.failed).count();
    if failed > 0 {
        log::info!("{}: {failed} of {} records failed", sc.id, records.len());
    }
    ScenarioResult {
        summaries: summarize_records(sc, &records),
        scenario: sc.clone(),
        records,
        wall_time_secs: start.elapsed().as_secs_f64(),
    }
}
