//! Performance measures over replicates, each with its Monte Carlo standard error.

use serde::{Deserialize, Serialize};

use crate::analyze::EstimandId;
use crate::pool::TInference;

/// One `(replicate, method, estimand)` outcome. Failed records carry no numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub scenario_id: String,
    pub replicate_index: u64,
    pub method_id: String,
    pub estimand_id: EstimandId,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub df: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub p_value: Option<f64>,
    pub failed: bool,
    pub failure_reason: Option<String>,
}

impl ReplicateRecord {
    pub fn success(
        scenario_id: &str,
        replicate_index: u64,
        method_id: &str,
        estimand_id: EstimandId,
        estimate: f64,
        se: f64,
        df: f64,
        inference: TInference,
    ) -> Self {
        ReplicateRecord {
            scenario_id: scenario_id.to_string(),
            replicate_index,
            method_id: method_id.to_string(),
            estimand_id,
            estimate: Some(estimate),
            se: Some(se),
            df: Some(df),
            ci_low: Some(inference.ci_low),
            ci_high: Some(inference.ci_high),
            p_value: Some(inference.p_value),
            failed: false,
            failure_reason: None,
        }
    }

    pub fn failure(
        scenario_id: &str,
        replicate_index: u64,
        method_id: &str,
        estimand_id: EstimandId,
        reason: impl Into<String>,
    ) -> Self {
        ReplicateRecord {
            scenario_id: scenario_id.to_string(),
            replicate_index,
            method_id: method_id.to_string(),
            estimand_id,
            estimate: None,
            se: None,
            df: None,
            ci_low: None,
            ci_high: None,
            p_value: None,
            failed: true,
            failure_reason: Some(reason.into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummaryOptions {
    /// Drop records with `|estimate|` above this value (off when `None`).
    pub outlier_guard: Option<f64>,
    /// Rejection threshold on p-values.
    pub alpha: f64,
}

impl SummaryOptions {
    pub fn new() -> Self {
        SummaryOptions {
            outlier_guard: None,
            alpha: 0.05,
        }
    }
}

/// Measures are `NaN` when fewer than two usable records exist (`available = false`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceSummary {
    pub available: bool,
    pub n_reps_used: usize,
    pub n_failed: usize,
    pub n_excluded: usize,
    pub bias: f64,
    pub mcse_bias: f64,
    pub empirical_se: f64,
    pub mcse_empirical_se: f64,
    pub mean_model_se: f64,
    pub mcse_model_se: f64,
    pub se_ratio: f64,
    pub mcse_se_ratio: f64,
    pub coverage: f64,
    pub mcse_coverage: f64,
    pub mse: f64,
    pub mcse_mse: f64,
    pub rejection_rate: f64,
    pub mcse_rejection_rate: f64,
}

impl PerformanceSummary {
    fn unavailable(n_reps_used: usize, n_failed: usize, n_excluded: usize) -> Self {
        let nan = f64::NAN;
        PerformanceSummary {
            available: false,
            n_reps_used,
            n_failed,
            n_excluded,
            bias: nan,
            mcse_bias: nan,
            empirical_se: nan,
            mcse_empirical_se: nan,
            mean_model_se: nan,
            mcse_model_se: nan,
            se_ratio: nan,
            mcse_se_ratio: nan,
            coverage: nan,
            mcse_coverage: nan,
            mse: nan,
            mcse_mse: nan,
            rejection_rate: nan,
            mcse_rejection_rate: nan,
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn summarize(records: &[ReplicateRecord], truth: f64) -> PerformanceSummary {
    summarize_with(records, truth, &SummaryOptions::new())
}

/// Records are put in replicate order first, so the result does not depend on
/// the order they arrive in.
pub fn summarize_with(records: &[ReplicateRecord], truth: f64, opts: &SummaryOptions) -> PerformanceSummary {
    let n_failed = records.iter().filter(|r| r.failed).count();
    let mut usable: Vec<&ReplicateRecord> = records.iter().filter(|r| !r.failed).collect();
    let before = usable.len();
    if let Some(limit) = opts.outlier_guard {
        usable.retain(|r| r.estimate.is_some_and(|e| e.abs() <= limit));
    }
    let n_excluded = before - usable.len();
    usable.sort_by(|a, b| {
        a.replicate_index
            .cmp(&b.replicate_index)
            .then_with(|| a.estimate.unwrap_or(f64::NAN).total_cmp(&b.estimate.unwrap_or(f64::NAN)))
    });
    let n = usable.len();
    if n < 2 {
        return PerformanceSummary::unavailable(n, n_failed, n_excluded);
    }
    let nf = n as f64;
    let est: Vec<f64> = usable.iter().map(|r| r.estimate.unwrap_or(f64::NAN)).collect();
    let se: Vec<f64> = usable.iter().map(|r| r.se.unwrap_or(f64::NAN)).collect();
    let sq_err: Vec<f64> = est.iter().map(|e| (e - truth).powi(2)).collect();
    let covered = usable
        .iter()
        .filter(|r| matches!((r.ci_low, r.ci_high), (Some(lo), Some(hi)) if lo <= truth && truth <= hi))
        .count() as f64
        / nf;
    let rejected = usable
        .iter()
        .filter(|r| r.p_value.is_some_and(|p| p < opts.alpha))
        .count() as f64
        / nf;

    let bias = mean(&est) - truth;
    let empirical_se = sd(&est);
    let mean_model_se = mean(&se);
    let sd_se = sd(&se);
    let se_ratio = mean_model_se / empirical_se;
    let rel_model = sd_se / (nf.sqrt() * mean_model_se);
    let rel_emp2 = 1.0 / (2.0 * (nf - 1.0));
    PerformanceSummary {
        available: true,
        n_reps_used: n,
        n_failed,
        n_excluded,
        bias,
        mcse_bias: empirical_se / nf.sqrt(),
        empirical_se,
        mcse_empirical_se: empirical_se / (2.0 * (nf - 1.0)).sqrt(),
        mean_model_se,
        mcse_model_se: sd_se / nf.sqrt(),
        se_ratio,
        mcse_se_ratio: se_ratio * (rel_model * rel_model + rel_emp2).sqrt(),
        coverage: covered,
        mcse_coverage: (covered * (1.0 - covered) / nf).sqrt(),
        mse: mean(&sq_err),
        mcse_mse: sd(&sq_err) / nf.sqrt(),
        rejection_rate: rejected,
        mcse_rejection_rate: (rejected * (1.0 - rejected) / nf).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::t_inference;
    use crate::rng::derive_stream;
    use proptest::prelude::*;

    fn rec(i: u64, est: f64, se: f64, df: f64) -> ReplicateRecord {
        ReplicateRecord::success("s", i, "cc", EstimandId::Ate, est, se, df, t_inference(est, se, df, 0.05, 0.0))
    }

    #[test]
    fn exact_estimates() {
        let recs: Vec<_> = (0..10).map(|i| rec(i, 5.0, 1.0, 50.0)).collect();
        let s = summarize(&recs, 5.0);
        assert_eq!((s.bias, s.mse, s.coverage), (0.0, 0.0, 1.0));
    }

    #[test]
    fn two_point_hand_computation() {
        let s = summarize(&[rec(0, 10.0, 1.0, 30.0), rec(1, 14.0, 1.0, 30.0)], 12.0);
        assert!(s.bias.abs() < 1e-15);
        assert!((s.empirical_se - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((s.se_ratio - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!((s.mse - 4.0).abs() < 1e-12);
    }

    #[test]
    fn failures_excluded_and_counted() {
        let mut recs = vec![rec(0, 1.0, 1.0, 10.0), rec(1, 2.0, 1.0, 10.0), rec(2, 900.0, 1.0, 10.0)];
        recs.push(ReplicateRecord::failure("s", 3, "cc", EstimandId::Ate, "singular"));
        let s = summarize(&recs, 0.0);
        assert_eq!((s.n_reps_used, s.n_failed, s.n_excluded), (3, 1, 0));
        let guarded = summarize_with(&recs, 0.0, &SummaryOptions { outlier_guard: Some(200.0), alpha: 0.05 });
        assert_eq!((guarded.n_reps_used, guarded.n_excluded), (2, 1));
        assert!((guarded.bias - 1.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_records_unavailable() {
        let s = summarize(&[rec(0, 1.0, 1.0, 10.0)], 0.0);
        assert!(!s.available && s.bias.is_nan());
        let s = summarize(&[], 0.0);
        assert!(!s.available && s.n_reps_used == 0);
    }

    #[test]
    fn known_sampling_distribution() {
        let mut s = derive_stream(3, &[]);
        let recs: Vec<_> = (0..5000)
            .map(|i| {
                let e = s.standard_normal();
                ReplicateRecord::success("s", i, "m", EstimandId::Ate, e, 1.0, f64::INFINITY, t_inference(e, 1.0, f64::INFINITY, 0.05, 0.0))
            })
            .collect();
        let sum = summarize(&recs, 0.0);
        assert!((sum.coverage - 0.95).abs() < 0.012, "{}", sum.coverage);
        assert!((sum.se_ratio - 1.0).abs() < 0.03, "{}", sum.se_ratio);
        assert!((sum.coverage + sum.rejection_rate - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn mse_identity_and_permutation_invariance(
            est in prop::collection::vec(-100.0f64..100.0, 2..60),
            truth in -20.0f64..20.0,
            rot in 0usize..60,
        ) {
            let recs: Vec<_> = est.iter().enumerate().map(|(i, &e)| rec(i as u64, e, 1.0 + e.abs() * 0.01, 40.0)).collect();
            let s = summarize(&recs, truth);
            let n = est.len() as f64;
            let rhs = s.bias * s.bias + s.empirical_se * s.empirical_se * (n - 1.0) / n;
            prop_assert!((s.mse - rhs).abs() <= 1e-12 * s.mse.max(1.0) * 10.0, "{} vs {}", s.mse, rhs);
            prop_assert!((0.0..=1.0).contains(&s.coverage) && (0.0..=1.0).contains(&s.rejection_rate));

            let mut shuffled = recs.clone();
            shuffled.rotate_left(rot % recs.len());
            shuffled.reverse();
            let t = summarize(&shuffled, truth);
            prop_assert_eq!(s, t);
        }

        #[test]
        fn null_coverage_complements_rejection(
            est in prop::collection::vec(-5.0f64..5.0, 2..80),
            df in 3.0f64..300.0,
        ) {
            let recs: Vec<_> = est.iter().enumerate().map(|(i, &e)| rec(i as u64, e, 1.3, df)).collect();
            let s = summarize(&recs, 0.0);
            prop_assert!((s.coverage + s.rejection_rate - 1.0).abs() < 1e-12);
        }
    }
}
