//! Trial analysis models: ANCOVA on a single outcome and a repeated-measures
//! model (MMRM) over the four weekly outcomes, with estimand extraction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::{RepeatedDataset, TrialDataset};
use crate::regress::{contrast, ols_fit, reml_fit_mmrm, DesignMatrix, FitError, MmrmOptions, RepeatedSubject};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("only one treatment arm present")]
    SingleArm,
    #[error("{0} usable rows; at least 4 are required")]
    TooFewRows(usize),
    #[error("outcome unobserved for row {0}")]
    Unobserved(usize),
    #[error("REML did not converge (max |gradient| {0:.3e})")]
    NotConverged(f64),
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimandId {
    Ate,
    /// Treatment effect at week 1..=4.
    MmrmWeek(u8),
    MmrmCollapsed,
}

impl EstimandId {
    pub const MMRM: [EstimandId; 5] = [
        EstimandId::MmrmWeek(1),
        EstimandId::MmrmWeek(2),
        EstimandId::MmrmWeek(3),
        EstimandId::MmrmWeek(4),
        EstimandId::MmrmCollapsed,
    ];
}

impl fmt::Display for EstimandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimandId::Ate => f.write_str("ate"),
            EstimandId::MmrmWeek(w) => write!(f, "mmrm_week{w}"),
            EstimandId::MmrmCollapsed => f.write_str("mmrm_collapsed"),
        }
    }
}

impl FromStr for EstimandId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ate" => Ok(EstimandId::Ate),
            "mmrm_collapsed" => Ok(EstimandId::MmrmCollapsed),
            _ => s
                .strip_prefix("mmrm_week")
                .and_then(|w| w.parse::<u8>().ok())
                .filter(|w| (1..=4).contains(w))
                .map(EstimandId::MmrmWeek)
                .ok_or_else(|| format!("unknown estimand '{s}'")),
        }
    }
}

impl Serialize for EstimandId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EstimandId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimandFit {
    pub estimand: EstimandId,
    pub estimate: f64,
    pub se: f64,
    pub df: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub fits: Vec<EstimandFit>,
    pub n_used: usize,
    pub converged: bool,
}

impl AnalysisResult {
    pub fn get(&self, id: EstimandId) -> Option<&EstimandFit> {
        self.fits.iter().find(|f| f.estimand == id)
    }
}

/// Data a single-outcome ANCOVA can be fit to: `(x, z, y)` per row.
pub trait AncovaInput {
    fn ancova_rows(&self) -> Result<Vec<(f64, bool, f64)>, AnalysisError>;
}

impl AncovaInput for TrialDataset {
    fn ancova_rows(&self) -> Result<Vec<(f64, bool, f64)>, AnalysisError> {
        (0..self.len())
            .map(|i| {
                if self.observed[i] {
                    Ok((self.x[i], self.z[i], self.y[i]))
                } else {
                    Err(AnalysisError::Unobserved(i))
                }
            })
            .collect()
    }
}

/// The outcome is the mean of the four weekly values.
impl AncovaInput for RepeatedDataset {
    fn ancova_rows(&self) -> Result<Vec<(f64, bool, f64)>, AnalysisError> {
        (0..self.len())
            .map(|i| {
                if self.week_observed[i].iter().all(|&o| o) {
                    Ok((self.x[i], self.z[i], self.yweek[i].iter().sum::<f64>() / 4.0))
                } else {
                    Err(AnalysisError::Unobserved(i))
                }
            })
            .collect()
    }
}

/// OLS of the outcome on `(1, z, x)`; the effect is the `z` coefficient with
/// `n - 3` degrees of freedom. Every row must be observed.
pub fn fit_ancova<D: AncovaInput + ?Sized>(ds: &D) -> Result<AnalysisResult, AnalysisError> {
    let rows = ds.ancova_rows()?;
    let n = rows.len();
    if n < 4 {
        return Err(AnalysisError::TooFewRows(n));
    }
    let treated = rows.iter().filter(|r| r.1).count();
    if treated == 0 || treated == n {
        return Err(AnalysisError::SingleArm);
    }
    let design: Vec<Vec<f64>> = rows.iter().map(|&(x, z, _)| vec![1.0, f64::from(u8::from(z)), x]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let fit = ols_fit(&DesignMatrix::from_rows(&design), &y)?;
    let c = contrast(&fit, &[0.0, 1.0, 0.0])?;
    Ok(AnalysisResult {
        fits: vec![EstimandFit {
            estimand: EstimandId::Ate,
            estimate: c.estimate,
            se: c.se,
            df: c.df.max(1.0),
        }],
        n_used: n,
        converged: true,
    })
}

/// Fixed-effects layout of the repeated-measures model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmrmDesign {
    /// Add baseline-by-week interactions (week-specific baseline slopes).
    pub baseline_by_week: bool,
}

impl MmrmDesign {
    pub fn n_coef(&self) -> usize {
        if self.baseline_by_week {
            12
        } else {
            9
        }
    }

    /// `[1, x, w2, w3, w4, z, z*w2, z*w3, z*w4]`, then `x*w2, x*w3, x*w4` if enabled.
    pub fn row(&self, x: f64, z: bool, week: usize) -> Vec<f64> {
        let zf = f64::from(u8::from(z));
        let w = |k: usize| if week == k { 1.0 } else { 0.0 };
        let mut r = vec![1.0, x, w(1), w(2), w(3), zf, zf * w(1), zf * w(2), zf * w(3)];
        if self.baseline_by_week {
            r.extend([x * w(1), x * w(2), x * w(3)]);
        }
        r
    }
}

/// Contrast weights for an estimand on the MMRM coefficient vector.
pub fn mmrm_contrast(design: &MmrmDesign, id: EstimandId) -> Option<Vec<f64>> {
    let mut c = vec![0.0; design.n_coef()];
    match id {
        EstimandId::Ate => return None,
        EstimandId::MmrmWeek(w) => {
            c[5] = 1.0;
            if w > 1 {
                c[4 + w as usize] = 1.0;
            }
        }
        EstimandId::MmrmCollapsed => {
            c[5] = 1.0;
            for k in 6..9 {
                c[k] = 0.25;
            }
        }
    }
    Some(c)
}

/// Unstructured-covariance MMRM fit by REML using every observed week;
/// participants with no observed week are dropped.
pub fn fit_mmrm(ds: &RepeatedDataset) -> Result<AnalysisResult, AnalysisError> {
    fit_mmrm_with(ds, &MmrmDesign::default(), &MmrmOptions::new(4))
}

pub fn fit_mmrm_with(
    ds: &RepeatedDataset,
    design: &MmrmDesign,
    opts: &MmrmOptions,
) -> Result<AnalysisResult, AnalysisError> {
    let subjects: Vec<RepeatedSubject> = (0..ds.len())
        .filter_map(|i| {
            let times: Vec<usize> = (0..4).filter(|&k| ds.week_observed[i][k]).collect();
            if times.is_empty() {
                return None;
            }
            Some(RepeatedSubject {
                design: times.iter().map(|&k| design.row(ds.x[i], ds.z[i], k)).collect(),
                y: times.iter().map(|&k| ds.yweek[i][k]).collect(),
                times,
            })
        })
        .collect();
    if subjects.len() < 4 {
        return Err(AnalysisError::TooFewRows(subjects.len()));
    }
    let included: Vec<usize> = (0..ds.len()).filter(|&i| ds.week_observed[i].iter().any(|&o| o)).collect();
    let treated = included.iter().filter(|&&i| ds.z[i]).count();
    if treated == 0 || treated == included.len() {
        return Err(AnalysisError::SingleArm);
    }
    let fit = reml_fit_mmrm(&subjects, opts)?;
    if !fit.converged {
        return Err(AnalysisError::NotConverged(fit.max_gradient));
    }
    let fits = EstimandId::MMRM
        .iter()
        .map(|&id| {
            let c = contrast(&fit, &mmrm_contrast(design, id).expect("mmrm estimand"))?;
            Ok(EstimandFit {
                estimand: id,
                estimate: c.estimate,
                se: c.se,
                df: c.df.max(1.0),
            })
        })
        .collect::<Result<Vec<_>, FitError>>()?;
    Ok(AnalysisResult {
        fits,
        n_used: subjects.len(),
        converged: true,
    })
}
