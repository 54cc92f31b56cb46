//! Multiple imputation: per-variable engines, imputation separately by arm,
//! chained equations over wide-format weeks, and complete-case extraction.
//!
//! Streams: imputation `i` of arm `a` uses `stream.derive(imp, i).derive(arm, a)`.

mod methods;
mod mice;

pub use methods::{
    donor_pool, impute_cart, impute_norm, impute_pmm, impute_rf_caliber, impute_rf_doove, LeafDraw,
};
pub use mice::{mice_wide, mice_wide_with, MiceOptions, VisitOrder};

use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::{RepeatedDataset, TrialDataset};
use crate::regress::FitError;
use crate::rng::{Label, RngStream};
use crate::trees::{ForestParams, TreeError, TreeParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImputeError {
    #[error("{needed} observed rows required, {got} available")]
    TooFewObserved { needed: usize, got: usize },
    #[error("inconsistent inputs: {detail}")]
    Shape { detail: String },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("arm {arm}{}: {source}", week.map(|w| format!(", week {}", w + 1)).unwrap_or_default())]
    Arm {
        arm: usize,
        week: Option<usize>,
        #[source]
        source: Box<ImputeError>,
    },
    #[error("no complete cases")]
    NoCompleteCases,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiKind {
    Norm,
    Pmm,
    Cart,
    RfDoove,
    RfCaliber,
}

impl MiKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MiKind::Norm => "norm",
            MiKind::Pmm => "pmm",
            MiKind::Cart => "cart",
            MiKind::RfDoove => "rf_doove",
            MiKind::RfCaliber => "rf_caliber",
        }
    }
}

impl fmt::Display for MiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An imputation method with its tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiMethod {
    pub kind: MiKind,
    /// PMM donor pool size.
    pub donors: usize,
    pub tree_params: TreeParams,
    pub leaf_draw: LeafDraw,
    pub forest_params: ForestParams,
}

impl MiMethod {
    pub fn new(kind: MiKind) -> Self {
        MiMethod {
            kind,
            donors: 5,
            tree_params: TreeParams::default(),
            leaf_draw: LeafDraw::Uniform,
            forest_params: ForestParams::default(),
        }
    }

    pub fn norm() -> Self {
        Self::new(MiKind::Norm)
    }

    pub fn pmm() -> Self {
        Self::new(MiKind::Pmm)
    }

    pub fn cart() -> Self {
        Self::new(MiKind::Cart)
    }

    pub fn rf_doove() -> Self {
        Self::new(MiKind::RfDoove)
    }

    pub fn rf_caliber() -> Self {
        Self::new(MiKind::RfCaliber)
    }

    /// True when every imputed value is copied from an observed outcome.
    pub fn is_donor_based(&self) -> bool {
        matches!(self.kind, MiKind::Pmm | MiKind::Cart | MiKind::RfDoove)
    }

    /// Imputes `y` for the rows of `x_mis` from the observed rows.
    pub fn impute(
        &self,
        x_obs: &DMatrix<f64>,
        y_obs: &[f64],
        x_mis: &DMatrix<f64>,
        stream: &mut RngStream,
    ) -> Result<Vec<f64>, ImputeError> {
        match self.kind {
            MiKind::Norm => impute_norm(x_obs, y_obs, x_mis, stream),
            MiKind::Pmm => impute_pmm(x_obs, y_obs, x_mis, self.donors, stream),
            MiKind::Cart => impute_cart(x_obs, y_obs, x_mis, &self.tree_params, self.leaf_draw, stream),
            MiKind::RfDoove => impute_rf_doove(x_obs, y_obs, x_mis, &self.forest_params, stream),
            MiKind::RfCaliber => impute_rf_caliber(x_obs, y_obs, x_mis, &self.forest_params, stream),
        }
    }
}

/// `m` completed copies of a dataset. In each copy every cell is marked observed;
/// cells that were observed in the input are bit-identical to it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedSet<D> {
    pub method: MiMethod,
    pub by_arm: bool,
    pub datasets: Vec<D>,
}

impl<D> CompletedSet<D> {
    pub fn m(&self) -> usize {
        self.datasets.len()
    }
}

pub const DEFAULT_M: usize = 30;

fn arm_stream(stream: &RngStream, imp: usize, arm: usize) -> RngStream {
    stream.derive(Label::Imp, imp as u64).derive(Label::Arm, arm as u64)
}

/// Imputes each arm separately with its own stream, `m` times.
pub fn mi_by_arm(
    ds: &TrialDataset,
    method: &MiMethod,
    m: usize,
    stream: &RngStream,
) -> Result<CompletedSet<TrialDataset>, ImputeError> {
    let arms: [Vec<usize>; 2] = [false, true].map(|a| (0..ds.len()).filter(|&i| ds.z[i] == a).collect());
    let mut datasets = Vec::with_capacity(m);
    for imp in 0..m {
        let mut y = ds.y.clone();
        for (a, rows) in arms.iter().enumerate() {
            let (obs, mis): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| ds.observed[i]);
            if mis.is_empty() {
                continue;
            }
            let x_obs = DMatrix::from_iterator(obs.len(), 1, obs.iter().map(|&i| ds.x[i]));
            let x_mis = DMatrix::from_iterator(mis.len(), 1, mis.iter().map(|&i| ds.x[i]));
            let y_obs: Vec<f64> = obs.iter().map(|&i| ds.y[i]).collect();
            let values = method
                .impute(&x_obs, &y_obs, &x_mis, &mut arm_stream(stream, imp, a))
                .map_err(|e| ImputeError::Arm {
                    arm: a,
                    week: None,
                    source: Box::new(e),
                })?;
            for (&i, v) in mis.iter().zip(values) {
                y[i] = v;
            }
        }
        datasets.push(TrialDataset {
            y,
            observed: vec![true; ds.len()],
            ..ds.clone()
        });
    }
    Ok(CompletedSet {
        method: *method,
        by_arm: true,
        datasets,
    })
}

/// Rows with an observed outcome.
pub fn complete_cases(ds: &TrialDataset) -> Result<TrialDataset, ImputeError> {
    let keep: Vec<usize> = (0..ds.len()).filter(|&i| ds.observed[i]).collect();
    if keep.is_empty() {
        return Err(ImputeError::NoCompleteCases);
    }
    let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
    Ok(TrialDataset {
        x: pick(&ds.x),
        z: keep.iter().map(|&i| ds.z[i]).collect(),
        y: pick(&ds.y),
        observed: vec![true; keep.len()],
        truth: ds.truth,
    })
}

/// Participants with all four weeks observed.
pub fn complete_cases_repeated(ds: &RepeatedDataset) -> Result<RepeatedDataset, ImputeError> {
    let keep: Vec<usize> = (0..ds.len())
        .filter(|&i| ds.week_observed[i].iter().all(|&o| o))
        .collect();
    if keep.is_empty() {
        return Err(ImputeError::NoCompleteCases);
    }
    Ok(RepeatedDataset {
        x: keep.iter().map(|&i| ds.x[i]).collect(),
        z: keep.iter().map(|&i| ds.z[i]).collect(),
        yweek: keep.iter().map(|&i| ds.yweek[i]).collect(),
        week_observed: vec![[true; 4]; keep.len()],
        selected: keep.iter().map(|&i| ds.selected[i]).collect(),
        delta: ds.delta,
        u_resamples: ds.u_resamples,
        warnings: ds.warnings.clone(),
    })
}

/// Long layout over imputations: `imp,id,x,z,y` with `imp` counted from 1.
pub fn write_completed_trial_csv<W: Write>(set: &CompletedSet<TrialDataset>, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["imp", "id", "x", "z", "y"])?;
    for (k, ds) in set.datasets.iter().enumerate() {
        for i in 0..ds.len() {
            w.write_record([
                (k + 1).to_string(),
                i.to_string(),
                ds.x[i].to_string(),
                u8::from(ds.z[i]).to_string(),
                ds.y[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Long layout over imputations: `imp,id,x,z,yweek1..yweek4`.
pub fn write_completed_repeated_csv<W: Write>(
    set: &CompletedSet<RepeatedDataset>,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["imp", "id", "x", "z", "yweek1", "yweek2", "yweek3", "yweek4"])?;
    for (k, ds) in set.datasets.iter().enumerate() {
        for i in 0..ds.len() {
            let mut rec = vec![
                (k + 1).to_string(),
                i.to_string(),
                ds.x[i].to_string(),
                u8::from(ds.z[i]).to_string(),
            ];
            rec.extend(ds.yweek[i].iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
