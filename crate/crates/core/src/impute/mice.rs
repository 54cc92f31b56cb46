//! Chained equations over the four weekly outcomes in wide format, run
//! separately within each arm.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{arm_stream, CompletedSet, ImputeError, MiMethod};
use crate::datagen::RepeatedDataset;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitOrder {
    /// Weeks 1 to 4.
    Ascending,
    /// Fewest missing cells first (ties by week), fixed per arm.
    LeastMissingFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MiceOptions {
    pub maxit: usize,
    pub visit: VisitOrder,
}

impl Default for MiceOptions {
    fn default() -> Self {
        MiceOptions {
            maxit: 10,
            visit: VisitOrder::Ascending,
        }
    }
}

/// Predictors per week: baseline plus the other three weeks.
const N_PREDICTORS: usize = 4;

pub fn mice_wide(
    ds: &RepeatedDataset,
    method: &MiMethod,
    m: usize,
    maxit: usize,
    stream: &RngStream,
) -> Result<CompletedSet<RepeatedDataset>, ImputeError> {
    mice_wide_with(ds, method, m, &MiceOptions { maxit, ..Default::default() }, stream)
}

pub fn mice_wide_with(
    ds: &RepeatedDataset,
    method: &MiMethod,
    m: usize,
    opts: &MiceOptions,
    stream: &RngStream,
) -> Result<CompletedSet<RepeatedDataset>, ImputeError> {
    let arms: [Vec<usize>; 2] = [false, true].map(|a| (0..ds.len()).filter(|&i| ds.z[i] == a).collect());
    let mut datasets = Vec::with_capacity(m);
    for imp in 0..m {
        let mut yweek = ds.yweek.clone();
        for (a, rows) in arms.iter().enumerate() {
            let mut s = arm_stream(stream, imp, a);
            let filled = impute_arm(ds, rows, method, opts, &mut s).map_err(|(week, e)| ImputeError::Arm {
                arm: a,
                week,
                source: Box::new(e),
            })?;
            for (&i, w) in rows.iter().zip(filled) {
                yweek[i] = w;
            }
        }
        datasets.push(RepeatedDataset {
            yweek,
            week_observed: vec![[true; 4]; ds.len()],
            ..ds.clone()
        });
    }
    Ok(CompletedSet {
        method: *method,
        by_arm: true,
        datasets,
    })
}

type ArmFailure = (Option<usize>, ImputeError);

fn impute_arm(
    ds: &RepeatedDataset,
    rows: &[usize],
    method: &MiMethod,
    opts: &MiceOptions,
    s: &mut RngStream,
) -> Result<Vec<[f64; 4]>, ArmFailure> {
    let mut current: Vec<[f64; 4]> = rows.iter().map(|&i| ds.yweek[i]).collect();
    let observed: Vec<[bool; 4]> = rows.iter().map(|&i| ds.week_observed[i]).collect();
    let missing_count: [usize; 4] = std::array::from_fn(|k| observed.iter().filter(|o| !o[k]).count());
    if missing_count.iter().all(|&c| c == 0) {
        return Ok(current);
    }
    for k in 0..4 {
        let got = rows.len() - missing_count[k];
        if got < N_PREDICTORS + 2 {
            return Err((
                Some(k),
                ImputeError::TooFewObserved {
                    needed: N_PREDICTORS + 2,
                    got,
                },
            ));
        }
    }

    for k in 0..4 {
        let pool: Vec<f64> = (0..rows.len()).filter(|&r| observed[r][k]).map(|r| current[r][k]).collect();
        for r in (0..rows.len()).filter(|&r| !observed[r][k]) {
            current[r][k] = pool[s.index(pool.len())];
        }
    }

    let mut order = [0, 1, 2, 3];
    if opts.visit == VisitOrder::LeastMissingFirst {
        order.sort_by_key(|&k| missing_count[k]);
    }
    for _ in 0..opts.maxit {
        for &k in &order {
            if missing_count[k] == 0 {
                continue;
            }
            let others: Vec<usize> = (0..4).filter(|&j| j != k).collect();
            let predictors = |r: usize| -> [f64; N_PREDICTORS] {
                [ds.x[rows[r]], current[r][others[0]], current[r][others[1]], current[r][others[2]]]
            };
            let (obs, mis): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&r| observed[r][k]);
            let x_obs = DMatrix::from_row_iterator(obs.len(), N_PREDICTORS, obs.iter().flat_map(|&r| predictors(r)));
            let x_mis = DMatrix::from_row_iterator(mis.len(), N_PREDICTORS, mis.iter().flat_map(|&r| predictors(r)));
            let y_obs: Vec<f64> = obs.iter().map(|&r| current[r][k]).collect();
            let values = method.impute(&x_obs, &y_obs, &x_mis, s).map_err(|e| (Some(k), e))?;
            for (&r, v) in mis.iter().zip(values) {
                current[r][k] = v;
            }
        }
    }
    Ok(current)
}
