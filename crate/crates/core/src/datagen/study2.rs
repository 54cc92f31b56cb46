use crate::rng::{moments_to_lognormal, DomainError, RngStream};

use super::MissKind;

/// True treatment effect on weekly mean activity (minutes/day).
pub const STUDY2_DELTA: f64 = 12.0;
/// Probability that week 1..4 is withheld for a participant selected for missingness.
pub const WEEK_MISSING_PROB: [f64; 4] = [0.25, 0.5, 0.75, 0.85];

const BASELINE_MEAN: f64 = 77.0;
const BASELINE_SD: f64 = 52.0;
const DAILY_SD: f64 = 46.0;
const PERSON_SD: f64 = 2.0;
const ALLOCATION: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedDataset {
    /// Baseline activity (minutes/day).
    pub x: Vec<f64>,
    pub z: Vec<bool>,
    pub yweek: Vec<[f64; 4]>,
    pub week_observed: Vec<[bool; 4]>,
    /// Participants drawn into the missingness selection set.
    pub selected: Vec<bool>,
    pub delta: f64,
    /// Participant effects redrawn because the mean would have been non-positive.
    pub u_resamples: usize,
    pub warnings: Vec<String>,
}

impl RepeatedDataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_missing_weeks(&self) -> usize {
        self.week_observed.iter().flatten().filter(|o| !**o).count()
    }
}

/// A study-2 draw together with the 28 daily values behind each participant's weeks.
#[derive(Debug, Clone, PartialEq)]
pub struct Study2Days {
    pub dataset: RepeatedDataset,
    pub daily: Vec<[f64; 28]>,
}

/// Per participant: baseline, arm, participant effect, then 28 daily values in order.
pub fn simulate_study2_days(n: usize, stream: &mut RngStream) -> Result<Study2Days, DomainError> {
    if n < 10 {
        return Err(DomainError(format!("study 2 needs n >= 10, got {n}")));
    }
    let baseline = moments_to_lognormal(BASELINE_MEAN, BASELINE_SD)?;
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut yweek = Vec::with_capacity(n);
    let mut daily = Vec::with_capacity(n);
    let mut u_resamples = 0;
    for _ in 0..n {
        let xi = baseline.sample(stream);
        let zi = stream.bernoulli(ALLOCATION);
        let shift = xi + if zi { STUDY2_DELTA } else { 0.0 };
        let mut mu = shift + stream.normal(0.0, PERSON_SD);
        while mu <= 0.0 {
            u_resamples += 1;
            mu = shift + stream.normal(0.0, PERSON_SD);
        }
        let days = participant_days(mu, stream)?;
        let weeks = weekly_means(&days);
        x.push(xi);
        z.push(zi);
        yweek.push(weeks);
        daily.push(days);
    }
    Ok(Study2Days {
        dataset: RepeatedDataset {
            x,
            z,
            yweek,
            week_observed: vec![[true; 4]; n],
            selected: vec![false; n],
            delta: STUDY2_DELTA,
            u_resamples,
            warnings: Vec::new(),
        },
        daily,
    })
}

/// 28 independent daily values with natural-scale mean `mu`.
fn participant_days(mu: f64, stream: &mut RngStream) -> Result<[f64; 28], DomainError> {
    let law = moments_to_lognormal(mu, DAILY_SD)?;
    let mut days = [0.0; 28];
    for d in days.iter_mut() {
        *d = law.sample(stream);
    }
    Ok(days)
}

fn weekly_means(days: &[f64; 28]) -> [f64; 4] {
    let mut weeks = [0.0; 4];
    for (k, w) in weeks.iter_mut().enumerate() {
        *w = days[7 * k..7 * (k + 1)].iter().sum::<f64>() / 7.0;
    }
    weeks
}

pub fn gen_study2(n: usize, stream: &mut RngStream) -> Result<RepeatedDataset, DomainError> {
    simulate_study2_days(n, stream).map(|d| d.dataset)
}

/// `round(percent/100 * n)` with halves rounded up, in exact integer arithmetic.
fn quota(percent: usize, n: usize) -> usize {
    (2 * percent * n + 100) / 200
}

/// Selects 30% of participants (stratified for the MAR kinds) and withholds
/// their weeks independently with [`WEEK_MISSING_PROB`].
pub fn apply_week_missingness(ds: &RepeatedDataset, kind: MissKind, stream: &mut RngStream) -> RepeatedDataset {
    let n = ds.len();
    let mut out = ds.clone();
    let strata: Vec<(Vec<usize>, usize, &str)> = match kind {
        MissKind::Mcar => vec![((0..n).collect(), quota(30, n), "all participants")],
        MissKind::MarX => {
            let mean = ds.x.iter().sum::<f64>() / n as f64;
            let (high, low): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| ds.x[i] > mean);
            vec![(high, quota(10, n), "x above mean"), (low, quota(20, n), "x at or below mean")]
        }
        MissKind::MarZ => {
            let (treated, control): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| ds.z[i]);
            vec![(treated, quota(10, n), "treated"), (control, quota(20, n), "control")]
        }
    };
    let mut chosen = Vec::new();
    for (members, want, label) in strata {
        let take = want.min(members.len());
        if take < want {
            let msg = format!("stratum '{label}' has {} participants, quota {want}", members.len());
            log::warn!("{msg}");
            out.warnings.push(msg);
        }
        chosen.extend(
            stream
                .sample_without_replacement(members.len(), take)
                .into_iter()
                .map(|k| members[k]),
        );
    }
    chosen.sort_unstable();
    for i in chosen {
        out.selected[i] = true;
        for (k, &p) in WEEK_MISSING_PROB.iter().enumerate() {
            if stream.bernoulli(p) {
                out.week_observed[i][k] = false;
            }
        }
    }
    out
}
