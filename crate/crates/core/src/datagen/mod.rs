//! Trial data generators and missingness mechanisms.
//!
//! Study 1 is a two-arm cross-sectional trial with one baseline covariate and a
//! single continuous outcome. Study 2 is an accelerometer-style trial with four
//! weekly outcomes built from lognormal daily values.

mod study1;
mod study2;

pub use study1::{
    apply_missingness, gen_study1, Interaction, MissKind, MissMechanism, Relationship,
    Study1Config, TrialDataset, TrialTruth,
};
pub use study2::{
    apply_week_missingness, gen_study2, simulate_study2_days, RepeatedDataset, Study2Days,
    STUDY2_DELTA, WEEK_MISSING_PROB,
};

use std::io::Write;

/// `id,x,z,y,observed`. Withheld outcomes are still written so the complete data
/// can be checked against external implementations.
pub fn write_trial_csv<W: Write>(ds: &TrialDataset, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "x", "z", "y", "observed"])?;
    for i in 0..ds.len() {
        w.write_record([
            i.to_string(),
            ds.x[i].to_string(),
            u8::from(ds.z[i]).to_string(),
            ds.y[i].to_string(),
            u8::from(ds.observed[i]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `id,x,z,yweek1..yweek4,observed1..observed4`.
pub fn write_repeated_csv<W: Write>(ds: &RepeatedDataset, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "x".into(), "z".into()];
    header.extend((1..=4).map(|k| format!("yweek{k}")));
    header.extend((1..=4).map(|k| format!("observed{k}")));
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let mut rec = vec![i.to_string(), ds.x[i].to_string(), u8::from(ds.z[i]).to_string()];
        rec.extend(ds.yweek[i].iter().map(f64::to_string));
        rec.extend(ds.week_observed[i].iter().map(|&o| u8::from(o).to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
