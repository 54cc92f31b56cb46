//! Counter-addressed random streams and the lognormal-by-moments sampler.
//!
//! Run with `cargo run --example streams_and_distributions`.

use trialmi::rng::{derive_stream, moments_to_lognormal, Dist, Label};

fn main() {
    // A stream is addressed by a seed and a path; siblings never overlap and
    // the same address always replays the same draws.
    let rep3 = derive_stream(42, &[(Label::Rep, 3)]);
    let mut a = rep3.derive(Label::Imp, 0).derive(Label::Arm, 1);
    let mut b = derive_stream(42, &[(Label::Rep, 3), (Label::Imp, 0), (Label::Arm, 1)]);
    let first: Vec<f64> = (0..3).map(|_| a.uniform()).collect();
    let again: Vec<f64> = (0..3).map(|_| b.uniform()).collect();
    assert_eq!(first, again);
    println!("rep 3 / imp 0 / arm 1: {first:.4?}");

    // Lognormal parameterised by its mean and SD on the natural scale.
    let ln = moments_to_lognormal(77.0, 52.0).unwrap();
    println!("LN(mean 77, sd 52): location = {:.4}, scale = {:.4}", ln.location, ln.scale);

    let dist = Dist::lognormal_by_moments(77.0, 52.0).unwrap();
    let mut s = derive_stream(1, &[(Label::Datagen, 0)]);
    let draws: Vec<f64> = (0..200_000).map(|_| dist.sample(&mut s)).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let sd = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();
    println!("sample of 200000: mean = {mean:.2}, sd = {sd:.2}");
}
