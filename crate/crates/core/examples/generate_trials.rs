//! Simulated trials: a cross-sectional trial with logistic missingness and the
//! four-week repeated-measures trial. Writes both as CSV to stdout.
//!
//! Run with `cargo run --example generate_trials`.

use trialmi::datagen::{
    apply_missingness, apply_week_missingness, gen_study1, gen_study2, write_repeated_csv, write_trial_csv,
    Interaction, MissKind, MissMechanism, Relationship, Study1Config,
};
use trialmi::rng::{derive_stream, Label};

fn main() {
    let root = derive_stream(2024, &[(Label::Rep, 0)]);

    let cfg = Study1Config::new(12, Relationship::Harmonic, Interaction::None, 40.0);
    let full = gen_study1(&cfg, &mut root.derive(Label::Datagen, 0)).unwrap();
    let mech = MissMechanism::table2(MissKind::MarX, 0.3).unwrap();
    let masked = apply_missingness(&full, &mech, &mut root.derive(Label::Miss, 0));
    println!("# cross-sectional, {}: {} of {} outcomes missing", mech.id(), masked.n_missing(), masked.len());
    write_trial_csv(&masked, std::io::stdout()).unwrap();

    let full = gen_study2(10, &mut root.derive(Label::Datagen, 1)).unwrap();
    let masked = apply_week_missingness(&full, MissKind::MarZ, &mut root.derive(Label::Miss, 1));
    println!("\n# repeated measures, mar_z: {} missing weeks", masked.n_missing_weeks());
    write_repeated_csv(&masked, std::io::stdout()).unwrap();
}
