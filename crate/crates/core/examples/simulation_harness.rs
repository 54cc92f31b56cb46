//! One study scenario run through the harness: replicate loop, failure
//! accounting and performance measures with Monte Carlo standard errors.
//!
//! Run with `cargo run --release --example simulation_harness`.

use trialmi::datagen::{Interaction, MissKind, MissMechanism, Relationship, Study1Config};
use trialmi::harness::{run_scenario, Design, Scenario};

fn main() {
    let design = Design::Study1 {
        config: Study1Config::new(200, Relationship::TwoTier, Interaction::None, 40.0),
        mechanism: MissMechanism::table2(MissKind::Mcar, 0.3).unwrap(),
    };
    let mut sc = Scenario::new(design, 100, 99);
    sc.m = 10;
    let parallelism = std::thread::available_parallelism().map_or(1, |n| n.get());
    let res = run_scenario(&sc, parallelism);

    println!("{} ({} reps, {:.1}s)", sc.id, sc.n_reps, res.wall_time_secs);
    println!("{:<8} {:>8} {:>7} {:>8} {:>7} {:>9} {:>7}", "method", "bias", "mcse", "se_ratio", "cover", "mse", "power");
    for row in &res.summaries {
        let s = &row.summary;
        println!(
            "{:<8} {:>8.3} {:>7.3} {:>8.3} {:>7.3} {:>9.2} {:>7.3}",
            row.method, s.bias, s.mcse_bias, s.se_ratio, s.coverage, s.mse, s.rejection_rate
        );
    }
}
