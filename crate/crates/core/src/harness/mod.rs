//! Scenario registry, replication loop and result files.
//!
//! Replicate `r` of a scenario draws everything from `(master_seed, rep r)`:
//! data from `rep/datagen`, the mask from `rep/miss`, imputations from
//! `rep/imp i/arm a`. Replicates are independent, so they run in parallel and
//! are collected in replicate order.

mod output;
mod run;
mod scenario;

pub use output::*;
pub use run::*;
pub use scenario::*;

#[cfg(test)]
mod tests;
