//! Multiple imputation by treatment arm for randomized trials with missing
//! continuous outcomes, and a Monte Carlo harness comparing it with
//! complete-case and mixed-model analyses.
//!
//! Layers, bottom up: [`rng`] streams and distributions, [`regress`] (OLS and
//! REML mixed models), [`trees`] (CART and random forests), [`datagen`],
//! [`impute`], [`analyze`], [`pool`], [`metrics`], [`harness`] and [`cli`].

pub mod analyze;
pub mod cli;
pub mod datagen;
pub mod harness;
pub mod impute;
pub mod metrics;
pub mod pool;
pub mod regress;
pub mod rng;
pub mod trees;
