//! Deterministic, splittable random streams and the samplers used across the crate.
//!
//! A stream is identified by a master seed and a path of labeled indices, e.g.
//! `[rep:12, imp:3, arm:1]`. The generator seed is the SHA-256 digest of
//!
//! ```text
//! master_seed (u64, little endian)
//! for each (label, index) in path:
//!     label bytes (ASCII), 0x00, index (u64, little endian)
//! ```
//!
//! and the generator is ChaCha8 keyed by that digest. Deriving a child stream is a
//! pure function of `(master_seed, path)`; it never consumes draws from the parent.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error: {0}")]
pub struct DomainError(pub String);

/// Fixed path labels. Their string forms are part of the stream derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Rep,
    Arm,
    Imp,
    Boot,
    Miss,
    Datagen,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Rep => "rep",
            Label::Arm => "arm",
            Label::Imp => "imp",
            Label::Boot => "boot",
            Label::Miss => "miss",
            Label::Datagen => "datagen",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A reproducible random stream.
#[derive(Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    master_seed: u64,
    path: Vec<(Label, u64)>,
}

impl fmt::Debug for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RngStream({}", self.master_seed)?;
        for (label, idx) in &self.path {
            write!(f, ", {label}:{idx}")?;
        }
        write!(f, ")")
    }
}

fn stream_key(master_seed: u64, path: &[(Label, u64)]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    for (label, idx) in path {
        hasher.update(label.as_str().as_bytes());
        hasher.update([0u8]);
        hasher.update(idx.to_le_bytes());
    }
    hasher.finalize().into()
}

/// Build the stream for `(master_seed, path)`.
pub fn derive_stream(master_seed: u64, path: &[(Label, u64)]) -> RngStream {
    RngStream {
        rng: ChaCha8Rng::from_seed(stream_key(master_seed, path)),
        master_seed,
        path: path.to_vec(),
    }
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        derive_stream(master_seed, &[])
    }

    /// Child stream with `(label, index)` appended to this stream's path.
    pub fn derive(&self, label: Label, index: u64) -> RngStream {
        let mut path = self.path.clone();
        path.push((label, index));
        derive_stream(self.master_seed, &path)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[(Label, u64)] {
        &self.path
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Uniform index in `0..len`. Panics if `len == 0`.
    pub fn index(&mut self, len: usize) -> usize {
        assert!(len > 0, "cannot draw an index from an empty range");
        self.rng.random_range(0..len)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        // p = 0 must never fire and p = 1 must always fire.
        self.uniform() < p
    }

    pub fn chi_square(&mut self, k: f64) -> f64 {
        ChiSquared::new(k)
            .expect("chi-square degrees of freedom must be positive")
            .sample(&mut self.rng)
    }

    /// `amount` distinct indices from `0..len`, in draw order.
    pub fn sample_without_replacement(&mut self, len: usize, amount: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.rng, len, amount.min(len)).into_vec()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Natural-scale moments of a lognormal variable together with its log-scale parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalMoments {
    pub mean: f64,
    pub sd: f64,
    pub location: f64,
    pub scale: f64,
}

/// Invert natural-scale mean and sd into lognormal location and scale.
pub fn moments_to_lognormal(mean: f64, sd: f64) -> Result<LogNormalMoments, DomainError> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(DomainError(format!("lognormal mean must be positive, got {mean}")));
    }
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(DomainError(format!("lognormal sd must be positive, got {sd}")));
    }
    let cv = sd / mean;
    let scale2 = (cv * cv).ln_1p();
    Ok(LogNormalMoments {
        mean,
        sd,
        location: mean.ln() - scale2 / 2.0,
        scale: scale2.sqrt(),
    })
}

impl LogNormalMoments {
    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        (self.location + self.scale * stream.standard_normal()).exp()
    }
}

/// Distributions drawn by the data generators and imputation engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    Normal { mean: f64, sd: f64 },
    LogNormalByMoments(LogNormalMoments),
    Bernoulli { p: f64 },
    UniformInt { low: i64, high: i64 },
    ChiSquare { k: f64 },
}

impl Dist {
    pub fn normal(mean: f64, sd: f64) -> Result<Self, DomainError> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(DomainError(format!("normal({mean}, {sd}) requires finite mean and sd > 0")));
        }
        Ok(Dist::Normal { mean, sd })
    }

    pub fn lognormal_by_moments(mean: f64, sd: f64) -> Result<Self, DomainError> {
        moments_to_lognormal(mean, sd).map(Dist::LogNormalByMoments)
    }

    pub fn bernoulli(p: f64) -> Result<Self, DomainError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(DomainError(format!("bernoulli probability {p} outside [0, 1]")));
        }
        Ok(Dist::Bernoulli { p })
    }

    /// Uniform integer on the closed range `[low, high]`.
    pub fn uniform_int(low: i64, high: i64) -> Result<Self, DomainError> {
        if low > high {
            return Err(DomainError(format!("uniform_int({low}, {high}) has an empty range")));
        }
        Ok(Dist::UniformInt { low, high })
    }

    pub fn chi_square(k: f64) -> Result<Self, DomainError> {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(DomainError(format!("chi_square degrees of freedom {k} must be >= 1")));
        }
        Ok(Dist::ChiSquare { k })
    }

    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        match *self {
            Dist::Normal { mean, sd } => stream.normal(mean, sd),
            Dist::LogNormalByMoments(ln) => ln.sample(stream),
            Dist::Bernoulli { p } => {
                if stream.bernoulli(p) {
                    1.0
                } else {
                    0.0
                }
            }
            Dist::UniformInt { low, high } => stream.rng.random_range(low..=high) as f64,
            Dist::ChiSquare { k } => stream.chi_square(k),
        }
    }
}
