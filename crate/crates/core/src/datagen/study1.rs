use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rng::{DomainError, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relationship {
    Linear,
    TwoTier,
    Flattening,
    Quadratic,
    Harmonic,
}

impl Relationship {
    pub const ALL: [Relationship; 5] = [
        Relationship::Linear,
        Relationship::TwoTier,
        Relationship::Flattening,
        Relationship::Quadratic,
        Relationship::Harmonic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relationship::Linear => "linear",
            Relationship::TwoTier => "two_tier",
            Relationship::Flattening => "flattening",
            Relationship::Quadratic => "quadratic",
            Relationship::Harmonic => "harmonic",
        }
    }

    /// Covariate effect `f(x)`.
    pub fn f(self, x: f64) -> f64 {
        match self {
            Relationship::Linear => 25.0 * x,
            Relationship::TwoTier => {
                if x > 0.0 {
                    50.0
                } else {
                    0.0
                }
            }
            Relationship::Flattening => {
                let e = (-1.5 * x).exp();
                60.0 * (1.0 - e) / (1.0 + e)
            }
            Relationship::Quadratic => 25.0 * (x * x - 1.0),
            Relationship::Harmonic => 40.0 * (2.5 * x).sin(),
        }
    }
}

impl fmt::Display for Relationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Treatment-by-covariate interaction settings. All of them use the linear
/// control-arm curve; the treated-arm curve differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interaction {
    None,
    Small,
    Large,
    DifferentShapes,
    AbsentOneArm,
}

impl Interaction {
    pub const SETTINGS: [Interaction; 4] = [
        Interaction::Small,
        Interaction::Large,
        Interaction::DifferentShapes,
        Interaction::AbsentOneArm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Interaction::None => "none",
            Interaction::Small => "small",
            Interaction::Large => "large",
            Interaction::DifferentShapes => "different_shapes",
            Interaction::AbsentOneArm => "absent_one_arm",
        }
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Study1Config {
    pub n: usize,
    pub relationship: Relationship,
    pub interaction: Interaction,
    /// True average treatment effect.
    pub beta1: f64,
    /// Residual standard deviation.
    pub resid_sd: f64,
}

impl Study1Config {
    pub const DEFAULT_RESID_SD: f64 = 42.0;

    pub fn new(n: usize, relationship: Relationship, interaction: Interaction, beta1: f64) -> Self {
        Study1Config {
            n,
            relationship,
            interaction,
            beta1,
            resid_sd: Self::DEFAULT_RESID_SD,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.n < 4 {
            return Err(DomainError(format!("n = {} is too small", self.n)));
        }
        if !(self.resid_sd > 0.0 && self.resid_sd.is_finite()) {
            return Err(DomainError(format!("resid_sd must be positive, got {}", self.resid_sd)));
        }
        if !self.beta1.is_finite() {
            return Err(DomainError("beta1 must be finite".into()));
        }
        if self.interaction != Interaction::None && self.relationship != Relationship::Linear {
            return Err(DomainError(format!(
                "interaction '{}' fixes the covariate relationship; use 'linear'",
                self.interaction
            )));
        }
        Ok(())
    }

    /// `E[Y | X = x, Z = z]`. The arm constants make `E[m_1(X) - m_0(X)] = beta1`
    /// exactly under the covariate law of the setting.
    pub fn arm_mean(&self, x: f64, treated: bool) -> f64 {
        let b1 = self.beta1;
        let z = if treated { 1.0 } else { 0.0 };
        match self.interaction {
            Interaction::None => b1 * z + self.relationship.f(x),
            // E[X] = 0, so the interaction term has mean zero.
            Interaction::Small => 25.0 * x + 10.0 * x * z + b1 * z,
            Interaction::Large => 25.0 * x - 50.0 * x * z + b1 * z,
            // E[e^X] = e^{1/2}.
            Interaction::DifferentShapes => {
                if treated {
                    25.0 * x.exp() + b1 - 25.0 * 0.5f64.exp()
                } else {
                    25.0 * x
                }
            }
            // X = W^2 has mean 1.
            Interaction::AbsentOneArm => {
                if treated {
                    b1
                } else {
                    25.0 * x - 25.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialTruth {
    pub ate: f64,
    pub config: Study1Config,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    pub x: Vec<f64>,
    pub z: Vec<bool>,
    /// Complete outcomes; `observed` says which are available to the analysis.
    pub y: Vec<f64>,
    pub observed: Vec<bool>,
    pub truth: TrialTruth,
}

impl TrialDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_missing(&self) -> usize {
        self.observed.iter().filter(|o| !**o).count()
    }
}

/// Draws `(x, z, y)` row by row: covariate, treatment, residual.
pub fn gen_study1(cfg: &Study1Config, stream: &mut RngStream) -> Result<TrialDataset, DomainError> {
    cfg.validate()?;
    let n = cfg.n;
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let w = stream.standard_normal();
        let xi = if cfg.interaction == Interaction::AbsentOneArm {
            w * w
        } else {
            w
        };
        let zi = stream.bernoulli(0.5);
        let eps = stream.normal(0.0, cfg.resid_sd);
        x.push(xi);
        z.push(zi);
        y.push(cfg.arm_mean(xi, zi) + eps);
    }
    Ok(TrialDataset {
        x,
        z,
        y,
        observed: vec![true; n],
        truth: TrialTruth {
            ate: cfg.beta1,
            config: *cfg,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MissKind {
    #[serde(rename = "mcar")]
    Mcar,
    #[serde(rename = "mar_x")]
    MarX,
    #[serde(rename = "mar_z")]
    MarZ,
}

impl MissKind {
    pub const ALL: [MissKind; 3] = [MissKind::Mcar, MissKind::MarX, MissKind::MarZ];

    pub fn as_str(self) -> &'static str {
        match self {
            MissKind::Mcar => "mcar",
            MissKind::MarX => "mar_x",
            MissKind::MarZ => "mar_z",
        }
    }
}

impl fmt::Display for MissKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Logistic selection model: `P(missing) = expit(alpha0 + alpha1 x + alpha2 z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissMechanism {
    pub kind: MissKind,
    pub target_rate: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl MissMechanism {
    /// The six calibrated mechanisms (10% and 30% for each kind).
    pub fn table2(kind: MissKind, rate: f64) -> Result<Self, DomainError> {
        let ten = (rate - 0.10).abs() < 1e-9;
        let thirty = (rate - 0.30).abs() < 1e-9;
        let (alpha0, alpha1, alpha2) = match (kind, ten, thirty) {
            (MissKind::Mcar, true, _) => (-2.197, 0.0, 0.0),
            (MissKind::Mcar, _, true) => (-0.847, 0.0, 0.0),
            (MissKind::MarX, true, _) => (-2.5, -1.0, 0.0),
            (MissKind::MarX, _, true) => (-1.0, -1.0, 0.0),
            (MissKind::MarZ, true, _) => (-1.55, 0.0, -1.9),
            (MissKind::MarZ, _, true) => (-0.4, 0.0, -1.0),
            _ => return Err(DomainError(format!("no calibrated mechanism for rate {rate}"))),
        };
        Ok(MissMechanism {
            kind,
            target_rate: if ten { 0.10 } else { 0.30 },
            alpha0,
            alpha1,
            alpha2,
        })
    }

    pub fn all_table2() -> Vec<MissMechanism> {
        MissKind::ALL
            .iter()
            .flat_map(|&k| [0.10, 0.30].map(|r| Self::table2(k, r).expect("calibrated")))
            .collect()
    }

    /// Short id such as `marx30`.
    pub fn id(&self) -> String {
        let kind = self.kind.as_str().replace('_', "");
        format!("{kind}{}", (self.target_rate * 100.0).round() as u32)
    }

    pub fn prob_missing(&self, x: f64, treated: bool) -> f64 {
        let z = if treated { 1.0 } else { 0.0 };
        let eta = self.alpha0 + self.alpha1 * x + self.alpha2 * z;
        1.0 / (1.0 + (-eta).exp())
    }
}

/// Withholds each outcome independently; one Bernoulli draw per row, in row order.
/// Outcome values are left in place.
pub fn apply_missingness(ds: &TrialDataset, mech: &MissMechanism, stream: &mut RngStream) -> TrialDataset {
    let observed = ds
        .x
        .iter()
        .zip(&ds.z)
        .zip(&ds.observed)
        .map(|((&x, &z), &obs)| {
            let missing = stream.bernoulli(mech.prob_missing(x, z));
            obs && !missing
        })
        .collect();
    TrialDataset {
        observed,
        ..ds.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn arm_difference(ds: &TrialDataset) -> (f64, f64) {
        let mut s = [(0.0, 0.0, 0.0); 2];
        for (y, &z) in ds.y.iter().zip(&ds.z) {
            let a = &mut s[usize::from(z)];
            a.0 += 1.0;
            a.1 += y;
            a.2 += y * y;
        }
        let stats = s.map(|(n, sum, ss)| {
            let m = sum / n;
            (m, (ss / n - m * m) * n / (n - 1.0) / n)
        });
        (stats[1].0 - stats[0].0, (stats[0].1 + stats[1].1).sqrt())
    }

    #[test]
    fn marginal_effect_matches_beta1_in_every_setting() {
        let mut configs: Vec<Study1Config> = Relationship::ALL
            .iter()
            .map(|&r| Study1Config::new(1_000_000, r, Interaction::None, 40.0))
            .collect();
        configs.push(Study1Config::new(1_000_000, Relationship::Quadratic, Interaction::None, 0.0));
        for &i in &Interaction::SETTINGS {
            configs.push(Study1Config::new(1_000_000, Relationship::Linear, i, 40.0));
        }
        for (k, cfg) in configs.iter().enumerate() {
            let ds = gen_study1(cfg, &mut derive_stream(100 + k as u64, &[])).unwrap();
            let (diff, mcse) = arm_difference(&ds);
            assert!(
                (diff - cfg.beta1).abs() < 4.0 * mcse,
                "{:?}/{:?}: {diff} (mcse {mcse})",
                cfg.relationship,
                cfg.interaction
            );
        }
    }

    #[test]
    fn large_interaction_flips_conditional_effect() {
        let cfg = Study1Config::new(10, Relationship::Linear, Interaction::Large, 40.0);
        let effect = |x| cfg.arm_mean(x, true) - cfg.arm_mean(x, false);
        assert!(effect(-1.0) > 0.0 && effect(1.5) < 0.0);
    }

    #[test]
    fn absent_one_arm_uses_squared_covariate() {
        let cfg = Study1Config::new(500, Relationship::Linear, Interaction::AbsentOneArm, 0.0);
        let ds = gen_study1(&cfg, &mut derive_stream(3, &[])).unwrap();
        assert!(ds.x.iter().all(|&x| x >= 0.0));
        assert!(ds.observed.iter().all(|&o| o));
    }

    #[test]
    fn interaction_requires_linear_relationship() {
        let cfg = Study1Config::new(100, Relationship::Harmonic, Interaction::Small, 40.0);
        assert!(cfg.validate().is_err());
        let cfg = Study1Config { resid_sd: 0.0, ..Study1Config::new(100, Relationship::Linear, Interaction::None, 0.0) };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn generation_is_reproducible() {
        let cfg = Study1Config::new(50, Relationship::TwoTier, Interaction::None, 40.0);
        let a = gen_study1(&cfg, &mut derive_stream(9, &[])).unwrap();
        let b = gen_study1(&cfg, &mut derive_stream(9, &[])).unwrap();
        assert_eq!(a, b);
    }

    /// `E_X[expit(a0 + a1 X)]` for `X ~ N(0,1)` by composite Simpson on [-12, 12].
    fn quadrature_rate(m: &MissMechanism) -> f64 {
        let expit = |e: f64| 1.0 / (1.0 + (-e).exp());
        let arm = |z: f64| {
            let (a, b, k) = (-12.0, 12.0, 4000);
            let h = (b - a) / k as f64;
            let g = |x: f64| {
                expit(m.alpha0 + m.alpha1 * x + m.alpha2 * z) * (-0.5 * x * x).exp()
                    / (2.0 * std::f64::consts::PI).sqrt()
            };
            let mut s = g(a) + g(b);
            for i in 1..k {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * g(a + i as f64 * h);
            }
            s * h / 3.0
        };
        0.5 * (arm(0.0) + arm(1.0))
    }

    #[test]
    fn empirical_rates_follow_selection_model() {
        let base = Study1Config::new(1_000_000, Relationship::Linear, Interaction::None, 0.0);
        let ds = gen_study1(&base, &mut derive_stream(11, &[])).unwrap();
        for (k, mech) in MissMechanism::all_table2().iter().enumerate() {
            let exact = quadrature_rate(mech);
            if mech.id() == "marx10" {
                // The published coefficients integrate to 10.54%, not 10%.
                assert!((exact - 0.10536).abs() < 5e-5, "{exact}");
            } else {
                assert!((exact - mech.target_rate).abs() < 0.005, "{}: {exact}", mech.id());
            }
            let out = apply_missingness(&ds, mech, &mut derive_stream(12, &[(crate::rng::Label::Miss, k as u64)]));
            let frac = out.n_missing() as f64 / out.len() as f64;
            let mcse = (exact * (1.0 - exact) / out.len() as f64).sqrt();
            assert!((frac - exact).abs() < 4.0 * mcse, "{}: {frac} vs {exact}", mech.id());
            assert_eq!(out.y, ds.y);
            assert_eq!(out.x, ds.x);
            assert_eq!(out.z, ds.z);
        }
    }

    #[test]
    fn mcar_ten_percent_is_tight() {
        let mech = MissMechanism::table2(MissKind::Mcar, 0.1).unwrap();
        assert!((mech.prob_missing(0.0, false) - 0.1).abs() < 1e-4);
        let base = Study1Config::new(1_000_000, Relationship::Linear, Interaction::None, 0.0);
        let ds = gen_study1(&base, &mut derive_stream(13, &[])).unwrap();
        let out = apply_missingness(&ds, &mech, &mut derive_stream(14, &[]));
        let frac = out.n_missing() as f64 / out.len() as f64;
        assert!((frac - 0.0999).abs() < 0.001);
    }

    #[test]
    fn mar_x_missing_rows_concentrate_below_zero() {
        let mech = MissMechanism::table2(MissKind::MarX, 0.1).unwrap();
        let base = Study1Config::new(1_000_000, Relationship::Linear, Interaction::None, 0.0);
        let ds = gen_study1(&base, &mut derive_stream(15, &[])).unwrap();
        let out = apply_missingness(&ds, &mech, &mut derive_stream(16, &[]));
        let (neg, miss) = out
            .x
            .iter()
            .zip(&out.observed)
            .filter(|(_, &o)| !o)
            .fold((0usize, 0usize), |(n, m), (&x, _)| (n + usize::from(x < 0.0), m + 1));
        let share = neg as f64 / miss as f64;
        assert!((share - 0.80).abs() < 0.01, "{share}");
    }

    #[test]
    fn mechanism_ids_and_constraints() {
        let ids: Vec<String> = MissMechanism::all_table2().iter().map(MissMechanism::id).collect();
        assert_eq!(ids, ["mcar10", "mcar30", "marx10", "marx30", "marz10", "marz30"]);
        for m in MissMechanism::all_table2() {
            match m.kind {
                MissKind::Mcar => assert!(m.alpha1 == 0.0 && m.alpha2 == 0.0),
                MissKind::MarX => assert_eq!(m.alpha2, 0.0),
                MissKind::MarZ => assert_eq!(m.alpha1, 0.0),
            }
        }
        assert!(MissMechanism::table2(MissKind::Mcar, 0.2).is_err());
    }
}
