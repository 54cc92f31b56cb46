use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analyze::{EstimandId, MmrmDesign};
use crate::datagen::{Interaction, MissKind, MissMechanism, Relationship, Study1Config, STUDY2_DELTA};
use crate::impute::{MiKind, MiMethod, MiceOptions, DEFAULT_M};
use crate::metrics::SummaryOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Study1,
    Study2,
}

impl Study {
    pub fn as_str(self) -> &'static str {
        match self {
            Study::Study1 => "study1",
            Study::Study2 => "study2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Ancova,
    Mmrm,
}

impl Analysis {
    pub fn estimands(self) -> &'static [EstimandId] {
        match self {
            Analysis::Ancova => &[EstimandId::Ate],
            Analysis::Mmrm => &EstimandId::MMRM,
        }
    }
}

/// How missing outcomes are handled before analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodSpec {
    /// Complete cases.
    Cc,
    /// Likelihood-based repeated-measures fit on the incomplete weeks.
    MmrmDefault,
    /// Multiple imputation by arm.
    Mi { method: MiMethod },
}

impl MethodSpec {
    pub fn mi(kind: MiKind) -> Self {
        MethodSpec::Mi {
            method: MiMethod::new(kind),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            MethodSpec::Cc => "cc",
            MethodSpec::MmrmDefault => "mmrm_default",
            MethodSpec::Mi { method } => match method.kind {
                MiKind::Norm => "mi_norm",
                MiKind::Pmm => "mi_pmm",
                MiKind::Cart => "mi_cart",
                MiKind::RfDoove => "mi_rf",
                MiKind::RfCaliber => "mi_rf_caliber",
            },
        }
    }

    pub fn accepts(&self, study: Study, analysis: Analysis) -> bool {
        match (self, study, analysis) {
            (_, Study::Study1, Analysis::Mmrm) => false,
            (MethodSpec::Cc, _, Analysis::Ancova) => true,
            (MethodSpec::Cc, _, Analysis::Mmrm) => false,
            (MethodSpec::MmrmDefault, Study::Study2, Analysis::Mmrm) => true,
            (MethodSpec::MmrmDefault, _, _) => false,
            (MethodSpec::Mi { .. }, _, _) => true,
        }
    }

    pub const IDS: [&'static str; 7] = ["cc", "mmrm_default", "mi_norm", "mi_pmm", "mi_cart", "mi_rf", "mi_rf_caliber"];
}

impl FromStr for MethodSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "cc" => MethodSpec::Cc,
            "mmrm_default" => MethodSpec::MmrmDefault,
            "mi_norm" => MethodSpec::mi(MiKind::Norm),
            "mi_pmm" => MethodSpec::mi(MiKind::Pmm),
            "mi_cart" => MethodSpec::mi(MiKind::Cart),
            "mi_rf" | "mi_rf_doove" => MethodSpec::mi(MiKind::RfDoove),
            "mi_rf_caliber" => MethodSpec::mi(MiKind::RfCaliber),
            _ => return Err(format!("unknown method '{s}' (expected one of {})", Self::IDS.join(", "))),
        })
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum Design {
    Study1 { config: Study1Config, mechanism: MissMechanism },
    Study2 { n: usize, mechanism: MissKind },
}

impl Design {
    pub fn study(&self) -> Study {
        match self {
            Design::Study1 { .. } => Study::Study1,
            Design::Study2 { .. } => Study::Study2,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Design::Study1 { config, .. } => config.n,
            Design::Study2 { n, .. } => *n,
        }
    }

    pub fn true_effect(&self) -> f64 {
        match self {
            Design::Study1 { config, .. } => config.beta1,
            Design::Study2 { .. } => STUDY2_DELTA,
        }
    }

    /// Covariate setting label: relationship, `int-<setting>`, or `repeated`.
    pub fn setting(&self) -> String {
        match self {
            Design::Study1 { config, .. } if config.interaction != Interaction::None => {
                format!("int-{}", config.interaction.as_str().replace('_', "-"))
            }
            Design::Study1 { config, .. } => config.relationship.as_str().replace('_', "-"),
            Design::Study2 { .. } => "repeated".into(),
        }
    }

    pub fn mechanism_id(&self) -> String {
        match self {
            Design::Study1 { mechanism, .. } => mechanism.id(),
            Design::Study2 { mechanism, .. } => mechanism.as_str().replace('_', ""),
        }
    }

    pub fn miss_pct(&self) -> u32 {
        match self {
            Design::Study1 { mechanism, .. } => (mechanism.target_rate * 100.0).round() as u32,
            Design::Study2 { .. } => 30,
        }
    }

    /// Stable identifier, e.g. `s1_quadratic_marz30_n200_alt` or `s2_mcar_n145`.
    pub fn scenario_id(&self) -> String {
        match self {
            Design::Study1 { config, .. } => {
                let effect = match config.beta1 {
                    b if b == 0.0 => "null".to_string(),
                    b if b == 40.0 => "alt".to_string(),
                    b => format!("b{b}"),
                };
                let sd = if config.resid_sd == Study1Config::DEFAULT_RESID_SD {
                    String::new()
                } else {
                    format!("_sd{}", config.resid_sd)
                };
                format!("s1_{}_{}_n{}_{effect}{sd}", self.setting(), self.mechanism_id(), config.n)
            }
            Design::Study2 { n, .. } => format!("s2_{}_n{n}", self.mechanism_id()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub design: Design,
    pub methods: Vec<MethodSpec>,
    pub analyses: Vec<Analysis>,
    pub n_reps: usize,
    pub master_seed: u64,
    /// Imputations per method.
    pub m: usize,
    pub mice: MiceOptions,
    pub mmrm_design: MmrmDesign,
    pub summary: SummaryOptions,
}

pub const DEFAULT_REPS: usize = 5000;

impl Scenario {
    /// Default methods and analyses for the design's study.
    pub fn new(design: Design, n_reps: usize, master_seed: u64) -> Self {
        let (methods, analyses) = match design.study() {
            Study::Study1 => (default_study1_methods(), vec![Analysis::Ancova]),
            Study::Study2 => (default_study2_methods(), vec![Analysis::Ancova, Analysis::Mmrm]),
        };
        Scenario {
            id: design.scenario_id(),
            design,
            methods,
            analyses,
            n_reps,
            master_seed,
            m: DEFAULT_M,
            mice: MiceOptions::default(),
            mmrm_design: MmrmDesign::default(),
            summary: SummaryOptions::new(),
        }
    }

    pub fn with_methods(mut self, methods: Vec<MethodSpec>) -> Self {
        self.methods = methods;
        self
    }

    /// Valid `(method, analysis)` pairs in method order.
    pub fn pairs(&self) -> Vec<(MethodSpec, Analysis)> {
        let study = self.design.study();
        self.methods
            .iter()
            .flat_map(|m| {
                self.analyses
                    .iter()
                    .filter(move |a| m.accepts(study, **a))
                    .map(move |a| (*m, *a))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        let study = self.design.study();
        if let Design::Study1 { config, .. } = &self.design {
            config.validate().map_err(|e| e.0)?;
        }
        if let Design::Study2 { n, .. } = self.design {
            if n < 10 {
                return Err(format!("study2 n must be >= 10, got {n}"));
            }
        }
        if self.methods.is_empty() {
            return Err("no methods".into());
        }
        if self.analyses.is_empty() {
            return Err("no analyses".into());
        }
        if study == Study::Study1 && self.analyses.contains(&Analysis::Mmrm) {
            return Err("study1 supports only the ancova analysis".into());
        }
        for m in &self.methods {
            if !self.analyses.iter().any(|a| m.accepts(study, *a)) {
                return Err(format!("method '{m}' has no valid analysis in this scenario"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.methods {
            if !seen.insert(m.id()) {
                return Err(format!("method '{m}' listed twice"));
            }
        }
        if self.m < 2 && self.methods.iter().any(|m| matches!(m, MethodSpec::Mi { .. })) {
            return Err(format!("m must be >= 2 for pooling, got {}", self.m));
        }
        Ok(())
    }

    /// Records one run of this scenario produces.
    pub fn expected_records(&self) -> usize {
        self.n_reps * self.pairs().iter().map(|(_, a)| a.estimands().len()).sum::<usize>()
    }

    /// SHA-256 of the canonical JSON form plus the library version.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("scenario serializes"));
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn default_study1_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::Cc,
        MethodSpec::mi(MiKind::Norm),
        MethodSpec::mi(MiKind::Pmm),
        MethodSpec::mi(MiKind::Cart),
        MethodSpec::mi(MiKind::RfDoove),
    ]
}

pub fn default_study2_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::Cc,
        MethodSpec::MmrmDefault,
        MethodSpec::mi(MiKind::Norm),
        MethodSpec::mi(MiKind::Pmm),
        MethodSpec::mi(MiKind::Cart),
        MethodSpec::mi(MiKind::RfDoove),
    ]
}

/// Per-scenario master seed derived from a run seed and the scenario id.
pub fn scenario_seed(run_seed: u64, scenario_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    h.update(scenario_id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

pub const STUDY1_SAMPLE_SIZES: [usize; 4] = [50, 100, 200, 500];

/// Every study-1 design: relationships under null and alternative, interaction
/// settings under the alternative, each with the six missingness mechanisms.
pub fn study1_grid(sample_sizes: &[usize]) -> Vec<Design> {
    let mut out = Vec::new();
    for &n in sample_sizes {
        for &rel in &Relationship::ALL {
            for beta1 in [0.0, 40.0] {
                for mech in MissMechanism::all_table2() {
                    out.push(Design::Study1 {
                        config: Study1Config::new(n, rel, Interaction::None, beta1),
                        mechanism: mech,
                    });
                }
            }
        }
        for &int in &Interaction::SETTINGS {
            for mech in MissMechanism::all_table2() {
                out.push(Design::Study1 {
                    config: Study1Config::new(n, Relationship::Linear, int, 40.0),
                    mechanism: mech,
                });
            }
        }
    }
    out
}

pub fn study2_designs(n: usize) -> Vec<Design> {
    MissKind::ALL.iter().map(|&k| Design::Study2 { n, mechanism: k }).collect()
}

/// Which plot a design feeds, if any.
pub fn figure_for(design: &Design) -> Option<&'static str> {
    match design {
        Design::Study1 { config, .. } if config.n == 200 && config.interaction == Interaction::None && config.beta1 == 0.0 => {
            Some("fig3")
        }
        Design::Study1 { config, .. } if config.n == 200 && config.beta1 == 40.0 => Some("fig4"),
        Design::Study2 { n: 145, .. } => Some("fig5"),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegistryEntry {
    pub id: String,
    pub study: Study,
    pub setting: String,
    pub mechanism: String,
    pub n: usize,
    pub true_effect: f64,
    pub figure: Option<&'static str>,
}

/// Built-in scenario registry: the full study-1 grid and the study-2 designs.
/// Identifiers are a stable contract.
pub fn registry() -> Vec<RegistryEntry> {
    study1_grid(&STUDY1_SAMPLE_SIZES)
        .into_iter()
        .chain(study2_designs(145))
        .map(|d| RegistryEntry {
            id: d.scenario_id(),
            study: d.study(),
            setting: d.setting(),
            mechanism: d.mechanism_id(),
            n: d.n(),
            true_effect: d.true_effect(),
            figure: figure_for(&d),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_count() {
        assert_eq!(study1_grid(&STUDY1_SAMPLE_SIZES).len(), (5 * 2 * 6 + 4 * 6) * 4);
        let reg = registry();
        assert_eq!(reg.len(), 336 + 3);
        let ids: std::collections::HashSet<_> = reg.iter().map(|e| e.id.clone()).collect();
        assert_eq!(ids.len(), reg.len());
    }

    #[test]
    fn stable_ids() {
        let d = Design::Study1 {
            config: Study1Config::new(200, Relationship::TwoTier, Interaction::None, 0.0),
            mechanism: MissMechanism::table2(MissKind::MarZ, 0.3).unwrap(),
        };
        assert_eq!(d.scenario_id(), "s1_two-tier_marz30_n200_null");
        let d = Design::Study1 {
            config: Study1Config::new(200, Relationship::Linear, Interaction::DifferentShapes, 40.0),
            mechanism: MissMechanism::table2(MissKind::Mcar, 0.1).unwrap(),
        };
        assert_eq!(d.scenario_id(), "s1_int-different-shapes_mcar10_n200_alt");
        assert_eq!(Design::Study2 { n: 145, mechanism: MissKind::MarX }.scenario_id(), "s2_marx_n145");
        let figs: Vec<_> = registry().iter().filter_map(|e| e.figure).collect();
        assert_eq!(figs.iter().filter(|f| **f == "fig3").count(), 30);
        assert_eq!(figs.iter().filter(|f| **f == "fig4").count(), 54);
        assert_eq!(figs.iter().filter(|f| **f == "fig5").count(), 3);
    }

    #[test]
    fn method_ids_round_trip() {
        for id in MethodSpec::IDS {
            assert_eq!(id.parse::<MethodSpec>().unwrap().id(), id);
        }
        assert!("knn".parse::<MethodSpec>().is_err());
    }

    #[test]
    fn pairing_rules() {
        let s2 = Scenario::new(study2_designs(145)[0], 10, 1);
        let pairs = s2.pairs();
        assert!(pairs.contains(&(MethodSpec::Cc, Analysis::Ancova)));
        assert!(!pairs.contains(&(MethodSpec::Cc, Analysis::Mmrm)));
        assert!(pairs.contains(&(MethodSpec::MmrmDefault, Analysis::Mmrm)));
        assert!(s2.validate().is_ok());
        // cc: 1, mmrm_default: 5, each of four MI methods: 1 + 5.
        assert_eq!(s2.expected_records(), 10 * (1 + 5 + 4 * 6));

        let mut s1 = Scenario::new(study1_grid(&[200])[0], 10, 1);
        assert!(s1.validate().is_ok());
        s1.methods.push(MethodSpec::MmrmDefault);
        assert!(s1.validate().unwrap_err().contains("mmrm_default"));
    }

    #[test]
    fn content_hash_tracks_configuration() {
        let a = Scenario::new(study2_designs(145)[0], 10, 1);
        let mut b = a.clone();
        assert_eq!(a.content_hash(), b.content_hash());
        b.n_reps = 11;
        assert_ne!(a.content_hash(), b.content_hash());
        assert_ne!(scenario_seed(1, "a"), scenario_seed(1, "b"));
    }
}
