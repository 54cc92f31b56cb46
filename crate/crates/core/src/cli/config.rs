//! TOML run configuration.
//!
//! ```toml
//! [run]
//! seed = 42
//! reps = 1000
//! parallelism = 4
//! out = "results"
//! formats = ["csv", "json"]
//! dump_records = false
//!
//! [[scenario]]
//! study = "study1"
//! n = 200
//! relationship = ["linear", "quadratic"]   # axis fields take a value or a list
//! effect = ["null", "alt"]
//! mechanism = ["mcar", "mar_x", "mar_z"]
//! miss_pct = [10, 30]
//! methods = ["cc", "mi_norm", "mi_pmm", "mi_cart", "mi_rf"]
//! ```
//!
//! Each `[[scenario]]` block expands to the cartesian product of its axes.

use std::collections::HashSet;

use serde::Deserialize;

use crate::analyze::MmrmDesign;
use crate::datagen::{Interaction, MissKind, MissMechanism, Relationship, Study1Config};
use crate::harness::{scenario_seed, Analysis, Design, Format, MethodSpec, Scenario, Study, DEFAULT_REPS};
use crate::impute::{LeafDraw, MiceOptions, DEFAULT_M};
use crate::metrics::SummaryOptions;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub parallelism: Option<usize>,
    pub out: Option<String>,
    pub formats: Option<Vec<Format>>,
    pub dump_records: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Effect {
    Null,
    Alt,
}

/// Per-method tuning applied to every imputation method of a block.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tuning {
    pub donors: Option<usize>,
    pub cart_minbucket: Option<usize>,
    pub cart_cp: Option<f64>,
    pub leaf_draw: Option<LeafDraw>,
    pub rf_ntree: Option<usize>,
    pub rf_mtry: Option<usize>,
    pub rf_minbucket: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    pub study: Option<Study>,
    pub n: Option<OneOrMany<usize>>,
    pub relationship: Option<OneOrMany<Relationship>>,
    pub interaction: Option<OneOrMany<Interaction>>,
    pub effect: Option<OneOrMany<Effect>>,
    pub beta1: Option<OneOrMany<f64>>,
    pub resid_sd: Option<f64>,
    pub mechanism: Option<OneOrMany<MissKind>>,
    pub miss_pct: Option<OneOrMany<u32>>,
    pub methods: Option<Vec<String>>,
    pub analyses: Option<Vec<Analysis>>,
    pub m: Option<usize>,
    pub tuning: Option<Tuning>,
    pub mice: Option<MiceOptions>,
    pub mmrm: Option<MmrmDesign>,
    pub summary: Option<SummaryOptions>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub scenario: Vec<ScenarioBlock>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
}

pub const DEFAULT_SEED: u64 = 20240101;

impl RunConfig {
    pub fn seed(&self, o: &Overrides) -> u64 {
        o.seed.or(self.run.seed).unwrap_or(DEFAULT_SEED)
    }

    pub fn reps(&self, o: &Overrides) -> usize {
        o.reps.or(self.run.reps).unwrap_or(DEFAULT_REPS)
    }

    /// Expands and validates every block. Scenario ids must be unique.
    pub fn scenarios(&self, o: &Overrides) -> Result<Vec<Scenario>, ConfigError> {
        if self.scenario.is_empty() {
            return Err(ConfigError("config defines no [[scenario]] blocks".into()));
        }
        let (seed, reps) = (self.seed(o), self.reps(o));
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for (i, block) in self.scenario.iter().enumerate() {
            let ctx = |msg: String| ConfigError(format!("scenario[{i}]: {msg}"));
            for sc in block.expand(seed, reps).map_err(ctx)? {
                sc.validate().map_err(|e| ctx(format!("{}: {e}", sc.id)))?;
                if !seen.insert(sc.id.clone()) {
                    return Err(ctx(format!("duplicate scenario id '{}'", sc.id)));
                }
                out.push(sc);
            }
        }
        Ok(out)
    }
}

fn forbid<T>(field: &Option<T>, key: &str, study: &str) -> Result<(), String> {
    match field {
        Some(_) => Err(format!("key `{key}` is not valid for {study}")),
        None => Ok(()),
    }
}

impl ScenarioBlock {
    pub fn expand(&self, run_seed: u64, reps: usize) -> Result<Vec<Scenario>, String> {
        let study = self.study.ok_or("missing required key `study`")?;
        let designs = match study {
            Study::Study1 => self.study1_designs()?,
            Study::Study2 => self.study2_designs()?,
        };
        let methods = match &self.methods {
            Some(ids) => ids
                .iter()
                .map(|s| s.parse::<MethodSpec>().map(|m| self.tuned(m)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| format!("methods: {e}"))?,
            None => Vec::new(),
        };
        Ok(designs
            .into_iter()
            .map(|d| {
                let mut sc = Scenario::new(d, reps, 0);
                sc.master_seed = scenario_seed(run_seed, &sc.id);
                if !methods.is_empty() {
                    sc.methods = methods.clone();
                } else {
                    sc.methods = sc.methods.iter().map(|m| self.tuned(*m)).collect();
                }
                if let Some(a) = &self.analyses {
                    sc.analyses = a.clone();
                }
                sc.m = self.m.unwrap_or(DEFAULT_M);
                sc.mice = self.mice.unwrap_or_default();
                sc.mmrm_design = self.mmrm.unwrap_or_default();
                sc.summary = self.summary.unwrap_or_else(SummaryOptions::new);
                sc
            })
            .collect())
    }

    fn tuned(&self, m: MethodSpec) -> MethodSpec {
        let (MethodSpec::Mi { mut method }, Some(t)) = (m, &self.tuning) else {
            return m;
        };
        if let Some(v) = t.donors {
            method.donors = v;
        }
        if let Some(v) = t.cart_minbucket {
            method.tree_params.minbucket = v;
        }
        if let Some(v) = t.cart_cp {
            method.tree_params.cp = v;
        }
        if let Some(v) = t.leaf_draw {
            method.leaf_draw = v;
        }
        if let Some(v) = t.rf_ntree {
            method.forest_params.ntree = v;
        }
        if t.rf_mtry.is_some() {
            method.forest_params.mtry = t.rf_mtry;
        }
        if let Some(v) = t.rf_minbucket {
            method.forest_params.tree_params.minbucket = v;
        }
        MethodSpec::Mi { method }
    }

    fn study1_designs(&self) -> Result<Vec<Design>, String> {
        let ns = self.n.as_ref().ok_or("missing required key `n`")?.to_vec();
        let rels = self.relationship.as_ref().map_or(vec![Relationship::Linear], OneOrMany::to_vec);
        let ints = self.interaction.as_ref().map_or(vec![Interaction::None], OneOrMany::to_vec);
        let betas = match (&self.effect, &self.beta1) {
            (Some(_), Some(_)) => return Err("give either `effect` or `beta1`, not both".into()),
            (Some(e), None) => e
                .to_vec()
                .iter()
                .map(|e| if *e == Effect::Null { 0.0 } else { 40.0 })
                .collect(),
            (None, Some(b)) => b.to_vec(),
            (None, None) => return Err("missing required key `effect` (or `beta1`)".into()),
        };
        let kinds = self.mechanism.as_ref().ok_or("missing required key `mechanism`")?.to_vec();
        let pcts = self.miss_pct.as_ref().map_or(vec![30], OneOrMany::to_vec);
        let mut out = Vec::new();
        for &n in &ns {
            for &rel in &rels {
                for &int in &ints {
                    if int != Interaction::None && rel != Relationship::Linear {
                        return Err(format!(
                            "interaction `{}` requires relationship `linear`, got `{}`; use a separate block",
                            int.as_str(),
                            rel.as_str()
                        ));
                    }
                    for &b in &betas {
                        for &k in &kinds {
                            for &p in &pcts {
                                let mechanism = MissMechanism::table2(k, p as f64 / 100.0)
                                    .map_err(|e| format!("miss_pct: {}", e.0))?;
                                let mut config = Study1Config::new(n, rel, int, b);
                                if let Some(sd) = self.resid_sd {
                                    config.resid_sd = sd;
                                }
                                out.push(Design::Study1 { config, mechanism });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn study2_designs(&self) -> Result<Vec<Design>, String> {
        let s = "study2";
        forbid(&self.relationship, "relationship", s)?;
        forbid(&self.interaction, "interaction", s)?;
        forbid(&self.effect, "effect", s)?;
        forbid(&self.beta1, "beta1", s)?;
        forbid(&self.resid_sd, "resid_sd", s)?;
        forbid(&self.miss_pct, "miss_pct", s)?;
        let ns = self.n.as_ref().map_or(vec![145], OneOrMany::to_vec);
        let kinds = self.mechanism.as_ref().map_or(MissKind::ALL.to_vec(), OneOrMany::to_vec);
        Ok(ns
            .iter()
            .flat_map(|&n| kinds.iter().map(move |&k| Design::Study2 { n, mechanism: k }))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_expand_to_cartesian_product() {
        let cfg = parse_config(
            r#"
            [run]
            seed = 1
            reps = 10
            [[scenario]]
            study = "study1"
            n = [100, 200]
            relationship = ["linear", "harmonic"]
            effect = "null"
            mechanism = ["mcar", "mar_z"]
            miss_pct = [10, 30]
            "#,
        )
        .unwrap();
        let scs = cfg.scenarios(&Overrides::default()).unwrap();
        assert_eq!(scs.len(), 16);
        assert!(scs.iter().all(|s| s.n_reps == 10));
        assert_eq!(scs[0].id, "s1_linear_mcar10_n100_null");
    }

    #[test]
    fn missing_study_names_the_key() {
        let cfg = parse_config("[[scenario]]\nn = 200\n").unwrap();
        let err = cfg.scenarios(&Overrides::default()).unwrap_err();
        assert!(err.0.contains("`study`"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse_config("[[scenario]]\nstudy = \"study2\"\nreplicates = 3\n").unwrap_err();
        assert!(err.0.contains("replicates"), "{err}");
        let err = parse_config("[run]\nthreads = 3\n").unwrap_err();
        assert!(err.0.contains("threads"), "{err}");
    }

    #[test]
    fn invalid_combinations_rejected() {
        let bad = [
            "study = \"study1\"\nn = 200\nrelationship = \"quadratic\"\ninteraction = \"large\"\neffect = \"alt\"\nmechanism = \"mcar\"",
            "study = \"study1\"\nn = 200\neffect = \"alt\"\nmechanism = \"mcar\"\nmiss_pct = 20",
            "study = \"study1\"\nn = 200\neffect = \"alt\"\nmechanism = \"mcar\"\nmethods = [\"mmrm_default\"]",
            "study = \"study2\"\nrelationship = \"linear\"",
            "study = \"study1\"\nn = 200\neffect = \"alt\"\nmechanism = \"mcar\"\nmethods = [\"cc\", \"cc\"]",
        ];
        for b in bad {
            let cfg = parse_config(&format!("[[scenario]]\n{b}\n")).unwrap();
            assert!(cfg.scenarios(&Overrides::default()).is_err(), "{b}");
        }
    }

    #[test]
    fn overrides_and_tuning() {
        let cfg = parse_config(
            r#"
            [run]
            reps = 10
            [[scenario]]
            study = "study2"
            mechanism = "mar_z"
            methods = ["mi_rf", "mi_cart", "mmrm_default"]
            analyses = ["mmrm"]
            tuning = { rf_ntree = 5, cart_minbucket = 7 }
            mmrm = { baseline_by_week = true }
            "#,
        )
        .unwrap();
        let o = Overrides { seed: Some(9), reps: Some(3) };
        let scs = cfg.scenarios(&o).unwrap();
        assert_eq!(scs.len(), 1);
        let sc = &scs[0];
        assert_eq!((sc.id.as_str(), sc.n_reps), ("s2_marz_n145", 3));
        assert_eq!(sc.master_seed, scenario_seed(9, "s2_marz_n145"));
        assert!(sc.mmrm_design.baseline_by_week);
        let MethodSpec::Mi { method } = sc.methods[0] else { panic!() };
        assert_eq!(method.forest_params.ntree, 5);
        let MethodSpec::Mi { method } = sc.methods[1] else { panic!() };
        assert_eq!(method.tree_params.minbucket, 7);
    }
}
