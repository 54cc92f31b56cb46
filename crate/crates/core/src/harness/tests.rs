use super::*;
use crate::analyze::EstimandId;
use crate::datagen::{Interaction, MissKind, MissMechanism, Relationship, Study1Config};
use crate::impute::MiKind;

fn s1(rel: Relationship, kind: MissKind, n: usize, reps: usize) -> Scenario {
    Scenario::new(
        Design::Study1 {
            config: Study1Config::new(n, rel, Interaction::None, 40.0),
            mechanism: MissMechanism::table2(kind, 0.3).unwrap(),
        },
        reps,
        77,
    )
}

#[test]
fn zero_missingness_makes_every_method_equal_cc() {
    let mut sc = s1(Relationship::Quadratic, MissKind::Mcar, 80, 2);
    if let Design::Study1 { mechanism, .. } = &mut sc.design {
        mechanism.alpha0 = f64::NEG_INFINITY;
    }
    sc.m = 3;
    sc.methods.push(MethodSpec::mi(MiKind::RfCaliber));
    for rep in 0..2 {
        let recs = run_replicate(&sc, rep);
        assert_eq!(recs.len(), sc.methods.len());
        let cc = recs[0].estimate.unwrap();
        for r in &recs {
            assert!(!r.failed, "{r:?}");
            assert!((r.estimate.unwrap() - cc).abs() < 1e-9, "{} {}", r.method_id, r.estimate.unwrap());
        }
    }
}

#[test]
fn replicates_are_deterministic_and_distinct() {
    let mut sc = s1(Relationship::Harmonic, MissKind::MarZ, 100, 2);
    sc.m = 3;
    assert_eq!(run_replicate(&sc, 1), run_replicate(&sc, 1));
    assert_ne!(run_replicate(&sc, 0)[0].estimate, run_replicate(&sc, 1)[0].estimate);
}

#[test]
fn record_count_conservation_and_scheduling_invariance() {
    let mut sc = Scenario::new(study2_designs(60)[1], 3, 5);
    sc.m = 2;
    sc.mice.maxit = 2;
    let a = run_scenario(&sc, 1);
    let b = run_scenario(&sc, 4);
    assert_eq!(a.records.len(), sc.expected_records());
    assert_eq!(a.records, b.records);
    assert_eq!(a.summaries, b.summaries);
    let n_failed = a.records.iter().filter(|r| r.failed).count();
    let row_failed: usize = a.summaries.iter().map(|s| s.summary.n_failed).sum();
    assert_eq!(n_failed, row_failed);
}

#[test]
fn zero_reps_gives_unavailable_summaries() {
    let sc = s1(Relationship::Linear, MissKind::Mcar, 50, 0);
    let res = run_scenario(&sc, 2);
    assert!(res.records.is_empty());
    assert_eq!(res.summaries.len(), sc.methods.len());
    assert!(res.summaries.iter().all(|s| !s.summary.available && s.summary.bias.is_nan()));
}

#[test]
fn failures_become_records() {
    // Too few participants per arm for any MMRM or imputation model.
    let mut sc = Scenario::new(study2_designs(10)[0], 2, 5);
    sc.m = 2;
    let res = run_scenario(&sc, 1);
    assert_eq!(res.records.len(), sc.expected_records());
    assert!(res.records.iter().any(|r| r.failed));
    for r in res.records.iter().filter(|r| r.failed) {
        assert!(r.estimate.is_none() && r.failure_reason.is_some());
    }
}

#[test]
fn summaries_reproducible_from_records_and_files() {
    let mut sc = s1(Relationship::Linear, MissKind::MarX, 60, 4);
    sc.m = 2;
    let res = run_scenario(&sc, 1);
    assert_eq!(summarize_records(&sc, &res.records), res.summaries);

    let tmp = tempfile::tempdir().unwrap();
    let dir = write_scenario(tmp.path(), &res, &[Format::Csv, Format::Json], true).unwrap();
    let files = output_files(&[Format::Csv, Format::Json], true);
    assert!(is_complete(&dir, &sc, &files));
    let mut other = sc.clone();
    other.n_reps = 5;
    assert!(!is_complete(&dir, &other, &files));

    let rows = read_summary_csv(&dir.join("summary.csv")).unwrap();
    assert_eq!(rows.len(), res.summaries.len());
    let cc = res.summary("cc", EstimandId::Ate).unwrap();
    assert_eq!(rows[0].num("bias").unwrap(), cc.bias);
    assert_eq!(rows[0].num("mcse_bias").unwrap(), cc.mcse_bias);

    let mut rdr = csv::Reader::from_path(dir.join("records.csv")).unwrap();
    let back: Vec<crate::metrics::ReplicateRecord> = rdr.deserialize().map(Result::unwrap).collect();
    assert_eq!(back, res.records);
    assert_eq!(summarize_records(&sc, &back), res.summaries);

    let before = std::fs::read(dir.join("summary.csv")).unwrap();
    write_scenario(tmp.path(), &run_scenario(&sc, 3), &[Format::Csv], false).unwrap();
    assert_eq!(std::fs::read(dir.join("summary.csv")).unwrap(), before);
}
