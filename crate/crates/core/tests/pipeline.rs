use std::path::{Path, PathBuf};

use serde_json::Value;

use levelset_core::critical::find_critical_points;
use levelset_core::domain::scenario::load_scenario;
use levelset_core::solver::solve_scenario;
use levelset_core::topology::{boundary_profile, OrderingCase};
use levelset_core::verify::{check_counting_identities, report_to_json, run_scenario, VerificationReport, VERDICT_IDS};
use levelset_core::ScenarioSpec;

fn scenario(name: &str) -> ScenarioSpec {
    let path: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"));
    load_scenario(&path).unwrap()
}

fn run(name: &str) -> VerificationReport {
    run_scenario(&scenario(name)).unwrap()
}

fn clause_lhs(r: &VerificationReport, id: &str) -> Vec<(String, i64, i64)> {
    r.verdict(id)
        .unwrap()
        .clauses
        .iter()
        .filter(|c| c.applicable)
        .map(|c| (c.name.clone(), c.lhs.unwrap(), c.rhs.unwrap()))
        .collect()
}

#[test]
fn every_check_appears_once_in_order() {
    for name in ["counterexample1", "disk_z2"] {
        let r = run(name);
        let ids: Vec<&str> = r.verdicts.iter().map(|v| v.id.as_str()).collect();
        assert_eq!(ids, VERDICT_IDS);
        for v in &r.verdicts {
            assert_eq!(v.holds.is_some(), v.applicable, "{}", v.id);
            if !v.applicable {
                assert!(v.reason.as_deref().is_some_and(|s| !s.is_empty()), "{}", v.id);
            }
        }
    }
}

#[test]
fn trichotomy_annulus_meets_the_upper_bound() {
    let r = run("trichotomy_annulus");
    assert_eq!(r.critical_points.len(), 8);
    let sum: u32 = r.critical_points.iter().map(|p| p.multiplicity).sum();
    let p = &r.boundary_profile;
    assert_eq!(p.ordering(), OrderingCase::Separated);
    let n = p.interior.as_ref().unwrap().maxima.len() + p.exterior.maxima.len();
    for id in ["thm_1_1", "thm_1_2"] {
        let v = r.verdict(id).unwrap();
        assert_eq!((v.holds, v.lhs, v.rhs), (Some(true), Some(i64::from(sum)), Some(n as i64)), "{id}");
    }
    // one saddle level per band, each carrying a closed separating curve
    let cases = clause_lhs(&r, "lemma_2_5");
    assert_eq!(cases.len(), 2);
    assert!(cases[0].0.starts_with("case 3") && cases[1].0.starts_with("case 1"));
    assert!(cases.iter().all(|(_, l, rhs)| l == rhs && *l == 4));
    assert_eq!(r.verdict("lemma_2_4").unwrap().holds, Some(true));
}

#[test]
fn counterexample2_keeps_the_trichotomy_unasserted() {
    let r = run("counterexample2");
    assert!(r.critical_points.is_empty());
    assert_eq!(r.boundary_profile.ordering(), OrderingCase::Interleaved);
    let cor = r.verdict("cor_4_1").unwrap();
    assert!(!cor.applicable);
    assert!(cor.reason.as_deref().unwrap().contains("relative to the closure"));
    assert_eq!(r.verdict("thm_1_1").unwrap().holds, Some(true));
}

#[test]
fn report_is_deterministic_apart_from_the_timestamp() {
    let strip = |r: &VerificationReport| {
        let mut v: Value = serde_json::from_str(&report_to_json(r).unwrap()).unwrap();
        v["scenario"].as_object_mut().unwrap().remove("timestamp");
        v
    };
    let a = run("pocket_annulus");
    let b = run("pocket_annulus");
    assert_eq!(strip(&a), strip(&b));
    let v = strip(&a);
    assert_eq!(v["verdicts"][11]["clauses"][2]["lhs"], 4);
}

#[test]
fn identity_check_reasons() {
    let spec = scenario("z_plus_inv");
    let f = solve_scenario(&spec).unwrap();
    let found = find_critical_points(&f, &spec.tolerances);
    let profile = boundary_profile(&spec, &f);
    let rep = check_counting_identities(&f, &found.points, &profile, found.points[0].value).unwrap();
    assert_eq!(rep.reason.as_deref(), Some("ordering case fails: Z₁ > z₂"));
    let rep = check_counting_identities(&f, &found.points, &profile, 0.123).unwrap();
    assert_eq!(rep.reason.as_deref(), Some("no critical point at t"));
}
