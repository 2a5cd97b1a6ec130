//! Theorem and lemma verdicts for a scenario, assembled into one report.

pub mod identities;
pub mod theorems;
pub mod verdict;

use std::f64::consts::TAU;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::critical::{find_critical_points, CriticalPoint, CriticalSearch, Tolerances};
use crate::domain::{Point, ScenarioSpec};
use crate::solver::{solve_scenario, SolutionField, SolverError};
use crate::topology::{
    boundary_profile, check_component_contact, check_maximum_principle, level_census, local_structure,
    BoundaryProfile, LevelSetCensus, OrderingCase,
};

pub use identities::{check_counting_identities, critical_values, epsilon, IdentityReport};
pub use theorems::{
    check_corollary_4_1, check_remark_5_1, check_theorem_1_1, check_theorem_1_2, check_theorem_1_3,
    check_theorem_1_4, ProblemFacts,
};
pub use verdict::{Clause, Hypothesis, Relation, Verdict};

/// Every check in report order.
pub const VERDICT_IDS: [&str; 13] = [
    "thm_1_1", "thm_1_2", "cor_4_1", "thm_1_3", "thm_1_4", "rem_5_1", "rem_1_5", "lemma_2_1", "lemma_2_2",
    "lemma_2_3", "lemma_2_4", "lemma_2_5", "lemma_2_7",
];

/// Significant digits kept for floats in emitted reports.
pub const REPORT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub description: String,
    pub fingerprint: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub configured: String,
    pub refined: String,
    pub residual: f64,
    pub interpolation_error: f64,
    pub base_multiplicities: Vec<u32>,
    pub refined_multiplicities: Vec<u32>,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub scenario: ScenarioInfo,
    pub grid: GridReport,
    pub boundary_profile: BoundaryProfile,
    pub critical_points: Vec<CriticalPoint>,
    pub censuses: Vec<LevelSetCensus>,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn verdict(&self, id: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.id == id)
    }

    /// True when no applicable check failed.
    pub fn all_hold(&self) -> bool {
        !self.verdicts.iter().any(Verdict::fails)
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("critical point counts change under refinement: base {base:?}, refined {refined:?}")]
    UnstableCounts {
        base: Vec<u32>,
        refined: Vec<u32>,
        report: Box<VerificationReport>,
    },
}

fn sorted_multiplicities(search: &CriticalSearch) -> Vec<u32> {
    let mut m: Vec<u32> = search.points.iter().map(|p| p.multiplicity).collect();
    m.sort_unstable();
    m
}

/// Largest value jump between neighbouring census cells.
fn census_jump(field: &SolutionField) -> f64 {
    let lat = field.lattice(2, true);
    let mut jump = 0.0f64;
    for r in 0..lat.rows {
        for c in 0..lat.cols {
            let v = lat.at(c, r);
            jump = jump.max((lat.at(c + 1, r) - v).abs());
            if r + 1 < lat.rows {
                jump = jump.max((lat.at(c, r + 1) - v).abs());
            }
        }
    }
    jump
}

/// Thresholds at which censuses are reported: each critical value `± ε`
/// and the midpoints of the boundary-value intervals.
fn census_thresholds(groups: &[(f64, Vec<usize>)], profile: &BoundaryProfile, eps: f64) -> Vec<f64> {
    let mut ts: Vec<f64> = groups.iter().flat_map(|(v, _)| [v - eps, v + eps]).collect();
    if let Some([z1, big_z1, z2, big_z2]) = profile.extreme_values() {
        let mid = |a: f64, b: f64| 0.5 * (a + b);
        match profile.ordering() {
            OrderingCase::Separated => ts.extend([mid(z1, big_z1), mid(z2, big_z2)]),
            OrderingCase::Interleaved => ts.extend([mid(z1, z2), mid(z2, big_z1), mid(big_z1, big_z2)]),
            OrderingCase::Other => {}
        }
    } else {
        ts.push(0.5 * (profile.exterior.min + profile.exterior.max));
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 0.5 * eps);
    ts
}

fn check_remark_1_5(
    field: &SolutionField,
    profile: &BoundaryProfile,
    censuses: &[LevelSetCensus],
    facts: &ProblemFacts,
    tol: &Tolerances,
) -> Verdict {
    let jump = census_jump(field);
    let mut clauses: Vec<Clause> = censuses
        .iter()
        .map(|c| {
            let offenders = check_maximum_principle(c, jump);
            Clause::compare(
                "components without boundary-attained extremum",
                Some(c.t),
                offenders.len() as i64,
                Relation::Eq,
                0,
            )
        })
        .collect();
    let (lo, hi) = profile
        .traces()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t.min), hi.max(t.max)));
    let outside = usize::from(field.min() < lo - tol.value_zero_tol) + usize::from(field.max() > hi + tol.value_zero_tol);
    clauses.push(Clause::compare(
        "global extrema of u off the boundary",
        None,
        outside as i64,
        Relation::Eq,
        0,
    ));
    Verdict::new("rem_1_5")
        .require("b = 0 and c = 0", facts.principal_only)
        .witness(json!({
            "cell_jump": jump,
            "field_min": field.min(),
            "field_max": field.max(),
            "boundary_min": lo,
            "boundary_max": hi,
        }))
        .conclude(clauses)
}

fn check_lemma_2_1(field: &SolutionField, points: &[CriticalPoint], warnings: &mut Vec<String>) -> Verdict {
    if points.is_empty() {
        return Verdict::new("lemma_2_1").conclude(vec![Clause::not_applicable(
            "m + 1 sectors",
            None,
            "no interior critical points",
        )]);
    }
    let locations: Vec<Point> = points.iter().map(|p| p.location).collect();
    let mut clauses = Vec::new();
    let mut witness = Vec::new();
    for p in points {
        let t = Some(p.value);
        let want = i64::from(p.multiplicity) + 1;
        match local_structure(field, p, &locations) {
            Ok(ls) => {
                clauses.push(Clause::compare("super sectors = m + 1", t, ls.supers as i64, Relation::Eq, want));
                clauses.push(Clause::compare("sub sectors = m + 1", t, ls.subs as i64, Relation::Eq, want));
                witness.push(json!({"location": p.location, "m": p.multiplicity, "supers": ls.supers, "subs": ls.subs}));
            }
            Err(e) => {
                warnings.push(format!("local structure: {e}"));
                clauses.push(Clause::not_applicable("m + 1 sectors", t, e.to_string()));
            }
        }
    }
    Verdict::new("lemma_2_1").witness(Value::Array(witness)).conclude(clauses)
}

fn check_lemma_2_2(censuses: &[LevelSetCensus], profile: &BoundaryProfile) -> Verdict {
    let case = profile.ordering();
    let mut clauses = Vec::new();
    for census in censuses {
        let rep = check_component_contact(census, profile, case);
        if !rep.applicable {
            clauses.push(Clause::not_applicable(
                "component contact",
                Some(census.t),
                rep.reason.unwrap_or_default(),
            ));
            continue;
        }
        for c in &rep.clauses {
            let side = c.must_touch.map_or("either boundary".to_string(), |s| format!("{s} boundary"));
            clauses.push(Clause::compare(
                format!("{} {:?} components missing {side}", c.clause, c.sign),
                Some(census.t),
                c.failing.len() as i64,
                Relation::Eq,
                0,
            ));
        }
    }
    if clauses.is_empty() {
        clauses.push(Clause::not_applicable("component contact", None, "no census taken"));
    }
    Verdict::new("lemma_2_2")
        .require("annular domain", profile.interior.is_some())
        .witness(json!({"ordering": case.describe()}))
        .conclude(clauses)
}

fn check_lemma_2_3(base: &[u32], refined: &[u32], facts: &ProblemFacts) -> Verdict {
    let sum = |m: &[u32]| m.iter().map(|&x| i64::from(x)).sum::<i64>();
    Verdict::new("lemma_2_3")
        .require("annular domain", facts.annulus)
        .witness(json!({"base": base, "refined": refined}))
        .conclude(vec![
            Clause::compare("refined count = base count", None, refined.len() as i64, Relation::Eq, base.len() as i64),
            Clause::compare("refined sum m = base sum m", None, sum(refined), Relation::Eq, sum(base)),
        ])
}

fn check_lemma_2_4(groups: &[(f64, Vec<usize>)], profile: &BoundaryProfile) -> Verdict {
    let v = Verdict::new("lemma_2_4").require("annular domain", profile.interior.is_some());
    let Some([_, big_z1, z2, _]) = profile.extreme_values() else {
        return v.conclude(vec![]);
    };
    if profile.ordering() != OrderingCase::Separated {
        return v.conclude(vec![Clause::not_applicable(
            "critical values in [Z1, z2]",
            None,
            ordering_reason(profile, OrderingCase::Separated),
        )]);
    }
    let delta = profile.value_tol;
    let inside: Vec<f64> = groups
        .iter()
        .map(|(t, _)| *t)
        .filter(|t| *t >= big_z1 + delta && *t <= z2 - delta)
        .collect();
    v.witness(json!({"band": [big_z1 + delta, z2 - delta], "values": inside}))
        .conclude(vec![Clause::compare(
            "critical values in [Z1 + delta, z2 - delta]",
            None,
            inside.len() as i64,
            Relation::Eq,
            0,
        )])
}

fn ordering_reason(profile: &BoundaryProfile, wanted: OrderingCase) -> String {
    match (profile.extreme_values(), wanted) {
        (None, _) => "domain is simply connected".to_string(),
        (Some([_, big_z1, z2, _]), OrderingCase::Separated) if big_z1 > z2 + profile.value_tol => {
            "ordering case fails: Z₁ > z₂".to_string()
        }
        _ => format!("ordering case fails: boundary values do not satisfy {}", wanted.describe()),
    }
}

fn identity_verdict(
    id: &'static str,
    wanted: OrderingCase,
    reports: &[IdentityReport],
    profile: &BoundaryProfile,
    facts: &ProblemFacts,
) -> Verdict {
    let v = Verdict::new(id).require("annular domain", facts.annulus);
    if profile.ordering() != wanted {
        return v.conclude(vec![Clause::not_applicable(
            "counting identity",
            None,
            ordering_reason(profile, wanted),
        )]);
    }
    if reports.is_empty() {
        return v.conclude(vec![Clause::not_applicable("counting identity", None, "no interior critical points")]);
    }
    let mut clauses = Vec::new();
    for r in reports {
        if r.applicable {
            for c in &r.clauses {
                let mut c = c.clone();
                c.name = format!("{}: {}", r.case.unwrap_or_default(), c.name);
                clauses.push(c);
            }
        } else {
            clauses.push(Clause::not_applicable(
                "counting identity",
                Some(r.t),
                r.reason.clone().unwrap_or_default(),
            ));
        }
    }
    v.witness(serde_json::to_value(reports).unwrap_or(Value::Null)).conclude(clauses)
}

fn is_log_r(spec: &ScenarioSpec) -> bool {
    let probes = [Point::new(1.3, 0.4), Point::new(-0.7, 2.1), Point::new(0.2, -3.3)];
    probes
        .iter()
        .all(|p| spec.reference_at(*p).is_some_and(|v| (v - p.norm().ln()).abs() <= 1e-12))
}

/// Solves on the configured grid and its refinement and evaluates every
/// check on the refined field.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<VerificationReport, VerifyError> {
    let base_field = solve_scenario(spec)?;
    let fine_spec = spec.with_grid(spec.grid.refined());
    let field = solve_scenario(&fine_spec)?;
    let base = find_critical_points(&base_field, &spec.tolerances);
    let fine = find_critical_points(&field, &spec.tolerances);
    let (base_m, fine_m) = (sorted_multiplicities(&base), sorted_multiplicities(&fine));
    let stable = base_m == fine_m;

    let mut warnings = Vec::new();
    for (label, s) in [("base grid", &base), ("refined grid", &fine)] {
        warnings.extend(s.warnings.iter().map(|w| format!("{label}: {w}")));
        warnings.extend(s.failures.iter().map(|e| format!("{label}: {e}")));
        warnings.extend(s.near_boundary.iter().map(|n| {
            format!(
                "{label}: near-boundary suspect at ({}, {}) with value {}",
                n.location.x, n.location.y, n.value
            )
        }));
    }
    if !stable {
        warnings.push(format!("critical point multiplicities differ: base {base_m:?}, refined {fine_m:?}"));
    }

    let tol = Tolerances::resolve(&field, &spec.tolerances);
    let profile = boundary_profile(&fine_spec, &field);
    let points = fine.points.clone();
    let groups = critical_values(&points, tol.value_tol());
    let eps = epsilon(&field);
    let censuses: Vec<LevelSetCensus> = census_thresholds(&groups, &profile, eps)
        .into_iter()
        .map(|t| level_census(&field, t))
        .collect();
    for c in &censuses {
        warnings.extend(c.warnings.iter().cloned());
    }

    let facts = ProblemFacts::of(spec, &field);
    let mut identity_reports = Vec::new();
    for (t, _) in &groups {
        match check_counting_identities(&field, &points, &profile, *t) {
            Ok(r) => identity_reports.push(r),
            Err(e) => {
                warnings.push(format!("counting identity at t={t}: {e}"));
                identity_reports.push(IdentityReport::not_applicable(*t, &profile, e.to_string()));
            }
        }
    }
    let (sep, inter): (Vec<IdentityReport>, Vec<IdentityReport>) =
        identity_reports.into_iter().partition(|r| r.lemma == "lemma_2_5");

    let mut verdicts = vec![
        check_theorem_1_1(&points, &profile, &facts),
        check_theorem_1_2(&points, &profile, &facts),
        check_corollary_4_1(&points, &profile, &facts),
        check_theorem_1_3(&points, &profile, &facts),
        check_theorem_1_4(&points, &profile, &facts),
        check_remark_5_1(&points, &profile, &facts),
        check_remark_1_5(&field, &profile, &censuses, &facts, &tol),
        check_lemma_2_1(&field, &points, &mut warnings),
        check_lemma_2_2(&censuses, &profile),
        check_lemma_2_3(&base_m, &fine_m, &facts),
        check_lemma_2_4(&groups, &profile),
    ];
    verdicts.push(identity_verdict("lemma_2_5", OrderingCase::Separated, &sep, &profile, &facts));
    verdicts.push(identity_verdict("lemma_2_7", OrderingCase::Interleaved, &inter, &profile, &facts));
    debug_assert!(verdicts.iter().map(|v| v.id.as_str()).eq(VERDICT_IDS));

    let mut notes = vec![
        format!("near-critical censuses are taken at t ± {eps:.6e}"),
        "a closed level curve through critical points separates the boundaries when the critical cluster winds around the hole".to_string(),
    ];
    if is_log_r(spec) && facts.annulus {
        let min_radius = (0..4096)
            .map(|k| spec.domain.exterior.radius(TAU * k as f64 / 4096.0))
            .fold(f64::INFINITY, f64::min);
        notes.push(format!(
            "u = log r: the exterior minimum is z2 = log(min r) = {:.12}; on r = R2 + sin(N theta) this is log(R2 - 1), and the value log sqrt(R2 - 1) quoted for this example is a misprint",
            min_radius.ln()
        ));
    }

    let report = VerificationReport {
        scenario: ScenarioInfo {
            name: spec.name.clone(),
            description: spec.description.clone(),
            fingerprint: spec.fingerprint.clone(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        },
        grid: GridReport {
            configured: spec.grid.to_string(),
            refined: fine_spec.grid.to_string(),
            residual: field.residual(),
            interpolation_error: field.interpolation_error(),
            base_multiplicities: base_m.clone(),
            refined_multiplicities: fine_m.clone(),
            stable,
        },
        boundary_profile: profile,
        critical_points: points,
        censuses,
        verdicts,
        warnings,
        notes,
    };
    if stable {
        Ok(report)
    } else {
        Err(VerifyError::UnstableCounts {
            base: base_m,
            refined: fine_m,
            report: Box::new(report),
        })
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                let r: f64 = format!("{:.*e}", REPORT_DIGITS - 1, x).parse().unwrap_or(x);
                if let Some(m) = serde_json::Number::from_f64(r) {
                    *n = m;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Serialises any report value with floats rounded to 12 significant digits.
pub fn to_report_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    serde_json::to_string_pretty(&v)
}

pub fn report_to_json(report: &VerificationReport) -> serde_json::Result<String> {
    to_report_json(report)
}
