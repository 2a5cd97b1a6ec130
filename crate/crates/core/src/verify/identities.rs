//! Component counting identities at critical values.
//!
//! Counts at a critical value `t` are read off censuses just beside it:
//! `{u > t}` from the census at `t + ε` and `{u < t}` from the one at
//! `t − ε`, with `ε = 10 · equal_extrema_tol · scale`. Whether a closed
//! level curve through the critical points separates the two boundaries is
//! taken from the wrap flag of the critical cluster at `t`.

use serde::Serialize;

use crate::critical::{cluster_critical_sets, CriticalError, CriticalPoint, Tolerances};
use crate::solver::SolutionField;
use crate::topology::{band_components, level_census, BoundaryProfile, OrderingCase, Side, Sign};

use super::verdict::{Clause, Relation};

/// Half-width multiplier of the near-critical census offsets.
pub const EPSILON_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub t: f64,
    pub lemma: &'static str,
    pub case: Option<&'static str>,
    pub applicable: bool,
    pub reason: Option<String>,
    pub sum_m: u32,
    pub q: Option<usize>,
    pub clauses: Vec<Clause>,
}

impl IdentityReport {
    fn new(t: f64, lemma: &'static str) -> IdentityReport {
        IdentityReport {
            t,
            lemma,
            case: None,
            applicable: false,
            reason: None,
            sum_m: 0,
            q: None,
            clauses: Vec::new(),
        }
    }

    /// Report for a value whose check could not be carried out.
    pub fn not_applicable(t: f64, profile: &BoundaryProfile, reason: impl Into<String>) -> IdentityReport {
        IdentityReport::new(t, lemma_for(profile)).skip(reason)
    }

    fn skip(mut self, reason: impl Into<String>) -> IdentityReport {
        self.applicable = false;
        self.reason = Some(reason.into());
        self
    }

    fn with(mut self, case: &'static str, clauses: Vec<Clause>) -> IdentityReport {
        self.case = Some(case);
        self.applicable = true;
        self.clauses = clauses;
        self
    }

    pub fn holds(&self) -> bool {
        self.clauses.iter().all(|c| c.holds != Some(false))
    }
}

/// Near-critical offset used on each side of a critical value.
pub fn epsilon(field: &SolutionField) -> f64 {
    EPSILON_FACTOR * Tolerances::resolve(field, &field.spec().tolerances).value_tol()
}

/// Groups points with values within `tol`; returns `(value, members)`
/// sorted by value.
pub fn critical_values(points: &[CriticalPoint], tol: f64) -> Vec<(f64, Vec<usize>)> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].value.total_cmp(&points[b].value));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in order {
        let v = points[i].value;
        match groups.last_mut() {
            Some((first, members)) if (v - points[members[0]].value).abs() <= tol => {
                members.push(i);
                *first = members.iter().map(|&k| points[k].value).sum::<f64>() / members.len() as f64;
            }
            _ => groups.push((v, vec![i])),
        }
    }
    groups
}

struct Level {
    t: f64,
    sum_m: i64,
    q: usize,
    wraps: bool,
    /// A wrapping cluster carries at least two critical points.
    wraps_with_two: bool,
}

fn level(field: &SolutionField, points: &[CriticalPoint], members: &[usize], t: f64) -> Result<Level, CriticalError> {
    let pts: Vec<CriticalPoint> = members.iter().map(|&i| points[i].clone()).collect();
    let rep = cluster_critical_sets(field, &pts, t)?;
    Ok(Level {
        t,
        sum_m: pts.iter().map(|p| i64::from(p.multiplicity)).sum(),
        q: rep.q,
        wraps: rep.any_wrapping(),
        wraps_with_two: rep
            .members
            .iter()
            .zip(&rep.wrapping)
            .any(|(m, w)| *w && m.len() >= 2),
    })
}

fn lemma_for(profile: &BoundaryProfile) -> &'static str {
    match profile.ordering() {
        OrderingCase::Interleaved => "lemma_2_7",
        _ => "lemma_2_5",
    }
}

fn ordering_failure(profile: &BoundaryProfile) -> String {
    match profile.extreme_values() {
        None => "domain is simply connected".into(),
        Some([_, big_z1, z2, _]) if big_z1 > z2 + profile.value_tol => "ordering case fails: Z₁ > z₂".into(),
        Some(_) => "ordering case fails: neither z₁ < Z₁ ≤ z₂ < Z₂ nor z₁ < z₂ < Z₁ < Z₂".into(),
    }
}

/// Evaluates the counting identity that applies at the critical value `t`.
pub fn check_counting_identities(
    field: &SolutionField,
    points: &[CriticalPoint],
    profile: &BoundaryProfile,
    t: f64,
) -> Result<IdentityReport, CriticalError> {
    let vtol = Tolerances::resolve(field, &field.spec().tolerances).value_tol();
    let groups = critical_values(points, vtol);
    let report = IdentityReport::new(t, lemma_for(profile));
    let Some(here) = groups.iter().position(|(v, _)| (v - t).abs() <= vtol) else {
        return Ok(report.skip("no critical point at t"));
    };
    let Some(bounds) = profile.extreme_values() else {
        return Ok(report.skip(ordering_failure(profile)));
    };
    match profile.ordering() {
        OrderingCase::Separated => separated(field, points, &groups, here, bounds, report),
        OrderingCase::Interleaved => interleaved(field, points, &groups, here, bounds, report),
        OrderingCase::Other => Ok(report.skip(ordering_failure(profile))),
    }
}

fn separated(
    field: &SolutionField,
    points: &[CriticalPoint],
    groups: &[(f64, Vec<usize>)],
    here: usize,
    [z1, big_z1, z2, big_z2]: [f64; 4],
    mut report: IdentityReport,
) -> Result<IdentityReport, CriticalError> {
    let eps = epsilon(field);
    let t = groups[here].0;
    let upper = |v: f64| v > z2 && v < big_z2;
    let lower = |v: f64| v > z1 && v < big_z1;
    let band: &dyn Fn(f64) -> bool = if upper(t) {
        &upper
    } else if lower(t) {
        &lower
    } else {
        return Ok(report.skip("critical value lies outside (z₁, Z₁) ∪ (z₂, Z₂)"));
    };
    if groups.iter().filter(|(v, _)| band(*v)).count() > 1 {
        return Ok(report.skip("several distinct critical values in the same band"));
    }
    let lv = level(field, points, &groups[here].1, t)?;
    report.sum_m = lv.sum_m as u32;
    report.q = Some(lv.q);
    let (m, q) = (lv.sum_m, lv.q as i64);
    let below = level_census(field, t - eps);
    let above = level_census(field, t + eps);
    let tt = Some(t);
    if upper(t) {
        if lv.wraps {
            let lhs = below.simply_connected_touching(Sign::Sub, Side::Exterior) as i64;
            return Ok(report.with(
                "case 1",
                vec![Clause::compare(
                    "#simply connected {u<t} meeting exterior = sum m + q - 1",
                    tt,
                    lhs,
                    Relation::Eq,
                    m + q - 1,
                )],
            ));
        }
        let reaches = below
            .of_sign(Sign::Sub)
            .any(|c| !c.is_simply_connected() && c.touches_exterior);
        if !reaches {
            return Ok(report.skip(
                "no separating level curve through the critical points and no non-simply connected {u<t} meeting the exterior",
            ));
        }
        let (m1, m2) = (above.m1 as i64, below.m2 as i64);
        Ok(report.with("case 2", pair_clauses(tt, m1, m2, m, q, 1)))
    } else {
        if lv.wraps {
            let lhs = above.simply_connected_touching(Sign::Super, Side::Interior) as i64;
            return Ok(report.with(
                "case 3",
                vec![Clause::compare(
                    "#simply connected {u>t} meeting interior = sum m + q - 1",
                    tt,
                    lhs,
                    Relation::Eq,
                    m + q - 1,
                )],
            ));
        }
        let m1 = band_components(field, t + eps, z2 - eps) as i64;
        let m2 = below.m2 as i64;
        Ok(report.with("case 4", pair_clauses(tt, m1, m2, m, q, 1)))
    }
}

/// `M₁ ≥ Σm + k`, `M₂ ≥ Σm + k` and `M₁ + M₂ = 2Σm + q + 2k − 1`.
fn pair_clauses(t: Option<f64>, m1: i64, m2: i64, m: i64, q: i64, k: i64) -> Vec<Clause> {
    let rhs = if k == 1 { m + 1 } else { m };
    vec![
        Clause::compare(format!("M1 >= sum m{}", if k == 1 { " + 1" } else { "" }), t, m1, Relation::Ge, rhs),
        Clause::compare(format!("M2 >= sum m{}", if k == 1 { " + 1" } else { "" }), t, m2, Relation::Ge, rhs),
        Clause::compare(
            format!("M1 + M2 = 2 sum m + q {}", if k == 1 { "+ 1" } else { "- 1" }),
            t,
            m1 + m2,
            Relation::Eq,
            2 * m + q + 2 * k - 1,
        ),
    ]
}

fn interleaved(
    field: &SolutionField,
    points: &[CriticalPoint],
    groups: &[(f64, Vec<usize>)],
    here: usize,
    [z1, big_z1, z2, big_z2]: [f64; 4],
    mut report: IdentityReport,
) -> Result<IdentityReport, CriticalError> {
    let eps = epsilon(field);
    let t = groups[here].0;
    let tt = Some(t);
    match groups.len() {
        1 => {
            if !(t > z2 && t < big_z1) {
                return Ok(report.skip("single critical value outside (z₂, Z₁)"));
            }
            let lv = level(field, points, &groups[0].1, t)?;
            report.sum_m = lv.sum_m as u32;
            report.q = Some(lv.q);
            let m1 = level_census(field, t + eps).m1 as i64;
            let m2 = level_census(field, t - eps).m2 as i64;
            let q = lv.q as i64;
            if lv.wraps_with_two {
                Ok(report.with("situation 2, case 3", pair_clauses(tt, m1, m2, lv.sum_m, q, 0)))
            } else if !lv.wraps {
                Ok(report.with("situation 2, case 4", pair_clauses(tt, m1, m2, lv.sum_m, q, 1)))
            } else {
                Ok(report.skip("closed level curve carries a single critical point"))
            }
        }
        2 => {
            let (t0, t1) = (groups[0].0, groups[1].0);
            let pattern = (z1 < t0 && t0 <= z2 && big_z1 <= t1 && t1 < big_z2)
                || (z2 < t0 && t0 < big_z1 && big_z1 <= t1 && t1 < big_z2)
                || (z1 < t0 && t0 <= z2 && z2 < t1 && t1 < big_z1);
            if !pattern {
                return Ok(report.skip("the two critical values do not fit a two-level configuration"));
            }
            let low = level(field, points, &groups[0].1, t0)?;
            let high = level(field, points, &groups[1].1, t1)?;
            let closed = low.wraps || high.wraps;
            let lv = if here == 0 { &low } else { &high };
            report.sum_m = lv.sum_m as u32;
            report.q = Some(lv.q);
            let (m, q) = (lv.sum_m, lv.q as i64);
            let clause = match (here == 1, closed) {
                (true, true) => Clause::compare(
                    "#simply connected {u<t1} meeting exterior >= sum m + q1 - 1",
                    tt,
                    level_census(field, lv.t - eps).simply_connected_touching(Sign::Sub, Side::Exterior) as i64,
                    Relation::Ge,
                    m + q - 1,
                ),
                (false, true) => Clause::compare(
                    "#simply connected {u>t0} meeting interior >= sum m + q0 - 1",
                    tt,
                    level_census(field, lv.t + eps).simply_connected_touching(Sign::Super, Side::Interior) as i64,
                    Relation::Ge,
                    m + q - 1,
                ),
                (true, false) => Clause::compare(
                    "#simply connected {u>t1} meeting exterior >= sum m + 1",
                    tt,
                    level_census(field, lv.t + eps).simply_connected_touching(Sign::Super, Side::Exterior) as i64,
                    Relation::Ge,
                    m + 1,
                ),
                (false, false) => Clause::compare(
                    "#simply connected {u<t0} meeting interior >= sum m + 1",
                    tt,
                    level_census(field, lv.t - eps).simply_connected_touching(Sign::Sub, Side::Interior) as i64,
                    Relation::Ge,
                    m + 1,
                ),
            };
            let case = if closed { "situation 1, case 1" } else { "situation 1, case 2" };
            Ok(report.with(case, vec![clause]))
        }
        _ => Ok(report.skip("more than two distinct critical values")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::find_critical_points;
    use crate::solver::solve_scenario;
    use crate::solver::test_support::scenario;
    use crate::topology::boundary_profile;

    #[test]
    fn equal_ranges_fail_the_ordering() {
        let psi = "(r+1/r)*cos(theta)";
        let spec = scenario(Some("0.5"), "2", Some(psi), psi, 128, 64);
        let f = solve_scenario(&spec).unwrap();
        let found = find_critical_points(&f, &spec.tolerances);
        let profile = boundary_profile(&spec, &f);
        let t = found.points[1].value;
        let rep = check_counting_identities(&f, &found.points, &profile, t).unwrap();
        assert!(!rep.applicable);
        assert_eq!(rep.reason.as_deref(), Some("ordering case fails: Z₁ > z₂"));
        let rep = check_counting_identities(&f, &found.points, &profile, 0.3).unwrap();
        assert_eq!(rep.reason.as_deref(), Some("no critical point at t"));
    }

    #[test]
    fn single_pocket_saddle() {
        let spec = scenario(
            Some("0.25"),
            "2",
            Some("-1+0.1*sin(theta)"),
            "1.2+cos(theta)-1.5*((1+cos(theta))/2)^16",
            256,
            128,
        );
        let f = solve_scenario(&spec).unwrap();
        let found = find_critical_points(&f, &spec.tolerances);
        assert_eq!(found.points.len(), 1, "{:?}", found.points);
        let profile = boundary_profile(&spec, &f);
        assert_eq!(profile.ordering(), OrderingCase::Separated);
        let rep = check_counting_identities(&f, &found.points, &profile, found.points[0].value).unwrap();
        assert!(rep.applicable, "{rep:?}");
        assert_eq!(rep.case, Some("case 2"));
        assert_eq!(rep.q, Some(1));
        assert!(rep.holds(), "{rep:?}");
    }

    #[test]
    fn grouping_by_value() {
        let mk = |v: f64| CriticalPoint {
            location: crate::domain::Point::new(v, 0.0),
            value: v,
            multiplicity: 1,
            is_zero: false,
            degree_radius: 0.1,
            winding: -1.0,
            theta: 0.0,
            s: 0.5,
        };
        let pts = vec![mk(1.0), mk(0.5), mk(1.0 + 1e-9), mk(0.5 - 1e-9)];
        let g = critical_values(&pts, 1e-6);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].1.len(), 2);
        assert!((g[1].0 - 1.0).abs() < 1e-8);
    }
}
