//! Bounds on the total multiplicity of interior critical points.

use serde_json::json;

use crate::critical::CriticalPoint;
use crate::domain::{ScalarExpr, ScenarioSpec};
use crate::solver::SolutionField;
use crate::topology::{BoundaryProfile, OrderingCase, Side, TraceProfile};

use super::verdict::{Clause, Relation, Verdict};

/// Properties of the problem that theorem hypotheses refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemFacts {
    pub annulus: bool,
    pub zeroth_order: bool,
    pub principal_only: bool,
    pub constant_solution: bool,
}

impl ProblemFacts {
    pub fn of(spec: &ScenarioSpec, field: &SolutionField) -> ProblemFacts {
        let zero = |e: &ScalarExpr| e.is_constant() && e.eval_xy(0.0, 0.0) == Ok(0.0);
        ProblemFacts {
            annulus: !spec.domain.is_disk(),
            zeroth_order: spec.operator.c.as_ref().is_some_and(|c| !zero(c)),
            principal_only: spec.operator.is_principal_only(),
            constant_solution: field.range() <= 1e-12 * field.max().abs().max(1.0),
        }
    }
}

fn total(points: &[CriticalPoint]) -> i64 {
    points.iter().map(|p| i64::from(p.multiplicity)).sum()
}

fn zero_total(points: &[CriticalPoint]) -> i64 {
    points
        .iter()
        .filter(|p| p.is_zero)
        .map(|p| i64::from(p.multiplicity))
        .sum()
}

fn multiplicities(points: &[CriticalPoint]) -> Vec<u32> {
    points.iter().map(|p| p.multiplicity).collect()
}

fn defined(t: Option<&TraceProfile>) -> bool {
    t.is_some_and(|t| !t.degenerate)
}

fn maxima(t: Option<&TraceProfile>) -> i64 {
    t.map_or(0, |t| t.maxima.len() as i64)
}

fn equal_extrema(t: Option<&TraceProfile>) -> bool {
    t.is_some_and(|t| t.equal_maxima && t.equal_minima)
}

fn closure_relative(t: Option<&TraceProfile>) -> bool {
    t.is_some_and(TraceProfile::all_closure_relative)
}

/// `Σmᵢ ≤ N₁ + N₂` over all interior critical points.
pub fn check_theorem_1_1(points: &[CriticalPoint], profile: &BoundaryProfile, facts: &ProblemFacts) -> Verdict {
    let (inner, outer) = (profile.trace(Side::Interior), profile.trace(Side::Exterior));
    let lhs = total(points);
    let rhs = maxima(inner) + maxima(outer);
    Verdict::new("thm_1_1")
        .require("domain is multiply connected", facts.annulus)
        .require("operator has no zeroth-order term", !facts.zeroth_order)
        .require("solution is non-constant", !facts.constant_solution)
        .require("interior trace is non-constant (N1 defined)", defined(inner))
        .require("exterior trace is non-constant (N2 defined)", defined(outer))
        .witness(json!({
            "multiplicities": multiplicities(points),
            "N1": maxima(inner),
            "N2": maxima(outer),
        }))
        .conclude(vec![Clause::compare("sum m <= N1 + N2", None, lhs, Relation::Le, rhs)])
}

fn trichotomy(id: &str, case_name: &str, case_held: bool, points: &[CriticalPoint], profile: &BoundaryProfile, facts: &ProblemFacts) -> Verdict {
    let (inner, outer) = (profile.trace(Side::Interior), profile.trace(Side::Exterior));
    let lhs = total(points);
    let rhs = maxima(inner) + maxima(outer);
    Verdict::new(id)
        .require("domain is multiply connected", facts.annulus)
        .require("operator has no zeroth-order term", !facts.zeroth_order)
        .require("solution is non-constant", !facts.constant_solution)
        .require("interior trace is non-constant (N1 defined)", defined(inner))
        .require("exterior trace is non-constant (N2 defined)", defined(outer))
        .require(case_name, case_held)
        .require("equal maxima and equal minima on the interior curve", equal_extrema(inner))
        .require("equal maxima and equal minima on the exterior curve", equal_extrema(outer))
        .require(
            "every boundary extremum is an extremum relative to the closure",
            closure_relative(inner) && closure_relative(outer),
        )
        .witness(json!({
            "multiplicities": multiplicities(points),
            "N1": maxima(inner),
            "N2": maxima(outer),
        }))
        .conclude(vec![Clause::compare(
            "sum m in {N1+N2-2, N1+N2-1, N1+N2}",
            None,
            lhs,
            Relation::Trichotomy,
            rhs,
        )])
}

/// Trichotomy `Σmᵢ ∈ {N₁+N₂−2, N₁+N₂−1, N₁+N₂}` when the boundary ranges
/// are separated (`z₂ ≥ Z₁`, or the mirrored `Z₂ ≤ z₁`).
pub fn check_theorem_1_2(points: &[CriticalPoint], profile: &BoundaryProfile, facts: &ProblemFacts) -> Verdict {
    let tol = profile.value_tol;
    let separated = profile
        .extreme_values()
        .is_some_and(|[z1, big_z1, z2, big_z2]| z2 >= big_z1 - tol || big_z2 <= z1 + tol);
    trichotomy("thm_1_2", "min of exterior data >= max of interior data", separated, points, profile, facts)
}

/// The same trichotomy under interleaved ranges `z₁ < z₂ < Z₁ < Z₂`.
pub fn check_corollary_4_1(points: &[CriticalPoint], profile: &BoundaryProfile, facts: &ProblemFacts) -> Verdict {
    let interleaved = profile.ordering() == OrderingCase::Interleaved;
    trichotomy("cor_4_1", "z1 < z2 < Z1 < Z2", interleaved, points, profile, facts)
}

/// Critical zero points with constant interior data `H`:
/// `Σmᵢ ≤ Ñ/2` if `H ≠ 0`, `Σmᵢ ≤ Ñ/2 − 1` if `H = 0`.
pub fn check_theorem_1_3(points: &[CriticalPoint], profile: &BoundaryProfile, facts: &ProblemFacts) -> Verdict {
    let inner = profile.trace(Side::Interior);
    let outer = &profile.exterior;
    let h = inner.filter(|t| t.degenerate).map(|t| 0.5 * (t.min + t.max));
    let h_zero = h.is_some_and(|h| h.abs() <= profile.value_tol);
    let n = outer.sign_changes as i64;
    let rhs = if h_zero { n / 2 - 1 } else { n / 2 };
    Verdict::new("thm_1_3")
        .require("domain is multiply connected", facts.annulus)
        .require("solution is non-constant", !facts.constant_solution)
        .require("interior data is a constant H", h.is_some())
        .require("exterior data is sign-changing", outer.sign_changing)
        .witness(json!({
            "zero_point_multiplicities": multiplicities(&zero_points(points)),
            "H": h,
            "N_tilde": n,
            "tangential_zeros": outer.tangential_zeros,
        }))
        .conclude(vec![Clause::compare(
            if h_zero { "sum m <= N~/2 - 1 (H = 0)" } else { "sum m <= N~/2 (H != 0)" },
            None,
            zero_total(points),
            Relation::Le,
            rhs,
        )])
}

/// Critical zero points with sign-changing data on both curves:
/// `Σmᵢ ≤ (Ñ₁ + Ñ₂)/2`.
pub fn check_theorem_1_4(points: &[CriticalPoint], profile: &BoundaryProfile, facts: &ProblemFacts) -> Verdict {
    let inner = profile.trace(Side::Interior);
    let outer = &profile.exterior;
    let n1 = inner.map_or(0, |t| t.sign_changes as i64);
    let n2 = outer.sign_changes as i64;
    Verdict::new("thm_1_4")
        .require("domain is multiply connected", facts.annulus)
        .require("solution is non-constant", !facts.constant_solution)
        .require("interior data is sign-changing", inner.is_some_and(|t| t.sign_changing))
        .require("exterior data is sign-changing", outer.sign_changing)
        .witness(json!({
            "zero_point_multiplicities": multiplicities(&zero_points(points)),
            "N1_tilde": n1,
            "N2_tilde": n2,
        }))
        .conclude(vec![Clause::compare(
            "sum m <= (N1~ + N2~)/2",
            None,
            zero_total(points),
            Relation::Le,
            (n1 + n2) / 2,
        )])
}

/// Critical zero points on a simply connected domain: `Σmᵢ ≤ Ñ/2 − 1`.
pub fn check_remark_5_1(points: &[CriticalPoint], profile: &BoundaryProfile, facts: &ProblemFacts) -> Verdict {
    let outer = &profile.exterior;
    let n = outer.sign_changes as i64;
    Verdict::new("rem_5_1")
        .require("domain is simply connected", !facts.annulus)
        .require("solution is non-constant", !facts.constant_solution)
        .require("boundary data is sign-changing", outer.sign_changing)
        .witness(json!({
            "zero_point_multiplicities": multiplicities(&zero_points(points)),
            "N_tilde": n,
        }))
        .conclude(vec![Clause::compare(
            "sum m <= N~/2 - 1",
            None,
            zero_total(points),
            Relation::Le,
            n / 2 - 1,
        )])
}

fn zero_points(points: &[CriticalPoint]) -> Vec<CriticalPoint> {
    points.iter().filter(|p| p.is_zero).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::find_critical_points;
    use crate::domain::Point;
    use crate::solver::solve_scenario;
    use crate::solver::test_support::scenario;
    use crate::topology::boundary_profile;

    fn fake(m: u32) -> CriticalPoint {
        CriticalPoint {
            location: Point::new(1.0, 0.0),
            value: 0.0,
            multiplicity: m,
            is_zero: true,
            degree_radius: 0.1,
            winding: -(m as f64),
            theta: 0.0,
            s: 0.5,
        }
    }

    #[test]
    fn saddle_pair_meets_the_bound() {
        let psi = "(r+1/r)*cos(theta)";
        let spec = scenario(Some("0.5"), "2", Some(psi), psi, 128, 64);
        let f = solve_scenario(&spec).unwrap();
        let found = find_critical_points(&f, &spec.tolerances);
        let profile = boundary_profile(&spec, &f);
        let facts = ProblemFacts::of(&spec, &f);
        let v = check_theorem_1_1(&found.points, &profile, &facts);
        assert_eq!((v.holds, v.lhs, v.rhs), (Some(true), Some(2), Some(2)));
        let v = check_theorem_1_4(&found.points, &profile, &facts);
        assert_eq!((v.holds, v.lhs, v.rhs), (Some(true), Some(0), Some(2)));
        let v = check_theorem_1_3(&found.points, &profile, &facts);
        assert!(!v.applicable);
        assert_eq!(v.reason.as_deref(), Some("hypothesis fails: interior data is a constant H"));
    }

    #[test]
    fn injected_points_break_the_bound() {
        let spec = scenario(
            Some("2+sin(3*theta)"),
            "6+sin(4*theta)",
            Some("log(r)"),
            "log(r)",
            64,
            32,
        );
        let f = solve_scenario(&spec).unwrap();
        let profile = boundary_profile(&spec, &f);
        let facts = ProblemFacts::of(&spec, &f);
        let v = check_theorem_1_1(&[], &profile, &facts);
        assert_eq!((v.holds, v.lhs, v.rhs), (Some(true), Some(0), Some(7)));
        let injected = vec![fake(4), fake(4)];
        let v = check_theorem_1_1(&injected, &profile, &facts);
        assert_eq!((v.holds, v.lhs, v.rhs), (Some(false), Some(8), Some(7)));
        assert!(v.fails());
        let v = check_theorem_1_2(&[], &profile, &facts);
        assert!(!v.applicable);
        assert!(v.reason.unwrap().contains("relative to the closure"));
    }

    #[test]
    fn constant_interior_data() {
        let spec = scenario(Some("1"), "2", Some("0"), "cos(2*theta)", 128, 64);
        let f = solve_scenario(&spec).unwrap();
        let found = find_critical_points(&f, &spec.tolerances);
        let profile = boundary_profile(&spec, &f);
        let facts = ProblemFacts::of(&spec, &f);
        let v = check_theorem_1_3(&found.points, &profile, &facts);
        assert_eq!((v.holds, v.lhs, v.rhs), (Some(true), Some(0), Some(1)));
        let v = check_theorem_1_2(&found.points, &profile, &facts);
        assert!(!v.applicable);
        assert!(v.reason.unwrap().contains("N1 defined"));

        let spec = scenario(Some("1"), "2", Some("1"), "2*cos(2*theta)", 128, 64);
        let f = solve_scenario(&spec).unwrap();
        let found = find_critical_points(&f, &spec.tolerances);
        let profile = boundary_profile(&spec, &f);
        let v = check_theorem_1_3(&found.points, &profile, &ProblemFacts::of(&spec, &f));
        assert_eq!((v.holds, v.rhs), (Some(true), Some(2)));
    }

    #[test]
    fn disk_zero_points() {
        let spec = scenario(None, "1", None, "cos(2*theta)", 128, 64);
        let f = solve_scenario(&spec).unwrap();
        let found = find_critical_points(&f, &spec.tolerances);
        let profile = boundary_profile(&spec, &f);
        let facts = ProblemFacts::of(&spec, &f);
        let v = check_remark_5_1(&found.points, &profile, &facts);
        assert_eq!((v.holds, v.lhs, v.rhs), (Some(true), Some(1), Some(1)));
        assert!(!check_theorem_1_1(&found.points, &profile, &facts).applicable);

        let spec = scenario(None, "1", None, "1+0.5*cos(theta)", 64, 32);
        let f = solve_scenario(&spec).unwrap();
        let profile = boundary_profile(&spec, &f);
        let v = check_remark_5_1(&[], &profile, &ProblemFacts::of(&spec, &f));
        assert_eq!(v.reason.as_deref(), Some("hypothesis fails: boundary data is sign-changing"));
    }

    #[test]
    fn one_sided_trace_is_not_applicable() {
        let spec = scenario(Some("1"), "2", Some("0.1*sin(theta)"), "5+cos(2*theta)", 64, 32);
        let f = solve_scenario(&spec).unwrap();
        let profile = boundary_profile(&spec, &f);
        let v = check_theorem_1_4(&[], &profile, &ProblemFacts::of(&spec, &f));
        assert!(!v.applicable);
        assert_eq!(v.reason.as_deref(), Some("hypothesis fails: exterior data is sign-changing"));
    }
}
