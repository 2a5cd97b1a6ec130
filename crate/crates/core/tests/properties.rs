use proptest::prelude::*;

use levelset_core::critical::CriticalPoint;
use levelset_core::domain::scenario::{validate_scenario, GridSpec, RawScenario};
use levelset_core::solver::SolutionField;
use levelset_core::topology::{level_census, LevelSetCensus, Sign};
use levelset_core::verify::{critical_values, to_report_json, Clause, Relation, Verdict};
use levelset_core::{Point, ScenarioSpec};

fn annulus() -> ScenarioSpec {
    let raw = RawScenario::annulus("0.5", "2", "0", "1", GridSpec { n_theta: 64, n_s: 32 });
    validate_scenario(&raw).unwrap()
}

fn flags(c: &LevelSetCensus, flip: bool) -> Vec<(bool, bool, bool, bool, usize)> {
    let mut v: Vec<_> = c
        .components
        .iter()
        .map(|k| ((k.sign == Sign::Super) != flip, k.touches_interior, k.touches_exterior, k.wraps, k.holes))
        .collect();
    v.sort_unstable();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn census_is_symmetric_under_negation(
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
        c in -1.0f64..1.0,
        frac in 0.05f64..0.95,
    ) {
        let spec = annulus();
        let f = move |p: Point| a * p.norm().ln() + b * p.x + c * (p.x * p.x - p.y * p.y);
        let up = SolutionField::from_fn(&spec, f);
        let down = SolutionField::from_fn(&spec, move |p| -f(p));
        prop_assume!(up.range() > 1e-3);
        let t = up.min() + frac * up.range();
        let c1 = level_census(&up, t);
        let c2 = level_census(&down, -t);
        prop_assert_eq!((c1.m1, c1.m2), (c2.m2, c2.m1));
        prop_assert_eq!(flags(&c1, false), flags(&c2, true));
    }
}

proptest! {
    #[test]
    fn report_floats_keep_twelve_digits(x in prop::num::f64::NORMAL) {
        let text = to_report_json(&x).unwrap();
        let y: f64 = text.parse().unwrap();
        prop_assert!((y - x).abs() <= 1e-11 * x.abs(), "{} -> {}", x, y);
        prop_assert!(to_report_json(&y).unwrap() == text);
    }

    #[test]
    fn trichotomy_is_three_consecutive_values(lhs in -20i64..20, rhs in -20i64..20) {
        prop_assert_eq!(Relation::Trichotomy.test(lhs, rhs), [rhs - 2, rhs - 1, rhs].contains(&lhs));
    }

    #[test]
    fn verdict_holds_only_when_applicable(
        hyps in prop::collection::vec(any::<bool>(), 0..4),
        clauses in prop::collection::vec((any::<bool>(), -3i64..3, -3i64..3), 0..5),
    ) {
        let mut v = Verdict::new("x");
        for (k, h) in hyps.iter().enumerate() {
            v = v.require(format!("h{k}"), *h);
        }
        let cs: Vec<Clause> = clauses
            .iter()
            .map(|&(live, l, r)| if live {
                Clause::compare("c", None, l, Relation::Le, r)
            } else {
                Clause::not_applicable("c", None, "off")
            })
            .collect();
        let v = v.conclude(cs);
        prop_assert_eq!(v.holds.is_some(), v.applicable);
        if !v.applicable {
            prop_assert!(v.reason.is_some());
        }
        if hyps.iter().any(|h| !h) {
            prop_assert!(!v.applicable);
            prop_assert!(v.reason.as_deref().unwrap().starts_with("hypothesis fails: h"));
        }
        if v.applicable {
            let all = clauses.iter().filter(|c| c.0).all(|c| c.1 <= c.2);
            prop_assert_eq!(v.holds, Some(all));
        }
    }

    #[test]
    fn critical_values_partition_the_points(values in prop::collection::vec(-5.0f64..5.0, 0..12)) {
        let pts: Vec<CriticalPoint> = values
            .iter()
            .map(|&v| CriticalPoint {
                location: Point::new(v, 0.0),
                value: v,
                multiplicity: 1,
                is_zero: false,
                degree_radius: 0.1,
                winding: -1.0,
                theta: 0.0,
                s: 0.5,
            })
            .collect();
        let groups = critical_values(&pts, 1e-3);
        let mut seen: Vec<usize> = groups.iter().flat_map(|g| g.1.clone()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..pts.len()).collect::<Vec<_>>());
        for w in groups.windows(2) {
            prop_assert!(w[0].0 < w[1].0);
        }
        for (t, members) in &groups {
            for &i in members {
                prop_assert!((pts[i].value - t).abs() <= 1e-3);
            }
        }
    }
}
