//! Connected components of super- and sub-level sets.

use std::collections::VecDeque;

use serde::Serialize;

use crate::solver::SolutionField;

use super::profile::BoundaryProfile;
use super::Side;

/// Refinement factor of the cell-centre lattice used for censuses.
pub const CENSUS_REFINEMENT: usize = 2;
/// Components smaller than this many cells trigger a resolution warning.
pub const MIN_RESOLVED_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Super,
    Sub,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelComponent {
    pub sign: Sign,
    /// Flat lattice indices `row * cols + col`; the disk centre is `rows * cols`.
    #[serde(skip)]
    pub cells: Vec<usize>,
    pub cell_count: usize,
    pub touches_interior: bool,
    pub touches_exterior: bool,
    /// Winds once around the hole of an annulus.
    pub wraps: bool,
    /// Components of the other sign enclosed entirely by this one.
    pub holes: usize,
    /// Largest value for `super`, smallest for `sub`.
    pub extreme_value: f64,
    /// Same extreme restricted to cells next to a Dirichlet ring.
    pub boundary_extreme: Option<f64>,
    pub uncertain_cells: usize,
}

impl LevelComponent {
    pub fn is_simply_connected(&self) -> bool {
        !self.wraps && self.holes == 0
    }

    pub fn touches(&self, side: Side) -> bool {
        match side {
            Side::Interior => self.touches_interior,
            Side::Exterior => self.touches_exterior,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetCensus {
    pub t: f64,
    #[serde(rename = "M1")]
    pub m1: usize,
    #[serde(rename = "M2")]
    pub m2: usize,
    pub components: Vec<LevelComponent>,
    /// Components made only of uncertain cells, left out of the counts.
    pub excluded: usize,
    pub band: f64,
    pub warnings: Vec<String>,
}

impl LevelSetCensus {
    pub fn of_sign(&self, sign: Sign) -> impl Iterator<Item = &LevelComponent> {
        self.components.iter().filter(move |c| c.sign == sign)
    }

    /// Simply connected components of `sign` that meet `side`.
    pub fn simply_connected_touching(&self, sign: Sign, side: Side) -> usize {
        self.of_sign(sign)
            .filter(|c| c.is_simply_connected() && c.touches(side))
            .count()
    }
}

struct Labelled {
    label: Vec<usize>,
    wraps: Vec<bool>,
    count: usize,
}

/// 4-connected labelling of `inside` cells on a `cols × rows` lattice that is
/// periodic in the column index. With `center` an extra node adjacent to all
/// of row 0 stands for the disk centre.
fn label_cells(cols: usize, rows: usize, center: bool, inside: impl Fn(usize) -> bool) -> Labelled {
    let total = cols * rows + usize::from(center);
    let mut label = vec![usize::MAX; total];
    let mut lift = vec![0isize; total];
    let mut wraps = Vec::new();
    let hub = cols * rows;
    for start in 0..total {
        if label[start] != usize::MAX || !inside(start) {
            continue;
        }
        let id = wraps.len();
        let mut wrap = false;
        label[start] = id;
        lift[start] = if start == hub { 0 } else { (start % cols) as isize };
        let mut queue = VecDeque::from([start]);
        let mut nbrs = Vec::with_capacity(cols.max(4));
        while let Some(k) = queue.pop_front() {
            nbrs.clear();
            if k == hub {
                nbrs.extend((0..cols).map(|c| (c, c as isize)));
            } else {
                let (c, r) = (k % cols, k / cols);
                let here = lift[k];
                nbrs.push((r * cols + (c + 1) % cols, here + 1));
                nbrs.push((r * cols + (c + cols - 1) % cols, here - 1));
                if r + 1 < rows {
                    nbrs.push((k + cols, here));
                }
                if r > 0 {
                    nbrs.push((k - cols, here));
                } else if center {
                    nbrs.push((hub, 0));
                }
            }
            for &(n, l) in &nbrs {
                if label[n] == id {
                    // through the disk centre every loop is contractible
                    if !center && lift[n] != l {
                        wrap = true;
                    }
                    continue;
                }
                if label[n] != usize::MAX || !inside(n) {
                    continue;
                }
                label[n] = id;
                lift[n] = l;
                queue.push_back(n);
            }
        }
        wraps.push(wrap);
    }
    Labelled {
        count: wraps.len(),
        label,
        wraps,
    }
}

/// Census of `{u > t}` and `{u < t}` on the refined cell-centre lattice.
pub fn level_census(field: &SolutionField, t: f64) -> LevelSetCensus {
    let lat = field.lattice(CENSUS_REFINEMENT, true);
    let (cols, rows) = (lat.cols, lat.rows);
    let disk = field.domain().is_disk();
    let mut values = lat.values.clone();
    if disk {
        values.push(field.center().map_or(lat.at(0, 0), |c| c.value));
    }
    let band = field.interpolation_error();
    let sign_of = |v: f64| if v > t { Sign::Super } else { Sign::Sub };

    let mut components = Vec::new();
    let mut excluded = 0;
    let mut labels = vec![usize::MAX; values.len()];
    let mut per_sign = Vec::new();
    for sign in [Sign::Super, Sign::Sub] {
        let lab = label_cells(cols, rows, disk, |k| sign_of(values[k]) == sign);
        per_sign.push((sign, lab));
    }
    // gather cells per label in index order so output is deterministic
    let mut slots: Vec<(Sign, usize, Vec<usize>)> = Vec::new();
    for (sign, lab) in &per_sign {
        let mut lists = vec![Vec::new(); lab.count];
        for (k, &l) in lab.label.iter().enumerate() {
            if l != usize::MAX {
                lists[l].push(k);
            }
        }
        slots.extend(lists.into_iter().enumerate().map(|(l, cells)| (*sign, l, cells)));
    }
    slots.sort_by_key(|s| s.2[0]);

    let touches = |k: usize, side: Side| {
        if k >= cols * rows {
            return false;
        }
        let r = k / cols;
        match side {
            Side::Interior => !disk && r == 0,
            Side::Exterior => r + 1 == rows,
        }
    };
    let mut island_of = Vec::new();
    for (sign, l, cells) in slots {
        let lab = &per_sign[usize::from(sign == Sign::Sub)].1;
        let uncertain = cells.iter().filter(|&&k| (values[k] - t).abs() <= band).count();
        if uncertain == cells.len() {
            excluded += 1;
            continue;
        }
        let better = |a: f64, b: f64| match sign {
            Sign::Super => a.max(b),
            Sign::Sub => a.min(b),
        };
        let init = match sign {
            Sign::Super => f64::NEG_INFINITY,
            Sign::Sub => f64::INFINITY,
        };
        let extreme = cells.iter().fold(init, |a, &k| better(a, values[k]));
        let on_boundary: Vec<f64> = cells
            .iter()
            .filter(|&&k| touches(k, Side::Interior) || touches(k, Side::Exterior))
            .map(|&k| values[k])
            .collect();
        let boundary_extreme = (!on_boundary.is_empty())
            .then(|| on_boundary.iter().copied().fold(init, better));
        let id = components.len();
        for &k in &cells {
            labels[k] = id;
        }
        let comp = LevelComponent {
            sign,
            cell_count: cells.len(),
            touches_interior: cells.iter().any(|&k| touches(k, Side::Interior)),
            touches_exterior: cells.iter().any(|&k| touches(k, Side::Exterior)),
            wraps: lab.wraps[l],
            holes: 0,
            extreme_value: extreme,
            boundary_extreme,
            uncertain_cells: uncertain,
            cells,
        };
        if !comp.touches_interior && !comp.touches_exterior && !comp.wraps {
            island_of.push(id);
        }
        components.push(comp);
    }

    // an island whose every neighbour belongs to one component is a hole in it
    for &id in &island_of {
        let mut around = None;
        let mut single = true;
        for &k in &components[id].cells {
            let (c, r) = (k % cols, k / cols);
            let mut nbrs = vec![r * cols + (c + 1) % cols, r * cols + (c + cols - 1) % cols];
            if k >= cols * rows {
                nbrs = (0..cols).collect();
            } else {
                if r + 1 < rows {
                    nbrs.push(k + cols);
                }
                if r > 0 {
                    nbrs.push(k - cols);
                } else if disk {
                    nbrs.push(cols * rows);
                }
            }
            for n in nbrs {
                let o = labels[n];
                if o == id || o == usize::MAX {
                    continue;
                }
                match around {
                    None => around = Some(o),
                    Some(a) if a != o => single = false,
                    _ => {}
                }
            }
        }
        if let (Some(a), true) = (around, single) {
            components[a].holes += 1;
        }
    }

    let mut warnings = Vec::new();
    let small = components
        .iter()
        .filter(|c| c.cell_count < MIN_RESOLVED_CELLS)
        .count();
    if small > 0 {
        warnings.push(format!(
            "resolution: {small} component(s) at t={t} have fewer than {MIN_RESOLVED_CELLS} cells"
        ));
    }
    if excluded > 0 {
        warnings.push(format!(
            "{excluded} component(s) at t={t} lie inside the uncertainty band and were not counted"
        ));
    }
    LevelSetCensus {
        t,
        m1: components.iter().filter(|c| c.sign == Sign::Super).count(),
        m2: components.iter().filter(|c| c.sign == Sign::Sub).count(),
        components,
        excluded,
        band,
        warnings,
    }
}

/// Number of connected components of `{lo < u < hi}`.
pub fn band_components(field: &SolutionField, lo: f64, hi: f64) -> usize {
    let lat = field.lattice(CENSUS_REFINEMENT, true);
    let disk = field.domain().is_disk();
    let center = field.center().map_or(f64::NAN, |c| c.value);
    let inside = |k: usize| {
        let v = if k < lat.values.len() { lat.values[k] } else { center };
        v > lo && v < hi
    };
    label_cells(lat.cols, lat.rows, disk, inside).count
}

/// Order of the four boundary extreme values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingCase {
    /// `z₁ < Z₁ ≤ z₂ < Z₂`
    Separated,
    /// `z₁ < z₂ < Z₁ < Z₂`
    Interleaved,
    Other,
}

impl OrderingCase {
    /// Classifies the boundary ranges; values closer than `tol` count as equal.
    pub fn classify(z1: f64, big_z1: f64, z2: f64, big_z2: f64, tol: f64) -> OrderingCase {
        let lt = |a: f64, b: f64| a < b - tol;
        if lt(z1, big_z1) && big_z1 <= z2 + tol && lt(z2, big_z2) {
            OrderingCase::Separated
        } else if lt(z1, z2) && lt(z2, big_z1) && lt(big_z1, big_z2) {
            OrderingCase::Interleaved
        } else {
            OrderingCase::Other
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            OrderingCase::Separated => "z1 < Z1 <= z2 < Z2",
            OrderingCase::Interleaved => "z1 < z2 < Z1 < Z2",
            OrderingCase::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactClause {
    pub clause: &'static str,
    pub sign: Sign,
    pub must_touch: Option<Side>,
    /// Indices into the census components that break the clause.
    pub failing: Vec<usize>,
    pub checked: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactReport {
    pub t: f64,
    pub case: OrderingCase,
    pub applicable: bool,
    pub reason: Option<String>,
    pub clauses: Vec<ContactClause>,
    pub holds: bool,
}

/// Checks which boundary each level-set component must meet at `t`.
pub fn check_component_contact(
    census: &LevelSetCensus,
    profile: &BoundaryProfile,
    case: OrderingCase,
) -> ContactReport {
    let t = census.t;
    let not_applicable = |reason: String| ContactReport {
        t,
        case,
        applicable: false,
        reason: Some(reason),
        clauses: Vec::new(),
        holds: true,
    };
    let Some([z1, big_z1, z2, big_z2]) = profile.extreme_values() else {
        return not_applicable("domain is simply connected".into());
    };
    let actual = profile.ordering();
    if actual != case {
        return not_applicable(format!(
            "case not applicable: boundary values satisfy {} (z1={z1}, Z1={big_z1}, z2={z2}, Z2={big_z2}), not {}",
            actual.describe(),
            case.describe()
        ));
    }
    let rule = |clause: &'static str, sign: Sign, side: Option<Side>| {
        let mut failing = Vec::new();
        let mut checked = 0;
        for (i, c) in census.components.iter().enumerate() {
            if c.sign != sign {
                continue;
            }
            checked += 1;
            if side.is_some_and(|s| !c.touches(s)) {
                failing.push(i);
            }
        }
        ContactClause {
            clause,
            sign,
            must_touch: side,
            holds: failing.is_empty(),
            failing,
            checked,
        }
    };
    let mut clauses = Vec::new();
    match case {
        OrderingCase::Separated => {
            if t > z2 && t < big_z2 {
                clauses.push(rule("(1)", Sign::Super, Some(Side::Exterior)));
            }
            if t > z1 && t < big_z1 {
                clauses.push(rule("(2)", Sign::Sub, Some(Side::Interior)));
            }
        }
        OrderingCase::Interleaved => {
            if t >= big_z1 && t < big_z2 {
                clauses.push(rule("(3)", Sign::Super, Some(Side::Exterior)));
            }
            if t > z2 && t < big_z1 {
                clauses.push(rule("(4)", Sign::Super, None));
                clauses.push(rule("(4)", Sign::Sub, None));
            }
            if t > z1 && t <= z2 {
                clauses.push(rule("(5)", Sign::Sub, Some(Side::Interior)));
            }
        }
        OrderingCase::Other => {
            return not_applicable("case not applicable: no contact clause for this ordering".into())
        }
    }
    if clauses.is_empty() {
        return not_applicable(format!("t={t} lies in no clause interval"));
    }
    ContactReport {
        t,
        case,
        applicable: true,
        reason: None,
        holds: clauses.iter().all(|c| c.holds),
        clauses,
    }
}

/// Maximum-principle surrogate: each component reaches its extreme value on
/// cells next to the boundary, up to `tol`. Returns indices of offenders.
pub fn check_maximum_principle(census: &LevelSetCensus, tol: f64) -> Vec<usize> {
    census
        .components
        .iter()
        .enumerate()
        .filter(|(_, c)| match (c.sign, c.boundary_extreme) {
            (_, None) => true,
            (Sign::Super, Some(b)) => b < c.extreme_value - tol,
            (Sign::Sub, Some(b)) => b > c.extreme_value + tol,
        })
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_scenario;
    use crate::solver::test_support::scenario;
    use crate::topology::boundary_profile;

    #[test]
    fn radial_field_splits_into_two_rings() {
        let spec = scenario(Some("1"), "exp(1)", Some("0"), "1", 128, 64);
        let f = solve_scenario(&spec).unwrap();
        let c = level_census(&f, 0.5);
        assert_eq!((c.m1, c.m2), (1, 1));
        let sup = c.of_sign(Sign::Super).next().unwrap();
        assert!(sup.touches_exterior && !sup.touches_interior && sup.wraps);
        let sub = c.of_sign(Sign::Sub).next().unwrap();
        assert!(sub.touches_interior && !sub.touches_exterior && sub.wraps);
        assert!(check_maximum_principle(&c, 1e-9).is_empty());
    }

    #[test]
    fn threshold_above_range_is_all_sub() {
        let psi = "(r+1/r)*cos(theta)";
        let spec = scenario(Some("0.5"), "2", Some(psi), psi, 64, 32);
        let f = solve_scenario(&spec).unwrap();
        let c = level_census(&f, 10.0);
        assert_eq!((c.m1, c.m2), (0, 1));
        let c = level_census(&f, -10.0);
        assert_eq!((c.m1, c.m2), (1, 0));
    }

    #[test]
    fn lobes_above_the_saddle() {
        // at t=2.2 the set {u>t} near θ=0 has one lobe on each boundary
        let psi = "(r+1/r)*cos(theta)";
        let spec = scenario(Some("0.5"), "2", Some(psi), psi, 128, 64);
        let f = solve_scenario(&spec).unwrap();
        let c = level_census(&f, 2.2);
        assert_eq!((c.m1, c.m2), (2, 1));
        let mut contacts: Vec<_> = c
            .of_sign(Sign::Super)
            .map(|k| (k.touches_interior, k.touches_exterior))
            .collect();
        contacts.sort();
        assert_eq!(contacts, vec![(false, true), (true, false)]);
        // below the saddle value the lobes join
        let c = level_census(&f, 1.9);
        assert_eq!((c.m1, c.m2), (1, 1));
    }

    #[test]
    fn disk_saddle_census() {
        let spec = scenario(None, "1", None, "cos(2*theta)", 128, 64);
        let f = solve_scenario(&spec).unwrap();
        let c = level_census(&f, 0.2);
        assert_eq!((c.m1, c.m2), (2, 1));
        assert!(c.components.iter().all(|k| !k.touches_interior && !k.wraps));
        let c = level_census(&f, -0.2);
        assert_eq!((c.m1, c.m2), (1, 2));
    }

    #[test]
    fn band_between_levels() {
        let spec = scenario(Some("1"), "exp(1)", Some("0"), "1", 64, 32);
        let f = solve_scenario(&spec).unwrap();
        assert_eq!(band_components(&f, 0.3, 0.6), 1);
        assert_eq!(band_components(&f, 2.0, 3.0), 0);
    }

    #[test]
    fn contact_on_wavy_annulus() {
        let spec = scenario(
            Some("2+sin(3*theta)"),
            "6+sin(4*theta)",
            Some("log(r)"),
            "log(r)",
            128,
            64,
        );
        let f = solve_scenario(&spec).unwrap();
        let profile = boundary_profile(&spec, &f);
        assert_eq!(profile.ordering(), OrderingCase::Separated);
        let census = level_census(&f, 6f64.ln());
        let rep = check_component_contact(&census, &profile, OrderingCase::Separated);
        assert!(rep.applicable && rep.holds, "{rep:?}");
        assert!(census.m1 >= 1);
    }

    #[test]
    fn contact_case_mismatch_is_reported() {
        let psi = "(r+1/r)*cos(theta)";
        let spec = scenario(Some("0.5"), "2", Some(psi), psi, 64, 32);
        let f = solve_scenario(&spec).unwrap();
        let profile = boundary_profile(&spec, &f);
        let census = level_census(&f, 2.2);
        let rep = check_component_contact(&census, &profile, OrderingCase::Separated);
        assert!(!rep.applicable);
        assert!(rep.reason.unwrap().starts_with("case not applicable"));
    }

    #[test]
    fn contact_violation_is_flagged() {
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
        let mut census = level_census(&f, 6f64.ln());
        census.components.push(LevelComponent {
            sign: Sign::Super,
            cells: vec![0],
            cell_count: 1,
            touches_interior: false,
            touches_exterior: false,
            wraps: false,
            holes: 0,
            extreme_value: 2.0,
            boundary_extreme: None,
            uncertain_cells: 0,
        });
        let rep = check_component_contact(&census, &profile, OrderingCase::Separated);
        assert!(rep.applicable && !rep.holds);
        assert_eq!(rep.clauses[0].failing, vec![census.components.len() - 1]);
        assert_eq!(check_maximum_principle(&census, 1e-9), vec![census.components.len() - 1]);
    }
}
