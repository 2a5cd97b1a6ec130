//! Extrema and zeros of the Dirichlet data along each boundary curve.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::critical::Tolerances;
use crate::domain::{Point, ScenarioSpec};
use crate::solver::SolutionField;

use super::census::OrderingCase;
use super::{Side, TopologyError};

pub const MIN_TRACE_SAMPLES: usize = 4096;
/// Node rows next to the boundary inspected by the closure test.
pub const COLLAR_ROWS: usize = 5;
/// Half-width of the closure test window, in grid columns.
pub const COLLAR_HALF_WIDTH: isize = 2;
const BISECTION_STEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremum {
    pub kind: ExtremumKind,
    pub theta: f64,
    pub value: f64,
    pub location: Point,
    /// Also an extremum against nearby interior values of `u`.
    pub relative_to_closure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroPoint {
    pub theta: f64,
    pub location: Point,
    /// Touches zero without changing sign.
    pub tangential: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceProfile {
    pub side: Side,
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    pub maxima: Vec<Extremum>,
    pub minima: Vec<Extremum>,
    pub zeros: Vec<ZeroPoint>,
    pub sign_changes: usize,
    pub tangential_zeros: usize,
    pub sign_changing: bool,
    pub equal_maxima: bool,
    pub equal_minima: bool,
    pub degenerate: bool,
}

impl TraceProfile {
    /// Number of local maxima, undefined for a constant trace.
    pub fn maxima_count(&self) -> Result<usize, TopologyError> {
        if self.degenerate {
            return Err(TopologyError::DegenerateTrace {
                side: self.side,
                value: self.max,
            });
        }
        Ok(self.maxima.len())
    }

    pub fn zero_count(&self) -> usize {
        self.sign_changes + self.tangential_zeros
    }

    pub fn all_closure_relative(&self) -> bool {
        self.maxima
            .iter()
            .chain(&self.minima)
            .all(|e| e.relative_to_closure)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryProfile {
    pub interior: Option<TraceProfile>,
    pub exterior: TraceProfile,
    pub z1: Option<f64>,
    #[serde(rename = "Z1")]
    pub big_z1: Option<f64>,
    pub z2: f64,
    #[serde(rename = "Z2")]
    pub big_z2: f64,
    /// Absolute tolerance for equal extreme values.
    pub value_tol: f64,
}

impl BoundaryProfile {
    pub fn trace(&self, side: Side) -> Option<&TraceProfile> {
        match side {
            Side::Interior => self.interior.as_ref(),
            Side::Exterior => Some(&self.exterior),
        }
    }

    /// `[z₁, Z₁, z₂, Z₂]` on an annulus.
    pub fn extreme_values(&self) -> Option<[f64; 4]> {
        Some([self.z1?, self.big_z1?, self.z2, self.big_z2])
    }

    pub fn ordering(&self) -> OrderingCase {
        match self.extreme_values() {
            Some([a, b, c, d]) => OrderingCase::classify(a, b, c, d, self.value_tol),
            None => OrderingCase::Other,
        }
    }

    pub fn traces(&self) -> impl Iterator<Item = &TraceProfile> {
        self.interior.iter().chain(std::iter::once(&self.exterior))
    }
}

struct Turn {
    kind: ExtremumKind,
    index: usize,
}

/// Alternating maxima and minima with hysteresis `tol`, starting from the
/// global maximum so the periodic walk closes cleanly.
fn turning_points(v: &[f64], tol: f64, tie: f64) -> Vec<Turn> {
    let n = v.len();
    let g = (0..n).fold(0, |b, k| if v[k] > v[b] { k } else { b });
    let mut turns = vec![Turn {
        kind: ExtremumKind::Max,
        index: g,
    }];
    let mut seeking = ExtremumKind::Min;
    let (mut best, mut first, mut last) = (v[g], g, g);
    for step in 1..=n {
        let k = (g + step) % n;
        let x = v[k];
        let (improves, reverses) = match seeking {
            ExtremumKind::Min => (x < best - tie, x > best + tol),
            ExtremumKind::Max => (x > best + tie, x < best - tol),
        };
        if improves {
            best = x;
            first = k;
            last = k;
        } else if (x - best).abs() <= tie {
            last = k;
        } else if reverses {
            let span = (last + n - first) % n;
            turns.push(Turn {
                kind: seeking,
                index: (first + span / 2) % n,
            });
            seeking = match seeking {
                ExtremumKind::Min => ExtremumKind::Max,
                ExtremumKind::Max => ExtremumKind::Min,
            };
            best = x;
            first = k;
            last = k;
        }
    }
    // the walk ends on the starting maximum; a trailing maximum without a
    // separating minimum duplicates it
    if let Some(t) = turns.last() {
        if turns.len() > 1 && t.kind == ExtremumKind::Max {
            turns.pop();
        }
    }
    turns
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..BISECTION_STEPS {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Is every node value in the collar next to `theta` on the right side of `value`?
fn closure_relative(field: &SolutionField, side: Side, kind: ExtremumKind, theta: f64, value: f64, tol: f64) -> bool {
    let g = field.grid();
    let centre = (theta / g.h_theta()).round() as isize;
    let rows: Vec<usize> = match side {
        Side::Interior => (1..=COLLAR_ROWS.min(g.n_s - 1)).collect(),
        Side::Exterior => (g.n_s.saturating_sub(COLLAR_ROWS)..g.n_s).collect(),
    };
    let n = g.n_theta as isize;
    (-COLLAR_HALF_WIDTH..=COLLAR_HALF_WIDTH).all(|d| {
        let i = (centre + d).rem_euclid(n) as usize;
        rows.iter().all(|&j| {
            let u = field.node_value(i, j);
            match kind {
                ExtremumKind::Max => u <= value + tol,
                ExtremumKind::Min => u >= value - tol,
            }
        })
    })
}

fn trace_profile(spec: &ScenarioSpec, field: &SolutionField, side: Side, tol: &Tolerances) -> TraceProfile {
    let interior = side == Side::Interior;
    let curve = match side {
        Side::Interior => spec.domain.interior.as_ref().expect("annulus"),
        Side::Exterior => &spec.domain.exterior,
    };
    let n = curve.samples.max(MIN_TRACE_SAMPLES);
    let h = TAU / n as f64;
    let psi = |theta: f64| spec.boundary_value(interior, theta);
    let v: Vec<f64> = (0..n).map(|k| psi(k as f64 * h)).collect();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let hysteresis = tol.value_tol();
    let degenerate = hi - lo <= hysteresis;

    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    if !degenerate {
        for turn in turning_points(&v, hysteresis, 1e-13 * tol.scale) {
            let k = turn.index;
            let (y0, y1, y2) = (v[(k + n - 1) % n], v[k], v[(k + 1) % n]);
            let curv = y0 - 2.0 * y1 + y2;
            let mut theta = k as f64 * h;
            let mut value = y1;
            if curv.abs() > 0.0 {
                let cand = theta + 0.5 * (y0 - y2) / curv * h;
                let cv = psi(cand);
                let better = match turn.kind {
                    ExtremumKind::Max => cv > value,
                    ExtremumKind::Min => cv < value,
                };
                if better {
                    theta = cand.rem_euclid(TAU);
                    value = cv;
                }
            }
            let e = Extremum {
                kind: turn.kind,
                theta,
                value,
                location: curve.point(theta),
                relative_to_closure: closure_relative(field, side, turn.kind, theta, value, tol.value_zero_tol),
            };
            match turn.kind {
                ExtremumKind::Max => maxima.push(e),
                ExtremumKind::Min => minima.push(e),
            }
        }
        maxima.sort_by(|a, b| a.theta.total_cmp(&b.theta));
        minima.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    }
    let min = minima.iter().map(|e| e.value).fold(lo, f64::min);
    let max = maxima.iter().map(|e| e.value).fold(hi, f64::max);
    let spread = |es: &[Extremum]| {
        let a = es.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
        let b = es.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
        es.is_empty() || b - a <= hysteresis
    };

    // zeros: runs of near-zero samples between signed ones
    let ztol = tol.value_zero_tol;
    let sign = |x: f64| {
        if x > ztol {
            1
        } else if x < -ztol {
            -1
        } else {
            0
        }
    };
    let mut zeros = Vec::new();
    let (mut sign_changes, mut tangential_zeros) = (0, 0);
    let has_pos = v.iter().any(|&x| sign(x) > 0);
    let has_neg = v.iter().any(|&x| sign(x) < 0);
    if let Some(start) = (0..n).find(|&k| sign(v[k]) != 0) {
        let mut prev_sign = sign(v[start]);
        let mut prev_k = start;
        for step in 1..=n {
            let k = (start + step) % n;
            let s = sign(v[k]);
            if s == 0 {
                continue;
            }
            let gap = (k + n - prev_k) % n;
            if s != prev_sign || gap > 1 {
                let tangential = s == prev_sign;
                let a = prev_k as f64 * h;
                let b = a + gap as f64 * h;
                let theta = if tangential || gap > 1 {
                    0.5 * (a + b)
                } else {
                    bisect(&psi, a, b)
                };
                let theta = theta.rem_euclid(TAU);
                if tangential {
                    tangential_zeros += 1;
                } else {
                    sign_changes += 1;
                }
                zeros.push(ZeroPoint {
                    theta,
                    location: curve.point(theta),
                    tangential,
                });
            }
            prev_sign = s;
            prev_k = k;
        }
        zeros.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    }

    TraceProfile {
        side,
        samples: n,
        min,
        max,
        equal_maxima: spread(&maxima),
        equal_minima: spread(&minima),
        maxima,
        minima,
        zeros,
        sign_changes,
        tangential_zeros,
        sign_changing: has_pos && has_neg,
        degenerate,
    }
}

/// Profiles the boundary data of `spec` on every boundary curve.
pub fn boundary_profile(spec: &ScenarioSpec, field: &SolutionField) -> BoundaryProfile {
    let tol = Tolerances::resolve(field, &spec.tolerances);
    let interior = spec
        .domain
        .interior
        .is_some()
        .then(|| trace_profile(spec, field, Side::Interior, &tol));
    let exterior = trace_profile(spec, field, Side::Exterior, &tol);
    BoundaryProfile {
        z1: interior.as_ref().map(|p| p.min),
        big_z1: interior.as_ref().map(|p| p.max),
        z2: exterior.min,
        big_z2: exterior.max,
        interior,
        exterior,
        value_tol: tol.value_tol(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_scenario;
    use crate::solver::test_support::scenario;

    fn profile_of(r_i: Option<&str>, r_e: &str, psi_i: Option<&str>, psi_e: &str) -> BoundaryProfile {
        let spec = scenario(r_i, r_e, psi_i, psi_e, 128, 64);
        let f = solve_scenario(&spec).unwrap();
        boundary_profile(&spec, &f)
    }

    #[test]
    fn cosine_trace() {
        let p = profile_of(None, "1", None, "2.5*cos(theta)");
        let e = &p.exterior;
        assert_eq!((e.maxima.len(), e.minima.len(), e.zero_count()), (1, 1, 2));
        assert_eq!(e.sign_changes, 2);
        assert!(e.equal_maxima && e.equal_minima && e.sign_changing);
        assert!((e.maxima[0].value - 2.5).abs() < 1e-12);
        assert!(e.maxima[0].theta.min(TAU - e.maxima[0].theta) < 1e-6);
        assert!(p.interior.is_none());
        assert_eq!(p.ordering(), OrderingCase::Other);
    }

    #[test]
    fn double_cosine_trace() {
        let p = profile_of(None, "1", None, "3.75*cos(2*theta)");
        let e = &p.exterior;
        assert_eq!((e.maxima.len(), e.minima.len(), e.zero_count()), (2, 2, 4));
        let zs: Vec<f64> = e.zeros.iter().map(|z| z.theta).collect();
        for (z, want) in zs.iter().zip([1.0, 3.0, 5.0, 7.0]) {
            assert!((z - want * TAU / 8.0).abs() < 1e-9, "{zs:?}");
        }
    }

    #[test]
    fn wavy_annulus_extrema_are_not_closure_relative() {
        let p = profile_of(
            Some("2+sin(3*theta)"),
            "6+sin(4*theta)",
            Some("log(r)"),
            "log(r)",
        );
        let i = p.interior.as_ref().unwrap();
        assert_eq!((i.maxima.len(), i.minima.len()), (3, 3));
        assert!(i.equal_maxima && i.equal_minima);
        assert!(i.maxima.iter().all(|e| !e.relative_to_closure));
        assert!(i.minima.iter().all(|e| e.relative_to_closure));
        // log(2+sin3θ) touches zero at its minima without changing sign
        assert_eq!((i.sign_changes, i.tangential_zeros), (0, 3));
        let e = &p.exterior;
        assert_eq!((e.maxima.len(), e.minima.len()), (4, 4));
        assert!(e.equal_maxima && e.equal_minima);
        assert!(e.maxima.iter().all(|e| e.relative_to_closure));
        assert!(e.minima.iter().all(|e| !e.relative_to_closure));
        assert!((p.z2 - 5f64.ln()).abs() < 1e-9);
        assert!((p.big_z1.unwrap() - 3f64.ln()).abs() < 1e-9);
        assert_eq!(p.ordering(), OrderingCase::Separated);
    }

    #[test]
    fn constant_trace_is_degenerate() {
        let p = profile_of(Some("1"), "2", Some("0.5"), "cos(theta)");
        let i = p.interior.as_ref().unwrap();
        assert!(i.degenerate);
        assert!(matches!(
            i.maxima_count(),
            Err(TopologyError::DegenerateTrace { side: Side::Interior, .. })
        ));
        assert_eq!(p.exterior.maxima_count().unwrap(), 1);
    }

    #[test]
    fn shallow_wiggles_merge_into_one_extremum() {
        let p = profile_of(None, "1", None, "cos(theta)+1e-6*sin(40*theta)");
        assert_eq!(p.exterior.maxima.len(), 1);
    }
}
