//! Interior critical points, their multiplicities, and clusters of
//! equal-value critical points.

pub mod cluster;
pub mod degree;

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::domain::geometry::{wrap_angle, Point};
use crate::domain::scenario::ToleranceSet;
use crate::solver::SolutionField;

pub use cluster::{cluster_critical_sets, ClusterReport};
pub use degree::{multiplicity, winding_number, DegreeOutcome};

const MAX_NEWTON_STEPS: usize = 50;
const SCAN_FACTOR: f64 = 10.0;
const MAX_DRIFT_CELLS: f64 = 4.0;

/// Tolerances with every field-dependent default filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub grad_zero_tol: f64,
    pub value_zero_tol: f64,
    /// Fixed merge radius; `None` means three local cell diagonals.
    pub dedup_radius: Option<f64>,
    pub equal_extrema_tol: f64,
    pub interior_margin: f64,
    /// Solution range used to scale relative tolerances.
    pub scale: f64,
}

impl Tolerances {
    pub fn resolve(field: &SolutionField, set: &ToleranceSet) -> Tolerances {
        let scale = field.range().max(f64::MIN_POSITIVE);
        let diameter = field.domain().diameter();
        Tolerances {
            grad_zero_tol: set
                .grad_zero_tol
                .unwrap_or((1e-6 * scale / diameter).max(1e-14)),
            value_zero_tol: set.value_zero_tol.unwrap_or((1e-5 * scale).max(1e-14)),
            dedup_radius: set.dedup_radius,
            equal_extrema_tol: set.equal_extrema_tol,
            interior_margin: set.interior_margin,
            scale,
        }
    }

    /// Absolute tolerance for comparing values of `u`.
    pub fn value_tol(&self) -> f64 {
        self.equal_extrema_tol * self.scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub location: Point,
    pub value: f64,
    pub multiplicity: u32,
    pub is_zero: bool,
    pub degree_radius: f64,
    /// Gradient winding number before rounding.
    pub winding: f64,
    #[serde(skip)]
    pub theta: f64,
    #[serde(skip)]
    pub s: f64,
}

/// Critical point found inside the boundary margin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Suspect {
    pub location: Point,
    pub value: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum CriticalError {
    #[error("Newton stalled from seed ({}, {})", seed.x, seed.y)]
    NewtonStall { seed: Point },
    #[error("winding number {winding:.4} at ({}, {}) is not near an integer", location.x, location.y)]
    DegreeAmbiguous { location: Point, winding: f64 },
    #[error("no clean degree circle around ({}, {}){}", location.x, location.y, other.map(|o| format!(": critical point at ({}, {}) intrudes", o.x, o.y)).unwrap_or_default())]
    RadiusExhausted { location: Point, other: Option<Point> },
    #[error("level band at t={t} is too wide to separate clusters ({flat_cells} flat cells)")]
    BandTooWide { t: f64, flat_cells: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub near_boundary: Vec<Suspect>,
    pub stalled_seeds: usize,
    /// Points whose degree could not be determined.
    pub failures: Vec<CriticalError>,
    pub warnings: Vec<String>,
    pub tolerances: Tolerances,
}

impl CriticalSearch {
    pub fn total_multiplicity(&self) -> u32 {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    pub fn zero_points(&self) -> Vec<CriticalPoint> {
        self.points.iter().filter(|p| p.is_zero).cloned().collect()
    }
}

impl fmt::Display for CriticalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:.6}, {:.6}) u={:.6} m={}",
            self.location.x, self.location.y, self.value, self.multiplicity
        )
    }
}

fn norm(g: [f64; 2]) -> f64 {
    g[0].hypot(g[1])
}

/// Cells whose corner/centre gradients change sign in both components or
/// whose centre gradient is nearly zero.
fn scan_seeds(field: &SolutionField, tol: f64) -> Vec<(f64, f64)> {
    let g = field.grid();
    let (ht, hs) = (g.h_theta(), g.h_s());
    // corner gradients, row-major over (n_s + 1) × n_theta
    let mut corner = Vec::with_capacity((g.n_s + 1) * g.n_theta);
    for j in 0..=g.n_s {
        for i in 0..g.n_theta {
            corner.push(field.gradient_ref(g.theta(i), g.s(j)));
        }
    }
    let mut seeds = Vec::new();
    for j in 0..g.n_s {
        for i in 0..g.n_theta {
            let tc = (i as f64 + 0.5) * ht;
            let sc = (j as f64 + 0.5) * hs;
            let c = field.gradient_ref(tc, sc);
            let samples = [
                corner[g.flat(i, j)],
                corner[g.flat(i + 1, j)],
                corner[g.flat(i, j + 1)],
                corner[g.flat(i + 1, j + 1)],
                c,
            ];
            let straddles = |k: usize| {
                let lo = samples.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min);
                let hi = samples.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max);
                lo <= 0.0 && hi >= 0.0
            };
            if (straddles(0) && straddles(1)) || norm(c) < SCAN_FACTOR * tol {
                seeds.push((tc, sc));
            }
        }
    }
    seeds
}

/// Newton iteration on `∇u = 0` with a one-cell trust region.
fn newton(field: &SolutionField, theta: f64, s: f64, tol: f64) -> Option<Point> {
    let start = field.domain().point(theta, s);
    let cell = field.cell_diagonal(theta, s).max(1e-12);
    let mut p = start;
    for _ in 0..MAX_NEWTON_STEPS {
        let gr = field.gradient(p).ok()?;
        if norm(gr) <= tol {
            return Some(p);
        }
        let h = field.hessian(p).ok()?;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if !det.is_finite() || det == 0.0 {
            return None;
        }
        let mut dx = -(h[1][1] * gr[0] - h[0][1] * gr[1]) / det;
        let mut dy = -(-h[1][0] * gr[0] + h[0][0] * gr[1]) / det;
        let len = dx.hypot(dy);
        if len > cell {
            dx *= cell / len;
            dy *= cell / len;
        }
        p = Point::new(p.x + dx, p.y + dy);
        if p.dist(start) > MAX_DRIFT_CELLS * cell {
            return None;
        }
    }
    let gr = field.gradient(p).ok()?;
    (norm(gr) <= tol).then_some(p)
}

struct Cluster {
    members: Vec<Point>,
}

impl Cluster {
    fn centroid(&self) -> Point {
        let n = self.members.len() as f64;
        let (sx, sy) = self
            .members
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
        Point::new(sx / n, sy / n)
    }

    fn spread(&self) -> f64 {
        let c = self.centroid();
        self.members.iter().map(|p| p.dist(c)).fold(0.0, f64::max)
    }
}

/// Single-linkage grouping of converged Newton endpoints.
fn dedup(field: &SolutionField, pts: &[Point], radius: Option<f64>) -> Vec<Cluster> {
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let reach: Vec<f64> = pts
        .iter()
        .map(|p| {
            radius.unwrap_or_else(|| {
                let (t, s) = field.domain().inverse(*p);
                3.0 * field.cell_diagonal(t, s.clamp(0.0, 1.0))
            })
        })
        .collect();
    for a in 0..n {
        for b in a + 1..n {
            if pts[a].dist(pts[b]) <= reach[a].max(reach[b]) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Cluster)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.members.push(pts[i]),
            None => groups.push((
                r,
                Cluster {
                    members: vec![pts[i]],
                },
            )),
        }
    }
    groups.into_iter().map(|g| g.1).collect()
}

fn canonical_order(a: &CriticalPoint, b: &CriticalPoint, vtol: f64) -> Ordering {
    if (a.value - b.value).abs() > vtol {
        return a.value.total_cmp(&b.value);
    }
    let (ta, tb) = (wrap_angle(a.location.angle()), wrap_angle(b.location.angle()));
    if (ta - tb).abs() > 1e-9 {
        return ta.total_cmp(&tb);
    }
    a.location.norm().total_cmp(&b.location.norm())
}

/// Locates interior critical points and their multiplicities.
pub fn find_critical_points(field: &SolutionField, set: &ToleranceSet) -> CriticalSearch {
    let tol = Tolerances::resolve(field, set);
    let seeds = scan_seeds(field, tol.grad_zero_tol);
    let mut converged = Vec::new();
    let mut stalled = 0;
    for (t, s) in seeds {
        match newton(field, t, s, tol.grad_zero_tol) {
            Some(p) => converged.push(p),
            None => stalled += 1,
        }
    }
    let disk = field.domain().is_disk();
    let margin = tol.interior_margin;
    let mut interior = Vec::new();
    let mut near_boundary: Vec<Suspect> = Vec::new();
    for p in converged {
        let (_, s) = field.domain().inverse(p);
        let inner_band = !disk && s < margin;
        if inner_band || s > 1.0 - margin {
            if !near_boundary.iter().any(|q| q.location.dist(p) < 1e-6 * field.domain().diameter()) {
                near_boundary.push(Suspect {
                    location: p,
                    value: field.value(p).unwrap_or(f64::NAN),
                    s,
                });
            }
        } else {
            interior.push(p);
        }
    }

    let clusters = dedup(field, &interior, tol.dedup_radius);
    let reps: Vec<(Point, f64)> = clusters
        .iter()
        .map(|c| {
            let spread = c.spread();
            let rep = if spread <= 1e-6 * field.domain().diameter() {
                *c.members
                    .iter()
                    .min_by(|a, b| {
                        let ga = field.gradient(**a).map(norm).unwrap_or(f64::INFINITY);
                        let gb = field.gradient(**b).map(norm).unwrap_or(f64::INFINITY);
                        ga.total_cmp(&gb)
                    })
                    .unwrap()
            } else {
                c.centroid()
            };
            (rep, spread)
        })
        .collect();

    let mut points = Vec::new();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    for (k, (p, spread)) in reps.iter().enumerate() {
        let others: Vec<Point> = reps
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != k)
            .map(|(_, r)| r.0)
            .collect();
        match degree::degree_at(field, *p, *spread, &others, tol.grad_zero_tol) {
            Ok(d) => {
                let m = -d.winding.round();
                if m <= 0.0 {
                    warnings.push(format!(
                        "discarded spurious critical point at ({:.6}, {:.6}) with winding {:.3}",
                        p.x, p.y, d.winding
                    ));
                    continue;
                }
                let (theta, s) = field.domain().inverse(*p);
                let value = field.value(*p).unwrap_or(f64::NAN);
                points.push(CriticalPoint {
                    location: *p,
                    value,
                    multiplicity: m as u32,
                    is_zero: value.abs() <= tol.value_zero_tol,
                    degree_radius: d.radius,
                    winding: d.winding,
                    theta,
                    s,
                });
            }
            Err(e) => failures.push(e),
        }
    }
    let vtol = tol.value_tol();
    points.sort_by(|a, b| canonical_order(a, b, vtol));
    near_boundary.sort_by(|a, b| a.value.total_cmp(&b.value));
    CriticalSearch {
        points,
        near_boundary,
        stalled_seeds: stalled,
        failures,
        warnings,
        tolerances: tol,
    }
}

/// Critical points whose value is zero within `value_zero_tol`.
pub fn find_critical_zero_points(field: &SolutionField, set: &ToleranceSet) -> CriticalSearch {
    let mut search = find_critical_points(field, set);
    search.points.retain(|p| p.is_zero);
    search
}

/// Writes `x,y,u,multiplicity,is_zero,degree_radius` rows.
pub fn write_csv<W: Write>(points: &[CriticalPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "x,y,u,multiplicity,is_zero,degree_radius")?;
    for p in points {
        writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{},{},{:.12e}",
            p.location.x, p.location.y, p.value, p.multiplicity, p.is_zero, p.degree_radius
        )?;
    }
    Ok(())
}
