//! Marching squares on the refined `(θ, s)` node lattice.

use serde::Serialize;

use crate::domain::Point;
use crate::solver::SolutionField;

use super::Side;

pub const CONTOUR_REFINEMENT: usize = 2;
const BISECTION_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LineEnd {
    Interior,
    Exterior,
}

impl From<Side> for LineEnd {
    fn from(s: Side) -> LineEnd {
        match s {
            Side::Interior => LineEnd::Interior,
            Side::Exterior => LineEnd::Exterior,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    pub points: Vec<Point>,
    pub closed: bool,
    /// Boundary curves met by the two ends of an open line.
    pub ends: Vec<LineEnd>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelLines {
    pub t: f64,
    pub polylines: Vec<Polyline>,
    pub saddle_cells: usize,
    pub warnings: Vec<String>,
}

// cell edges: 0 bottom, 1 right, 2 top, 3 left
fn segments(case: u8, centre_inside: bool) -> &'static [(u8, u8)] {
    match case {
        1 | 14 => &[(3, 0)],
        2 | 13 => &[(0, 1)],
        3 | 12 => &[(3, 1)],
        4 | 11 => &[(1, 2)],
        6 | 9 => &[(0, 2)],
        7 | 8 => &[(2, 3)],
        5 if centre_inside => &[(0, 1), (2, 3)],
        5 => &[(3, 0), (1, 2)],
        10 if centre_inside => &[(3, 0), (1, 2)],
        10 => &[(0, 1), (2, 3)],
        _ => &[],
    }
}

/// Level lines `{u = t}` as polylines that close or end on a boundary.
pub fn trace_level_lines(field: &SolutionField, t: f64) -> LevelLines {
    let lat = field.lattice(CONTOUR_REFINEMENT, false);
    let (cols, rows) = (lat.cols, lat.rows);
    let disk = field.domain().is_disk();
    let n_h = cols * rows;
    let edge_id = |c: usize, r: usize, e: u8| -> usize {
        let c1 = (c + 1) % cols;
        match e {
            0 => r * cols + c,
            2 => (r + 1) * cols + c,
            1 => n_h + r * cols + c1,
            _ => n_h + r * cols + c,
        }
    };

    let mut segs: Vec<(usize, usize)> = Vec::new();
    let mut saddle_cells = 0;
    for r in 0..rows - 1 {
        for c in 0..cols {
            let v = [
                lat.at(c, r),
                lat.at(c + 1, r),
                lat.at(c + 1, r + 1),
                lat.at(c, r + 1),
            ];
            let case = v
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &x)| acc | (u8::from(x >= t) << k));
            let centre_inside = if case == 5 || case == 10 {
                saddle_cells += 1;
                let tc = (c as f64 + 0.5) * lat.h_theta;
                let sc = (r as f64 + 0.5) * lat.h_s;
                field.value_ref(tc, sc) >= t
            } else {
                false
            };
            for &(a, b) in segments(case, centre_inside) {
                segs.push((edge_id(c, r, a), edge_id(c, r, b)));
            }
        }
    }

    // crossing point on an edge, by bisection on the interpolant
    let crossing = |e: usize| -> Point {
        let (a, b) = if e < n_h {
            let (c, r) = (e % cols, e / cols);
            ((c, r), (c + 1, r))
        } else {
            let k = e - n_h;
            let (c, r) = (k % cols, k / cols);
            ((c, r), (c, r + 1))
        };
        let pa = (a.0 as f64 * lat.h_theta, a.1 as f64 * lat.h_s);
        let pb = (b.0 as f64 * lat.h_theta, b.1 as f64 * lat.h_s);
        let fa = lat.at(a.0, a.1) - t;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..BISECTION_STEPS {
            let m = 0.5 * (lo + hi);
            let fm = field.value_ref(pa.0 + m * (pb.0 - pa.0), pa.1 + m * (pb.1 - pa.1)) - t;
            if (fm >= 0.0) == (fa >= 0.0) {
                lo = m;
            } else {
                hi = m;
            }
        }
        let m = 0.5 * (lo + hi);
        field
            .domain()
            .point(pa.0 + m * (pb.0 - pa.0), pa.1 + m * (pb.1 - pa.1))
    };
    let boundary_of = |e: usize| -> Option<LineEnd> {
        if e >= n_h {
            return None;
        }
        match e / cols {
            0 if !disk => Some(LineEnd::Interior),
            r if r + 1 == rows => Some(LineEnd::Exterior),
            _ => None,
        }
    };

    let mut at_edge: Vec<Vec<usize>> = vec![Vec::new(); 2 * n_h];
    for (k, &(a, b)) in segs.iter().enumerate() {
        at_edge[a].push(k);
        at_edge[b].push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut polylines = Vec::new();
    let walk = |start_seg: usize, start_edge: usize, used: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut edges = vec![start_edge];
        let mut seg = start_seg;
        let mut edge = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segs[seg];
            edge = if a == edge { b } else { a };
            edges.push(edge);
            if edge == start_edge {
                return (edges, true);
            }
            match at_edge[edge].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => return (edges, false),
            }
        }
    };
    // open lines first, from their boundary ends
    for e in 0..2 * n_h {
        if boundary_of(e).is_none() {
            continue;
        }
        while let Some(&s) = at_edge[e].iter().find(|&&s| !used[s]) {
            let (edges, _) = walk(s, e, &mut used);
            let ends = [edges[0], *edges.last().expect("nonempty")]
                .iter()
                .filter_map(|&x| boundary_of(x))
                .collect();
            polylines.push(Polyline {
                points: edges.iter().map(|&x| crossing(x)).collect(),
                closed: false,
                ends,
            });
        }
    }
    for s in 0..segs.len() {
        if used[s] {
            continue;
        }
        let (edges, closed) = walk(s, segs[s].0, &mut used);
        let mut points: Vec<Point> = edges.iter().map(|&x| crossing(x)).collect();
        if closed {
            points.pop();
        }
        polylines.push(Polyline {
            points,
            closed,
            ends: Vec::new(),
        });
    }

    let mut warnings = Vec::new();
    if saddle_cells > 0 {
        warnings.push(format!(
            "resolution: {saddle_cells} saddle cell(s) at t={t} resolved by the centre value"
        ));
    }
    LevelLines {
        t,
        polylines,
        saddle_cells,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_scenario;
    use crate::solver::test_support::scenario;

    #[test]
    fn circle_level_of_log() {
        let spec = scenario(Some("1"), "exp(1)", Some("0"), "1", 256, 128);
        let f = solve_scenario(&spec).unwrap();
        let lines = trace_level_lines(&f, 0.5);
        assert_eq!(lines.polylines.len(), 1);
        let l = &lines.polylines[0];
        assert!(l.closed);
        let dev = l
            .points
            .iter()
            .map(|p| (p.norm() - 0.5f64.exp()).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-2, "deviation {dev}");
    }

    #[test]
    fn zero_set_of_quadrupole() {
        let psi = "(r^2-r^-2)*cos(2*theta)";
        let spec = scenario(Some("0.5"), "2", Some(psi), psi, 128, 64);
        let f = solve_scenario(&spec).unwrap();
        let lines = trace_level_lines(&f, 0.0);
        assert!(!lines.polylines.is_empty());
        let mut near_circle = 0;
        let mut near_rays = 0;
        for p in lines.polylines.iter().flat_map(|l| &l.points) {
            let on_circle = (p.norm() - 1.0).abs() < 2e-2;
            let on_ray = (2.0 * p.angle()).cos().abs() < 2e-2;
            assert!(on_circle || on_ray, "({}, {}) is off the zero set", p.x, p.y);
            near_circle += usize::from(on_circle);
            near_rays += usize::from(on_ray);
        }
        assert!(near_circle > 50 && near_rays > 50);
    }

    #[test]
    fn no_lines_above_maximum() {
        let spec = scenario(Some("1"), "2", Some("0"), "1", 64, 32);
        let f = solve_scenario(&spec).unwrap();
        assert!(trace_level_lines(&f, 1.5).polylines.is_empty());
    }

    #[test]
    fn radial_lines_end_on_both_boundaries() {
        let spec = scenario(Some("1"), "2", Some("cos(theta)"), "2*cos(theta)", 64, 32);
        let f = solve_scenario(&spec).unwrap();
        let lines = trace_level_lines(&f, 0.3);
        assert!(!lines.polylines.is_empty());
        for l in &lines.polylines {
            assert!(l.closed || l.ends.len() == 2);
            for p in &l.points {
                assert!((f.value(*p).unwrap() - 0.3).abs() < 1e-8);
            }
        }
    }
}
