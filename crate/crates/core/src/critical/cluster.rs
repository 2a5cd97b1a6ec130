//! Connected pieces of a level line that carry critical points.

use std::collections::VecDeque;

use serde::Serialize;

use crate::solver::SolutionField;

use super::{CriticalError, CriticalPoint};

pub const CLUSTER_REFINEMENT: usize = 4;
const MAX_FLAT_CELLS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub t: f64,
    pub q: usize,
    pub band: f64,
    /// Indices into the input point list, one entry per cluster.
    pub members: Vec<Vec<usize>>,
    /// Whether the cluster winds once around the hole.
    pub wrapping: Vec<bool>,
}

impl ClusterReport {
    pub fn any_wrapping(&self) -> bool {
        self.wrapping.iter().any(|w| *w)
    }
}

/// Counts the connected components of the near-level set `{|u − t| ≤ band}`
/// that contain at least one of `points`.
pub fn cluster_critical_sets(
    field: &SolutionField,
    points: &[CriticalPoint],
    t: f64,
) -> Result<ClusterReport, CriticalError> {
    let lat = field.lattice(CLUSTER_REFINEMENT, false);
    let (cols, rows) = (lat.cols, lat.rows - 1);
    let spread = points
        .iter()
        .map(|p| (p.value - t).abs())
        .fold(0.0, f64::max);
    let band = (2.0 * field.interpolation_error()).max(spread);

    let corners = |c: usize, r: usize| {
        [
            lat.at(c, r),
            lat.at(c + 1, r),
            lat.at(c, r + 1),
            lat.at(c + 1, r + 1),
        ]
    };
    let is_level = |c: usize, r: usize| {
        let v = corners(c, r);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo - band <= t && t <= hi + band
    };
    let is_flat = |c: usize, r: usize| corners(c, r).iter().all(|v| (v - t).abs() <= band);

    let seed_cell = |p: &CriticalPoint| {
        let c = ((p.theta / lat.h_theta).floor() as usize).min(cols - 1);
        let r = ((p.s / lat.h_s).floor() as usize).min(rows - 1);
        (c, r)
    };
    let seeds: Vec<(usize, usize)> = points.iter().map(seed_cell).collect();
    // cells near a critical point are flat by nature and do not count
    let guard = 3 * CLUSTER_REFINEMENT as isize;
    let near_point = |c: usize, r: usize| {
        seeds.iter().any(|&(sc, sr)| {
            let dc = (c as isize - sc as isize).rem_euclid(cols as isize);
            let dc = dc.min(cols as isize - dc);
            dc <= guard && (r as isize - sr as isize).abs() <= guard
        })
    };

    // label -> lifted column of first visit
    let mut label = vec![usize::MAX; cols * rows];
    let mut lift = vec![0isize; cols * rows];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut wrapping = Vec::new();
    for (k, &(sc, sr)) in seeds.iter().enumerate() {
        let start = sr * cols + sc;
        if label[start] != usize::MAX {
            members[label[start]].push(k);
            continue;
        }
        let id = members.len();
        members.push(vec![k]);
        let mut wraps = false;
        let mut flat = 0;
        let mut queue = VecDeque::new();
        label[start] = id;
        lift[start] = sc as isize;
        queue.push_back((sc, sr));
        while let Some((c, r)) = queue.pop_front() {
            if !near_point(c, r) && is_flat(c, r) {
                flat += 1;
            }
            let here = lift[r * cols + c];
            let mut nbrs: Vec<(usize, usize, isize)> = vec![
                ((c + 1) % cols, r, here + 1),
                ((c + cols - 1) % cols, r, here - 1),
            ];
            if r + 1 < rows {
                nbrs.push((c, r + 1, here));
            }
            if r > 0 {
                nbrs.push((c, r - 1, here));
            }
            for (nc, nr, nl) in nbrs {
                let idx = nr * cols + nc;
                if label[idx] == id {
                    if lift[idx] != nl {
                        wraps = true;
                    }
                    continue;
                }
                if label[idx] != usize::MAX || !is_level(nc, nr) {
                    continue;
                }
                label[idx] = id;
                lift[idx] = nl;
                queue.push_back((nc, nr));
            }
        }
        if flat > MAX_FLAT_CELLS {
            return Err(CriticalError::BandTooWide {
                t,
                flat_cells: flat,
            });
        }
        wrapping.push(wraps);
    }
    Ok(ClusterReport {
        t,
        q: members.len(),
        band,
        members,
        wrapping,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::find_critical_points;
    use crate::domain::Point;
    use crate::solver::solve_scenario;
    use crate::solver::test_support::scenario;

    #[test]
    fn single_saddle_single_cluster() {
        let psi = "(r+1/r)*cos(theta)";
        let spec = scenario(Some("0.5"), "2", Some(psi), psi, 128, 64);
        let f = solve_scenario(&spec).unwrap();
        let found = find_critical_points(&f, &spec.tolerances);
        let right: Vec<_> = found.points.iter().filter(|p| p.value > 0.0).cloned().collect();
        let rep = cluster_critical_sets(&f, &right, right[0].value).unwrap();
        assert_eq!(rep.q, 1);
        assert!(!rep.any_wrapping());
    }

    #[test]
    fn four_points_on_connected_zero_set() {
        let psi = "(r^2-r^-2)*cos(2*theta)";
        let spec = scenario(Some("0.5"), "2", Some(psi), psi, 128, 64);
        let f = solve_scenario(&spec).unwrap();
        let found = find_critical_points(&f, &spec.tolerances);
        assert_eq!(found.points.len(), 4);
        let rep = cluster_critical_sets(&f, &found.points, 0.0).unwrap();
        assert_eq!(rep.q, 1);
        assert!(rep.wrapping[0]);
    }

    #[test]
    fn two_minima_on_separate_loops() {
        let spec = scenario(None, "2", None, "x", 128, 64);
        let f = SolutionField::from_fn(&spec, |p| (p.x * p.x - 1.0).powi(2) + p.y * p.y);
        let mk = |x: f64| {
            let (theta, s) = f.domain().inverse(Point::new(x, 0.0));
            CriticalPoint {
                location: Point::new(x, 0.0),
                value: 0.0,
                multiplicity: 1,
                is_zero: true,
                degree_radius: 0.0,
                winding: -1.0,
                theta,
                s,
            }
        };
        let rep = cluster_critical_sets(&f, &[mk(-1.0), mk(1.0)], 0.0).unwrap();
        assert_eq!(rep.q, 2);
    }
}
