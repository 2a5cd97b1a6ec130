//! Sector count around a single critical point.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::critical::CriticalPoint;
use crate::domain::Point;
use crate::solver::SolutionField;

use super::TopologyError;

pub const LOCAL_RINGS: usize = 32;
pub const LOCAL_SPOKES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LocalStructure {
    pub supers: usize,
    pub subs: usize,
}

/// Counts components of `{u > u(cp)}` and `{u < u(cp)}` in the annulus
/// `ρ/4 ≤ |x − cp| ≤ ρ`, `ρ` being the degree radius of `cp`.
pub fn local_structure(
    field: &SolutionField,
    cp: &CriticalPoint,
    others: &[Point],
) -> Result<LocalStructure, TopologyError> {
    let rho = cp.degree_radius;
    let c = cp.location;
    if let Some(o) = others.iter().find(|o| o.dist(c) > 0.0 && o.dist(c) <= rho) {
        return Err(TopologyError::RadiusExhausted {
            location: c,
            other: *o,
        });
    }
    let mut above = vec![false; LOCAL_RINGS * LOCAL_SPOKES];
    for i in 0..LOCAL_RINGS {
        let r = rho * (0.25 + 0.75 * i as f64 / (LOCAL_RINGS - 1) as f64);
        for j in 0..LOCAL_SPOKES {
            let a = TAU * j as f64 / LOCAL_SPOKES as f64;
            let p = Point::new(c.x + r * a.cos(), c.y + r * a.sin());
            above[i * LOCAL_SPOKES + j] = field.value(p)? > cp.value;
        }
    }
    let count = |want: bool| {
        let mut seen = vec![false; above.len()];
        let mut n = 0;
        for start in 0..above.len() {
            if seen[start] || above[start] != want {
                continue;
            }
            n += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(k) = stack.pop() {
                let (i, j) = (k / LOCAL_SPOKES, k % LOCAL_SPOKES);
                let mut nb = vec![
                    i * LOCAL_SPOKES + (j + 1) % LOCAL_SPOKES,
                    i * LOCAL_SPOKES + (j + LOCAL_SPOKES - 1) % LOCAL_SPOKES,
                ];
                if i + 1 < LOCAL_RINGS {
                    nb.push(k + LOCAL_SPOKES);
                }
                if i > 0 {
                    nb.push(k - LOCAL_SPOKES);
                }
                for m in nb {
                    if !seen[m] && above[m] == want {
                        seen[m] = true;
                        stack.push(m);
                    }
                }
            }
        }
        n
    };
    Ok(LocalStructure {
        supers: count(true),
        subs: count(false),
    })
}
