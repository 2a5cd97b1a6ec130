//! Gradient winding numbers on small circles.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::domain::geometry::Point;
use crate::domain::scenario::ToleranceSet;
use crate::solver::{FieldError, SolutionField};

use super::{CriticalError, Tolerances};

pub const CIRCLE_SAMPLES: usize = 256;
const MAX_DOUBLINGS: usize = 8;
const CLEARANCE: f64 = 5.0;
const INTEGER_SLACK: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeOutcome {
    pub winding: f64,
    pub radius: f64,
}

/// Winding number of `∇u` along the circle of `radius` around `center`,
/// together with the smallest gradient magnitude met on the way.
pub fn winding_number(
    field: &SolutionField,
    center: Point,
    radius: f64,
) -> Result<(f64, f64), FieldError> {
    let mut total = 0.0;
    let mut min_norm = f64::INFINITY;
    let mut prev: Option<f64> = None;
    let mut first = 0.0;
    for k in 0..CIRCLE_SAMPLES {
        let a = TAU * k as f64 / CIRCLE_SAMPLES as f64;
        let p = Point::new(center.x + radius * a.cos(), center.y + radius * a.sin());
        let g = field.gradient(p)?;
        min_norm = min_norm.min(g[0].hypot(g[1]));
        let ang = g[1].atan2(g[0]);
        match prev {
            Some(q) => total += wrap_pi(ang - q),
            None => first = ang,
        }
        prev = Some(ang);
    }
    if let Some(q) = prev {
        total += wrap_pi(first - q);
    }
    Ok((total / TAU, min_norm))
}

fn wrap_pi(d: f64) -> f64 {
    let mut d = d % TAU;
    if d > PI {
        d -= TAU;
    } else if d < -PI {
        d += TAU;
    }
    d
}

/// Adaptive degree circle around `p`. The radius starts at two cell
/// diagonals (or eight times the cluster spread) and doubles until the
/// gradient stays clear of zero on the whole circle.
pub(crate) fn degree_at(
    field: &SolutionField,
    p: Point,
    spread: f64,
    others: &[Point],
    grad_tol: f64,
) -> Result<DegreeOutcome, CriticalError> {
    let (t, s) = field.domain().inverse(p);
    let mut rho = (2.0 * field.cell_diagonal(t, s.clamp(0.0, 1.0))).max(8.0 * spread);
    for _ in 0..=MAX_DOUBLINGS {
        if let Some(o) = others.iter().find(|o| o.dist(p) <= rho) {
            return Err(CriticalError::RadiusExhausted {
                location: p,
                other: Some(*o),
            });
        }
        let (w, min_norm) = winding_number(field, p, rho).map_err(|_| {
            CriticalError::RadiusExhausted {
                location: p,
                other: None,
            }
        })?;
        if min_norm > CLEARANCE * grad_tol {
            if (w - w.round()).abs() > INTEGER_SLACK {
                return Err(CriticalError::DegreeAmbiguous {
                    location: p,
                    winding: w,
                });
            }
            return Ok(DegreeOutcome {
                winding: w,
                radius: rho,
            });
        }
        rho *= 2.0;
    }
    Err(CriticalError::RadiusExhausted {
        location: p,
        other: None,
    })
}

/// Multiplicity `−winding` of an isolated critical point at `p`.
pub fn multiplicity(
    field: &SolutionField,
    p: Point,
    set: &ToleranceSet,
) -> Result<u32, CriticalError> {
    let tol = Tolerances::resolve(field, set);
    let d = degree_at(field, p, 0.0, &[], tol.grad_zero_tol)?;
    Ok((-d.winding.round()).max(0.0) as u32)
}
