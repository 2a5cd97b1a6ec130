//! Polar-graph boundary curves and the radial blend map between them.

use std::f64::consts::TAU;

use serde::Serialize;
use thiserror::Error;

use super::expr::{Env, ScalarExpr, Var};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Polar angle in `[0, 2π)`.
    pub fn angle(self) -> f64 {
        wrap_angle(self.y.atan2(self.x))
    }
}

/// Maps any angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Columns are `∂x/∂θ` and `∂x/∂s`: `[[x_θ, x_s], [y_θ, y_s]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian(pub [[f64; 2]; 2]);

impl Jacobian {
    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Option<[[f64; 2]; 2]> {
        let d = self.det();
        if d.abs() < SINGULAR_DET || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        Some([
            [m[1][1] / d, -m[0][1] / d],
            [-m[1][0] / d, m[0][0] / d],
        ])
    }
}

pub const SINGULAR_DET: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("singular map at theta={theta}, s={s} (|det J| = {det:e})")]
    SingularMap { theta: f64, s: f64, det: f64 },
}

/// A closed curve `r = r(θ)` around the origin.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    radius: ScalarExpr,
    d_radius: ScalarExpr,
    dd_radius: ScalarExpr,
    pub samples: usize,
}

impl BoundaryCurve {
    pub fn new(radius: ScalarExpr, samples: usize) -> BoundaryCurve {
        let d_radius = radius.derivative(Var::Theta);
        let dd_radius = d_radius.derivative(Var::Theta);
        BoundaryCurve {
            radius,
            d_radius,
            dd_radius,
            samples,
        }
    }

    pub fn circle(r: f64) -> BoundaryCurve {
        BoundaryCurve::new(ScalarExpr::constant(r), 4096)
    }

    pub fn expr(&self) -> &ScalarExpr {
        &self.radius
    }

    fn at(e: &ScalarExpr, theta: f64) -> f64 {
        let env = Env {
            x: 0.0,
            y: 0.0,
            r: 0.0,
            theta,
        };
        e.eval(&env).unwrap_or(f64::NAN)
    }

    /// `r(θ)`; NaN where the expression is undefined.
    pub fn radius(&self, theta: f64) -> f64 {
        Self::at(&self.radius, theta)
    }

    pub fn radius_d(&self, theta: f64) -> f64 {
        Self::at(&self.d_radius, theta)
    }

    pub fn radius_dd(&self, theta: f64) -> f64 {
        Self::at(&self.dd_radius, theta)
    }

    pub fn point(&self, theta: f64) -> Point {
        let r = self.radius(theta);
        Point::new(r * theta.cos(), r * theta.sin())
    }
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub interior: Option<BoundaryCurve>,
    pub exterior: BoundaryCurve,
}

/// Radii and their θ-derivatives of both curves at one angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialFrame {
    pub r_i: f64,
    pub r_i_d: f64,
    pub r_i_dd: f64,
    pub r_e: f64,
    pub r_e_d: f64,
    pub r_e_dd: f64,
}

/// Point, first and second derivatives of the map at one reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDerivatives {
    pub point: Point,
    pub jacobian: Jacobian,
    /// `[x_θθ, x_θs, x_ss]` for the x and y components.
    pub second: [[f64; 3]; 2],
}

impl DomainSpec {
    pub fn is_disk(&self) -> bool {
        self.interior.is_none()
    }

    pub fn frame(&self, theta: f64) -> RadialFrame {
        let (r_i, r_i_d, r_i_dd) = match &self.interior {
            Some(c) => (c.radius(theta), c.radius_d(theta), c.radius_dd(theta)),
            None => (0.0, 0.0, 0.0),
        };
        RadialFrame {
            r_i,
            r_i_d,
            r_i_dd,
            r_e: self.exterior.radius(theta),
            r_e_d: self.exterior.radius_d(theta),
            r_e_dd: self.exterior.radius_dd(theta),
        }
    }

    pub fn point(&self, theta: f64, s: f64) -> Point {
        let f = self.frame(theta);
        let rho = (1.0 - s) * f.r_i + s * f.r_e;
        Point::new(rho * theta.cos(), rho * theta.sin())
    }

    /// Local radial gap `r_E(θ) − r_I(θ)`.
    pub fn gap(&self, theta: f64) -> f64 {
        let f = self.frame(theta);
        f.r_e - f.r_i
    }

    pub fn derivatives_with(&self, theta: f64, s: f64, f: &RadialFrame) -> MapDerivatives {
        let (sn, cs) = theta.sin_cos();
        let rho = (1.0 - s) * f.r_i + s * f.r_e;
        let rho_t = (1.0 - s) * f.r_i_d + s * f.r_e_d;
        let rho_tt = (1.0 - s) * f.r_i_dd + s * f.r_e_dd;
        let rho_s = f.r_e - f.r_i;
        let rho_ts = f.r_e_d - f.r_i_d;
        // e_r = (cs, sn), e_θ = (-sn, cs)
        let er = [cs, sn];
        let et = [-sn, cs];
        let mut jac = [[0.0; 2]; 2];
        let mut second = [[0.0; 3]; 2];
        for k in 0..2 {
            jac[k][0] = rho_t * er[k] + rho * et[k];
            jac[k][1] = rho_s * er[k];
            second[k][0] = (rho_tt - rho) * er[k] + 2.0 * rho_t * et[k];
            second[k][1] = rho_ts * er[k] + rho_s * et[k];
            second[k][2] = 0.0;
        }
        MapDerivatives {
            point: Point::new(rho * cs, rho * sn),
            jacobian: Jacobian(jac),
            second,
        }
    }

    pub fn derivatives(&self, theta: f64, s: f64) -> MapDerivatives {
        let f = self.frame(theta);
        self.derivatives_with(theta, s, &f)
    }

    /// Reference coordinates `(θ, s)` of a physical point; `s` may fall
    /// outside `[0, 1]` for points outside the domain.
    pub fn inverse(&self, p: Point) -> (f64, f64) {
        let theta = p.angle();
        let f = self.frame(theta);
        (theta, (p.norm() - f.r_i) / (f.r_e - f.r_i))
    }

    /// Whether `p` lies in the closed domain.
    pub fn contains(&self, p: Point) -> bool {
        let (_, s) = self.inverse(p);
        (0.0..=1.0).contains(&s)
    }

    /// Euclidean diameter estimate: twice the largest exterior radius.
    pub fn diameter(&self) -> f64 {
        let n = self.exterior.samples.max(256);
        (0..n)
            .map(|k| self.exterior.radius(TAU * k as f64 / n as f64))
            .fold(0.0, f64::max)
            * 2.0
    }
}

/// Physical point and Jacobian `∂(x,y)/∂(θ,s)` of the radial blend map.
pub fn map_reference(
    spec: &DomainSpec,
    theta: f64,
    s: f64,
) -> Result<(Point, Jacobian), GeometryError> {
    let d = spec.derivatives(theta, s);
    let det = d.jacobian.det();
    if det.abs() < SINGULAR_DET || !det.is_finite() {
        return Err(GeometryError::SingularMap { theta, s, det });
    }
    Ok((d.point, d.jacobian))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::expr::parse_expression;
    use std::f64::consts::PI;

    fn curve(src: &str) -> BoundaryCurve {
        BoundaryCurve::new(parse_expression(src).unwrap(), 4096)
    }

    #[test]
    fn circular_annulus_midpoint() {
        let d = DomainSpec {
            interior: Some(BoundaryCurve::circle(1.0)),
            exterior: BoundaryCurve::circle(2.0),
        };
        let (p, _) = map_reference(&d, 0.0, 0.5).unwrap();
        assert!((p.x - 1.5).abs() < 1e-15 && p.y.abs() < 1e-15);
    }

    #[test]
    fn wavy_annulus_inner_point() {
        let d = DomainSpec {
            interior: Some(curve("2+sin(3*theta)")),
            exterior: curve("6+sin(4*theta)"),
        };
        let (p, _) = map_reference(&d, PI / 2.0, 0.0).unwrap();
        assert!(p.x.abs() < 1e-14 && (p.y - 1.0).abs() < 1e-14);
    }

    #[test]
    fn disk_center_is_singular() {
        let d = DomainSpec {
            interior: None,
            exterior: BoundaryCurve::circle(1.0),
        };
        assert!(d.point(1.234, 0.0).norm() < 1e-15);
        assert!(matches!(
            map_reference(&d, 1.234, 0.0),
            Err(GeometryError::SingularMap { .. })
        ));
        assert!(map_reference(&d, 1.234, 0.1).is_ok());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let d = DomainSpec {
            interior: Some(curve("2+sin(3*theta)")),
            exterior: curve("6+sin(4*theta)"),
        };
        let (t, s, h) = (0.7, 0.3, 1e-6);
        let md = d.derivatives(t, s);
        let dt = |t: f64, s: f64| {
            let a = d.point(t + h, s);
            let b = d.point(t - h, s);
            [(a.x - b.x) / (2.0 * h), (a.y - b.y) / (2.0 * h)]
        };
        let ds = |t: f64, s: f64| {
            let a = d.point(t, s + h);
            let b = d.point(t, s - h);
            [(a.x - b.x) / (2.0 * h), (a.y - b.y) / (2.0 * h)]
        };
        let xt = dt(t, s);
        let xs = ds(t, s);
        for k in 0..2 {
            assert!((md.jacobian.0[k][0] - xt[k]).abs() < 1e-7);
            assert!((md.jacobian.0[k][1] - xs[k]).abs() < 1e-7);
        }
        let h2 = 1e-4;
        let xtt_p = dt(t + h2, s);
        let xtt_m = dt(t - h2, s);
        let xts_p = dt(t, s + h2);
        let xts_m = dt(t, s - h2);
        for k in 0..2 {
            assert!((md.second[k][0] - (xtt_p[k] - xtt_m[k]) / (2.0 * h2)).abs() < 1e-5);
            assert!((md.second[k][1] - (xts_p[k] - xts_m[k]) / (2.0 * h2)).abs() < 1e-5);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let d = DomainSpec {
            interior: Some(curve("2+sin(3*theta)")),
            exterior: curve("6+sin(4*theta)"),
        };
        for k in 0..50 {
            let t = 0.125 * k as f64;
            let s = (k as f64 * 0.37).fract();
            let (t2, s2) = d.inverse(d.point(t, s));
            assert!((wrap_angle(t) - t2).abs() < 1e-12);
            assert!((s - s2).abs() < 1e-12);
        }
    }
}
