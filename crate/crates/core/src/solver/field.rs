//! Discrete solution with a C¹ bicubic Hermite interpolant in `(θ, s)`.

use std::io::Write;
use std::sync::{Arc, Mutex};

use faer::Mat;

use crate::domain::geometry::{wrap_angle, DomainSpec, Point};
use crate::domain::scenario::ScenarioSpec;

use super::assemble::{center_weights, Grid};
use super::spline::{clamped_slopes, end_slope, hermite, periodic_slopes, start_slope};
use super::FieldError;

/// Quadratic fit of the solution at the disk centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterFit {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

impl CenterFit {
    fn from_ring(ring: &[Point], values: &[f64], u0: f64) -> CenterFit {
        let w: Mat<f64> = center_weights(ring);
        let mut beta = [0.0; 5];
        for (k, b) in beta.iter_mut().enumerate() {
            *b = values
                .iter()
                .enumerate()
                .map(|(i, v)| w[(k, i)] * (v - u0))
                .sum();
        }
        CenterFit {
            value: u0,
            gradient: [beta[0], beta[1]],
            hessian: [[beta[2], beta[3]], [beta[3], beta[4]]],
        }
    }
}

/// Value and reference-coordinate derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSample {
    pub u: f64,
    pub u_theta: f64,
    pub u_s: f64,
}

/// Node values and slopes on a full `(n_s + 1) × n_theta` lattice.
#[derive(Debug, Clone)]
struct Hermite {
    grid: Grid,
    u: Vec<f64>,
    ut: Vec<f64>,
    us: Vec<f64>,
    uts: Vec<f64>,
}

impl Hermite {
    fn build(grid: Grid, domain: &DomainSpec, u: Vec<f64>, center: Option<&CenterFit>) -> Hermite {
        let (nt, ns) = (grid.n_theta, grid.n_s);
        let (ht, hs) = (grid.h_theta(), grid.h_s());
        let mut ut = vec![0.0; u.len()];
        let mut us = vec![0.0; u.len()];
        let mut uts = vec![0.0; u.len()];
        for j in 0..=ns {
            let row = &u[j * nt..(j + 1) * nt];
            ut[j * nt..(j + 1) * nt].copy_from_slice(&periodic_slopes(row, ht));
        }
        let mut col = vec![0.0; ns + 1];
        for i in 0..nt {
            for (j, c) in col.iter_mut().enumerate() {
                *c = u[j * nt + i];
            }
            let d0 = match center {
                Some(cf) => {
                    let t = grid.theta(i);
                    let r_e = domain.exterior.radius(t);
                    r_e * (cf.gradient[0] * t.cos() + cf.gradient[1] * t.sin())
                }
                None => start_slope(&col, hs),
            };
            let d = clamped_slopes(&col, hs, d0, end_slope(&col, hs));
            for (j, dj) in d.into_iter().enumerate() {
                us[j * nt + i] = dj;
            }
        }
        for j in 0..=ns {
            let row = &us[j * nt..(j + 1) * nt];
            uts[j * nt..(j + 1) * nt].copy_from_slice(&periodic_slopes(row, ht));
        }
        if let Some(cf) = center {
            let g = cf.gradient;
            for i in 0..nt {
                let t = grid.theta(i);
                let (sn, cs) = t.sin_cos();
                let gr = g[0] * cs + g[1] * sn;
                let gt = -g[0] * sn + g[1] * cs;
                ut[i] = 0.0;
                uts[i] = domain.exterior.radius_d(t) * gr + domain.exterior.radius(t) * gt;
            }
        }
        Hermite {
            grid,
            u,
            ut,
            us,
            uts,
        }
    }

    fn eval(&self, theta: f64, s: f64) -> RefSample {
        let g = &self.grid;
        let (ht, hs) = (g.h_theta(), g.h_s());
        let x = wrap_angle(theta) / ht;
        let i = (x.floor() as usize).min(g.n_theta - 1);
        let a = x - i as f64;
        let y = s.clamp(0.0, 1.0) / hs;
        let j = (y.floor() as usize).min(g.n_s - 1);
        let b = y - j as f64;
        let (va, da) = hermite(a);
        let (vb, db) = hermite(b);
        let (mut u, mut u_a, mut u_b) = (0.0, 0.0, 0.0);
        for p in 0..2 {
            for q in 0..2 {
                let k = g.flat(i + p, j + q);
                let (f, fa, fb, fab) = (
                    self.u[k],
                    ht * self.ut[k],
                    hs * self.us[k],
                    ht * hs * self.uts[k],
                );
                let (pa, pd) = (va[2 * p], va[2 * p + 1]);
                let (pda, pdd) = (da[2 * p], da[2 * p + 1]);
                let (qb, qd) = (vb[2 * q], vb[2 * q + 1]);
                let (qdb, qdd) = (db[2 * q], db[2 * q + 1]);
                u += f * pa * qb + fa * pd * qb + fb * pa * qd + fab * pd * qd;
                u_a += f * pda * qb + fa * pdd * qb + fb * pda * qd + fab * pdd * qd;
                u_b += f * pa * qdb + fa * pd * qdb + fb * pa * qdd + fab * pd * qdd;
            }
        }
        RefSample {
            u,
            u_theta: u_a / ht,
            u_s: u_b / hs,
        }
    }
}

/// Interpolated values on a uniformly refined `(θ, s)` lattice.
///
/// With `centered` the samples sit at refined cell centres
/// (`rows = n_s·factor`), otherwise at refined nodes (`rows = n_s·factor + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub factor: usize,
    pub centered: bool,
    pub cols: usize,
    pub rows: usize,
    pub h_theta: f64,
    pub h_s: f64,
    pub values: Vec<f64>,
}

impl Lattice {
    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.cols + (col % self.cols)]
    }

    pub fn theta(&self, col: usize) -> f64 {
        let off = if self.centered { 0.5 } else { 0.0 };
        (col as f64 + off) * self.h_theta
    }

    pub fn s(&self, row: usize) -> f64 {
        let off = if self.centered { 0.5 } else { 0.0 };
        (row as f64 + off) * self.h_s
    }
}

type LatticeCache = Arc<Mutex<Vec<Arc<Lattice>>>>;

/// Solved (or sampled) field with off-grid access to `u` and `∇u`.
#[derive(Debug, Clone)]
pub struct SolutionField {
    spec: ScenarioSpec,
    interp: Hermite,
    center: Option<CenterFit>,
    residual: f64,
    interp_error: f64,
    u_min: f64,
    u_max: f64,
    lattices: LatticeCache,
}

impl SolutionField {
    /// Builds a field from values in the linear-system ordering.
    pub fn from_unknowns(spec: &ScenarioSpec, x: &[f64], residual: f64) -> SolutionField {
        let grid = Grid::for_spec(spec);
        let mut full = vec![0.0; (grid.n_s + 1) * grid.n_theta];
        for j in 0..=grid.n_s {
            for i in 0..grid.n_theta {
                full[grid.flat(i, j)] = x[grid.idx(i, j)];
            }
        }
        SolutionField::from_full(spec, full, residual)
    }

    /// Samples a closed-form function at the grid nodes of `spec`.
    pub fn from_fn(spec: &ScenarioSpec, f: impl Fn(Point) -> f64) -> SolutionField {
        let grid = Grid::for_spec(spec);
        let mut full = vec![0.0; (grid.n_s + 1) * grid.n_theta];
        for j in 0..=grid.n_s {
            for i in 0..grid.n_theta {
                full[grid.flat(i, j)] = f(spec.domain.point(grid.theta(i), grid.s(j)));
            }
        }
        SolutionField::from_full(spec, full, 0.0)
    }

    fn from_full(spec: &ScenarioSpec, full: Vec<f64>, residual: f64) -> SolutionField {
        let grid = Grid::for_spec(spec);
        let center = grid.disk.then(|| {
            let ring: Vec<Point> = (0..grid.n_theta)
                .map(|i| spec.domain.point(grid.theta(i), grid.s(1)))
                .collect();
            let vals: Vec<f64> = (0..grid.n_theta).map(|i| full[grid.flat(i, 1)]).collect();
            CenterFit::from_ring(&ring, &vals, full[0])
        });
        let u_min = full.iter().copied().fold(f64::INFINITY, f64::min);
        let u_max = full.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let interp = Hermite::build(grid, &spec.domain, full, center.as_ref());
        let mut field = SolutionField {
            spec: spec.clone(),
            interp,
            center,
            residual,
            interp_error: 0.0,
            u_min,
            u_max,
            lattices: LatticeCache::default(),
        };
        field.interp_error = field.estimate_interpolation_error();
        field
    }

    /// Compares against the interpolant built from every other node and
    /// scales the discrepancy by the fourth-order ratio.
    fn estimate_interpolation_error(&self) -> f64 {
        let g = self.interp.grid;
        if !g.n_theta.is_multiple_of(2) || !g.n_s.is_multiple_of(2) || g.n_s < 8 {
            return 0.0;
        }
        let coarse = Grid {
            n_theta: g.n_theta / 2,
            n_s: g.n_s / 2,
            disk: g.disk,
        };
        let mut u = vec![0.0; (coarse.n_s + 1) * coarse.n_theta];
        for j in 0..=coarse.n_s {
            for i in 0..coarse.n_theta {
                u[coarse.flat(i, j)] = self.interp.u[g.flat(2 * i, 2 * j)];
            }
        }
        let h = Hermite::build(coarse, &self.spec.domain, u, self.center.as_ref());
        let mut worst = 0.0f64;
        for j in 0..=g.n_s {
            for i in 0..g.n_theta {
                if i % 2 == 0 && j % 2 == 0 {
                    continue;
                }
                let v = h.eval(g.theta(i), g.s(j)).u;
                worst = worst.max((v - self.interp.u[g.flat(i, j)]).abs());
            }
        }
        worst / 16.0
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.spec.domain
    }

    pub fn grid(&self) -> Grid {
        self.interp.grid
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn center(&self) -> Option<&CenterFit> {
        self.center.as_ref()
    }

    pub fn min(&self) -> f64 {
        self.u_min
    }

    pub fn max(&self) -> f64 {
        self.u_max
    }

    pub fn range(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn interpolation_error(&self) -> f64 {
        self.interp_error
    }

    pub fn node_value(&self, i: usize, j: usize) -> f64 {
        self.interp.u[self.interp.grid.flat(i, j)]
    }

    pub fn node_point(&self, i: usize, j: usize) -> Point {
        let g = self.interp.grid;
        self.spec.domain.point(g.theta(i), g.s(j))
    }

    pub fn eval_ref(&self, theta: f64, s: f64) -> RefSample {
        self.interp.eval(theta, s)
    }

    pub fn value_ref(&self, theta: f64, s: f64) -> f64 {
        self.interp.eval(theta, s).u
    }

    /// Cartesian gradient at reference coordinates.
    pub fn gradient_ref(&self, theta: f64, s: f64) -> [f64; 2] {
        if let Some(c) = &self.center {
            if s < 1e-9 {
                return c.gradient;
            }
        }
        let r = self.interp.eval(theta, s);
        let d = self.spec.domain.derivatives(theta, s);
        match d.jacobian.inverse() {
            // u_{x_i} = Σ_k u_{ξ_k} G_ki
            Some(g) => [
                r.u_theta * g[0][0] + r.u_s * g[1][0],
                r.u_theta * g[0][1] + r.u_s * g[1][1],
            ],
            None => [f64::NAN, f64::NAN],
        }
    }

    /// Reference coordinates of `p`, or `OutsideDomain`.
    pub fn locate(&self, p: Point) -> Result<(f64, f64), FieldError> {
        let (theta, s) = self.spec.domain.inverse(p);
        if !(0.0..=1.0).contains(&s) || !s.is_finite() {
            return Err(FieldError::OutsideDomain { x: p.x, y: p.y, s });
        }
        Ok((theta, s))
    }

    pub fn value(&self, p: Point) -> Result<f64, FieldError> {
        if let Some(c) = &self.center {
            if p.norm() == 0.0 {
                return Ok(c.value);
            }
        }
        let (t, s) = self.locate(p)?;
        Ok(self.value_ref(t, s))
    }

    pub fn gradient(&self, p: Point) -> Result<[f64; 2], FieldError> {
        if let Some(c) = &self.center {
            if p.norm() == 0.0 {
                return Ok(c.gradient);
            }
        }
        let (t, s) = self.locate(p)?;
        Ok(self.gradient_ref(t, s))
    }

    /// Hessian by central differences of the interpolated gradient.
    pub fn hessian(&self, p: Point) -> Result<[[f64; 2]; 2], FieldError> {
        let (t, s) = self.locate(p)?;
        let h = 1e-3 * self.cell_diagonal(t, s);
        let gxp = self.gradient(Point::new(p.x + h, p.y))?;
        let gxm = self.gradient(Point::new(p.x - h, p.y))?;
        let gyp = self.gradient(Point::new(p.x, p.y + h))?;
        let gym = self.gradient(Point::new(p.x, p.y - h))?;
        let hxx = (gxp[0] - gxm[0]) / (2.0 * h);
        let hyy = (gyp[1] - gym[1]) / (2.0 * h);
        let hxy = 0.25 * ((gxp[1] - gxm[1]) + (gyp[0] - gym[0])) / h;
        Ok([[hxx, hxy], [hxy, hyy]])
    }

    /// Physical diagonal of the grid cell at `(θ, s)`.
    pub fn cell_diagonal(&self, theta: f64, s: f64) -> f64 {
        let g = self.interp.grid;
        let j = self.spec.domain.derivatives(theta, s).jacobian.0;
        let lt = j[0][0].hypot(j[1][0]) * g.h_theta();
        let ls = j[0][1].hypot(j[1][1]) * g.h_s();
        lt.hypot(ls)
    }

    /// Largest cell diagonal over the grid nodes.
    pub fn max_cell_diagonal(&self) -> f64 {
        let g = self.interp.grid;
        let mut worst = 0.0f64;
        for j in 0..=g.n_s {
            for i in 0..g.n_theta {
                worst = worst.max(self.cell_diagonal(g.theta(i), g.s(j)));
            }
        }
        worst
    }

    /// Interpolated samples on a refined lattice, computed once per
    /// `(factor, centered)` and shared afterwards.
    pub fn lattice(&self, factor: usize, centered: bool) -> Arc<Lattice> {
        let mut cache = self.lattices.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(l) = cache
            .iter()
            .find(|l| l.factor == factor && l.centered == centered)
        {
            return Arc::clone(l);
        }
        let g = self.interp.grid;
        let cols = g.n_theta * factor;
        let rows = g.n_s * factor + usize::from(!centered);
        let mut lat = Lattice {
            factor,
            centered,
            cols,
            rows,
            h_theta: g.h_theta() / factor as f64,
            h_s: g.h_s() / factor as f64,
            values: Vec::with_capacity(cols * rows),
        };
        for row in 0..rows {
            let s = lat.s(row);
            for col in 0..cols {
                let v = self.value_ref(lat.theta(col), s);
                lat.values.push(v);
            }
        }
        let lat = Arc::new(lat);
        cache.push(Arc::clone(&lat));
        lat
    }

    /// Writes `theta,s,x,y,u` rows for every grid node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let g = self.interp.grid;
        writeln!(out, "theta,s,x,y,u")?;
        for j in 0..=g.n_s {
            for i in 0..g.n_theta {
                if g.disk && j == 0 && i > 0 {
                    continue;
                }
                let p = self.node_point(i, j);
                writeln!(
                    out,
                    "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                    g.theta(i),
                    g.s(j),
                    p.x,
                    p.y,
                    self.node_value(i, j)
                )?;
            }
        }
        Ok(())
    }
}

/// `u(p)` via the interpolant.
pub fn evaluate(field: &SolutionField, p: Point) -> Result<f64, FieldError> {
    field.value(p)
}

/// `∇u(p)` via the interpolant.
pub fn gradient(field: &SolutionField, p: Point) -> Result<[f64; 2], FieldError> {
    field.gradient(p)
}
