//! Finite-difference discretisation on the boundary-fitted `(θ, s)` grid.

use std::f64::consts::TAU;

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::domain::geometry::{DomainSpec, Point};
use crate::domain::scenario::{Coefficients, ScenarioSpec};

use super::SolverError;

/// Structured grid: `n_theta` periodic angles and `n_s + 1` rows in `s`.
/// On a disk the whole `s = 0` row is a single centre node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub n_theta: usize,
    pub n_s: usize,
    pub disk: bool,
}

impl Grid {
    pub fn for_spec(spec: &ScenarioSpec) -> Grid {
        Grid {
            n_theta: spec.grid.n_theta,
            n_s: spec.grid.n_s,
            disk: spec.domain.is_disk(),
        }
    }

    pub fn h_theta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn h_s(&self) -> f64 {
        1.0 / self.n_s as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.h_theta()
    }

    pub fn s(&self, j: usize) -> f64 {
        j as f64 * self.h_s()
    }

    pub fn n_unknowns(&self) -> usize {
        if self.disk {
            1 + self.n_s * self.n_theta
        } else {
            (self.n_s + 1) * self.n_theta
        }
    }

    /// Unknown index of node `(i, j)`; `i` is taken modulo `n_theta`.
    pub fn idx(&self, i: usize, j: usize) -> usize {
        let i = i % self.n_theta;
        if self.disk {
            if j == 0 {
                0
            } else {
                1 + (j - 1) * self.n_theta + i
            }
        } else {
            j * self.n_theta + i
        }
    }

    /// Index into full `(n_s + 1) × n_theta` node arrays.
    pub fn flat(&self, i: usize, j: usize) -> usize {
        j * self.n_theta + (i % self.n_theta)
    }

    pub fn is_dirichlet_row(&self, j: usize) -> bool {
        j == self.n_s || (!self.disk && j == 0)
    }
}

/// Square sparse matrix in compressed row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> CsrMatrix {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).map(|(_, v)| v).sum()
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub grid: Grid,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dirichlet: Vec<bool>,
    pub spec: ScenarioSpec,
}

impl DiscreteSystem {
    /// Applies the matrix to samples of `f` at the grid nodes.
    pub fn apply_to(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        let x = sample_nodes(&self.spec.domain, &self.grid, f);
        self.matrix.mul_vec(&x)
    }

    /// Interior rows have negative diagonal and non-negative off-diagonal
    /// entries, up to rounding relative to the diagonal.
    pub fn is_m_matrix(&self) -> bool {
        (0..self.matrix.n).filter(|&r| !self.dirichlet[r]).all(|r| {
            let diag = self
                .matrix
                .row(r)
                .find(|&(c, _)| c == r)
                .map_or(0.0, |e| e.1);
            let noise = 1e-12 * diag.abs();
            diag < 0.0 && self.matrix.row(r).all(|(c, v)| c == r || v >= -noise)
        })
    }
}

/// Node samples in unknown ordering.
pub fn sample_nodes(domain: &DomainSpec, grid: &Grid, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let mut x = vec![0.0; grid.n_unknowns()];
    for j in 0..=grid.n_s {
        for i in 0..grid.n_theta {
            if grid.disk && j == 0 && i > 0 {
                continue;
            }
            x[grid.idx(i, j)] = f(domain.point(grid.theta(i), grid.s(j)));
        }
    }
    x
}

/// Second derivatives of the reference coordinates `ξ = (θ, s)` with respect
/// to `x`, together with `G = ∂ξ/∂x`.
pub(crate) struct Metric {
    pub g: [[f64; 2]; 2],
    pub hess: [[[f64; 2]; 2]; 2],
}

pub(crate) fn metric(domain: &DomainSpec, theta: f64, s: f64) -> Option<(Point, Metric)> {
    let d = domain.derivatives(theta, s);
    let g = d.jacobian.inverse()?;
    // ∂²ξ_k/∂x_i∂x_j = −Σ_m G_km Σ_ab X_m,ab G_ai G_bj
    let mut hess = [[[0.0; 2]; 2]; 2];
    let xab = |m: usize, a: usize, b: usize| match (a, b) {
        (0, 0) => d.second[m][0],
        (1, 1) => d.second[m][2],
        _ => d.second[m][1],
    };
    for (k, hk) in hess.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for m in 0..2 {
                    let mut inner = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            inner += xab(m, a, b) * g[a][i] * g[b][j];
                        }
                    }
                    acc += g[k][m] * inner;
                }
                hk[i][j] = -acc;
            }
        }
    }
    Some((d.point, Metric { g, hess }))
}

/// Operator coefficients in reference coordinates:
/// `A00 u_θθ + 2 A01 u_θs + A11 u_ss + B0 u_θ + B1 u_s + c u`.
pub(crate) struct RefOperator {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub c: f64,
}

pub(crate) fn transform(k: &Coefficients, m: &Metric) -> RefOperator {
    let a = [[k.a11, k.a12], [k.a12, k.a22]];
    let bx = [k.b1, k.b2];
    let mut out = RefOperator {
        a: [[0.0; 2]; 2],
        b: [0.0; 2],
        c: k.c,
    };
    for p in 0..2 {
        for q in 0..2 {
            let mut acc = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    acc += a[i][j] * m.g[p][i] * m.g[q][j];
                }
            }
            out.a[p][q] = acc;
        }
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += a[i][j] * m.hess[p][i][j];
            }
            acc += bx[i] * m.g[p][i];
        }
        out.b[p] = acc;
    }
    out
}

/// Least-squares weights `W = (PᵀP)⁻¹Pᵀ` fitting `[x, y, x²/2, xy, y²/2]`
/// to ring samples relative to the centre value.
pub(crate) fn center_weights(ring: &[Point]) -> Mat<f64> {
    let n = ring.len();
    let p = Mat::<f64>::from_fn(n, 5, |r, c| {
        let Point { x, y } = ring[r];
        match c {
            0 => x,
            1 => y,
            2 => 0.5 * x * x,
            3 => x * y,
            _ => 0.5 * y * y,
        }
    });
    let ptp = p.transpose() * &p;
    ptp.partial_piv_lu().solve(p.transpose().to_owned())
}

/// Builds the sparse system for `L u = 0` with Dirichlet rows on the
/// boundary curves.
pub fn assemble(spec: &ScenarioSpec) -> Result<DiscreteSystem, SolverError> {
    let grid = Grid::for_spec(spec);
    let domain = &spec.domain;
    let n = grid.n_unknowns();
    let (ht, hs) = (grid.h_theta(), grid.h_s());
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut rhs = vec![0.0; n];
    let mut dirichlet = vec![false; n];

    for j in 0..=grid.n_s {
        for i in 0..grid.n_theta {
            let theta = grid.theta(i);
            let s = grid.s(j);
            if grid.disk && j == 0 {
                if i == 0 {
                    rows[0] = center_row(spec, &grid)?;
                }
                continue;
            }
            let r = grid.idx(i, j);
            if grid.is_dirichlet_row(j) {
                let v = spec.boundary_value(j == 0, theta);
                if !v.is_finite() {
                    return Err(SolverError::Assembly {
                        theta,
                        s,
                        what: "boundary value".into(),
                    });
                }
                rows[r] = vec![(r, 1.0)];
                rhs[r] = v;
                dirichlet[r] = true;
                continue;
            }
            let (p, m) = metric(domain, theta, s).ok_or(SolverError::Assembly {
                theta,
                s,
                what: "singular map".into(),
            })?;
            let op = transform(&spec.operator.at(p), &m);
            let vals = [op.a[0][0], op.a[0][1], op.a[1][1], op.b[0], op.b[1], op.c];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::Assembly {
                    theta,
                    s,
                    what: "non-finite metric term".into(),
                });
            }
            let tt = op.a[0][0] / (ht * ht);
            let ss = op.a[1][1] / (hs * hs);
            let cross = 2.0 * op.a[0][1] / (4.0 * ht * hs);
            let bt = op.b[0] / (2.0 * ht);
            let bs = op.b[1] / (2.0 * hs);
            let (ip, im) = (i + 1, i + grid.n_theta - 1);
            rows[r] = vec![
                (r, -2.0 * tt - 2.0 * ss + op.c),
                (grid.idx(ip, j), tt + bt),
                (grid.idx(im, j), tt - bt),
                (grid.idx(i, j + 1), ss + bs),
                (grid.idx(i, j - 1), ss - bs),
                (grid.idx(ip, j + 1), cross),
                (grid.idx(ip, j - 1), -cross),
                (grid.idx(im, j + 1), -cross),
                (grid.idx(im, j - 1), cross),
            ];
        }
    }

    Ok(DiscreteSystem {
        grid,
        matrix: CsrMatrix::from_rows(rows),
        rhs,
        dirichlet,
        spec: spec.clone(),
    })
}

fn center_row(spec: &ScenarioSpec, grid: &Grid) -> Result<Vec<(usize, f64)>, SolverError> {
    let s1 = grid.s(1);
    let ring: Vec<Point> = (0..grid.n_theta)
        .map(|i| spec.domain.point(grid.theta(i), s1))
        .collect();
    let w = center_weights(&ring);
    let k = spec.operator.at(Point::new(0.0, 0.0));
    let mut row = Vec::with_capacity(grid.n_theta + 1);
    let mut total = 0.0;
    for (i, _) in ring.iter().enumerate() {
        let wi = k.b1 * w[(0, i)]
            + k.b2 * w[(1, i)]
            + k.a11 * w[(2, i)]
            + 2.0 * k.a12 * w[(3, i)]
            + k.a22 * w[(4, i)];
        if !wi.is_finite() {
            return Err(SolverError::Assembly {
                theta: grid.theta(i),
                s: 0.0,
                what: "centre stencil".into(),
            });
        }
        total += wi;
        row.push((grid.idx(i, 1), wi));
    }
    row.push((0, -total + k.c));
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::test_support::scenario;

    fn interior_max(sys: &DiscreteSystem, v: &[f64]) -> f64 {
        (0..v.len())
            .filter(|&r| !sys.dirichlet[r])
            .map(|r| v[r].abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn log_r_residual_is_second_order() {
        let mut errs = Vec::new();
        for (nt, ns) in [(64, 32), (128, 64)] {
            let spec = scenario(Some("1"), "2", Some("0"), "log(2)", nt, ns);
            let sys = assemble(&spec).unwrap();
            let res = sys.apply_to(|p| p.norm().ln());
            errs.push(interior_max(&sys, &res));
        }
        let ratio = errs[0] / errs[1];
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}, errs {errs:?}");
    }

    #[test]
    fn row_sums_vanish_without_c() {
        let spec = scenario(Some("2+sin(3*theta)"), "6+sin(4*theta)", Some("0"), "1", 64, 32);
        let sys = assemble(&spec).unwrap();
        let res = sys.apply_to(|_| 1.0);
        assert!(interior_max(&sys, &res) < 1e-9);
        for r in 0..sys.matrix.n {
            assert!(sys.matrix.row_nnz(r) <= 9 || r == 0 && sys.grid.disk);
            if sys.dirichlet[r] {
                assert_eq!(sys.matrix.row(r).collect::<Vec<_>>(), vec![(r, 1.0)]);
            }
        }
    }

    #[test]
    fn row_sums_equal_c() {
        let mut spec = scenario(Some("1"), "2", Some("0"), "1", 64, 32);
        spec.operator.c = Some(crate::domain::ScalarExpr::constant(-1.0));
        let sys = assemble(&spec).unwrap();
        let res = sys.apply_to(|_| 1.0);
        for r in 0..res.len() {
            if !sys.dirichlet[r] {
                assert!((res[r] + 1.0).abs() < 1e-9, "row {r}: {}", res[r]);
            }
        }
    }

    #[test]
    fn disk_center_row_is_consistent() {
        let spec = scenario(None, "1", None, "x^2-y^2", 64, 32);
        let sys = assemble(&spec).unwrap();
        // quadratic harmonic: the centre fit is exact
        let res = sys.apply_to(|p| p.x * p.x - p.y * p.y + 3.0 * p.x);
        assert!(res[0].abs() < 1e-8, "{}", res[0]);
        let res = sys.apply_to(|_| 1.0);
        assert!(res[0].abs() < 1e-8);
    }

    #[test]
    fn circular_laplace_is_m_matrix() {
        let spec = scenario(Some("1"), "2", Some("0"), "1", 64, 32);
        assert!(assemble(&spec).unwrap().is_m_matrix());
    }
}
