//! Discretisation, sparse solve and interpolation of the boundary value
//! problem.

pub mod assemble;
pub mod convergence;
pub mod field;
pub mod linear;
pub mod spline;

use thiserror::Error;

pub use assemble::{assemble, sample_nodes, CsrMatrix, DiscreteSystem, Grid};
pub use convergence::{convergence_study, ConvergenceRow, ConvergenceTable};
pub use field::{evaluate, gradient, CenterFit, RefSample, SolutionField};
pub use linear::{relative_residual, solve};

use crate::domain::ScenarioSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("assembly failed at theta={theta:.6}, s={s:.6}: {what}")]
    Assembly { theta: f64, s: f64, what: String },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("point ({x}, {y}) is outside the domain (s = {s})")]
    OutsideDomain { x: f64, y: f64, s: f64 },
}

/// Assembles and solves a scenario on its configured grid.
pub fn solve_scenario(spec: &ScenarioSpec) -> Result<SolutionField, SolverError> {
    let system = assemble(spec)?;
    solve(&system, spec.tolerances.linear_residual_tol)
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::domain::scenario::{validate_scenario, GridSpec, RawScenario};
    use crate::domain::ScenarioSpec;

    /// Laplace scenario; `r_i = None` makes a disk.
    pub fn scenario(
        r_i: Option<&str>,
        r_e: &str,
        psi_i: Option<&str>,
        psi_e: &str,
        n_theta: usize,
        n_s: usize,
    ) -> ScenarioSpec {
        let grid = GridSpec { n_theta, n_s };
        let raw = match (r_i, psi_i) {
            (Some(ri), Some(pi)) => RawScenario::annulus(ri, r_e, pi, psi_e, grid),
            _ => RawScenario::disk(r_e, psi_e, grid),
        };
        validate_scenario(&raw).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::scenario;
    use super::*;
    use crate::domain::Point;

    #[test]
    fn log_annulus_matches_closed_form() {
        let spec = scenario(Some("1"), "exp(1)", Some("0"), "1", 256, 128);
        let f = solve_scenario(&spec).unwrap();
        assert!(f.residual() <= 1e-10);
        let g = f.grid();
        let mut worst = 0.0f64;
        for j in 0..=g.n_s {
            for i in 0..g.n_theta {
                worst = worst.max((f.node_value(i, j) - f.node_point(i, j).norm().ln()).abs());
            }
        }
        assert!(worst <= 1e-3, "{worst}");
        let v = f.value(Point::new(1.5, 0.0)).unwrap();
        assert!((v - 1.5f64.ln()).abs() < 1e-4, "{v}");
        let gr = f.gradient(Point::new(1.5, 0.0)).unwrap();
        assert!((gr[0] - 2.0 / 3.0).abs() < 1e-3 && gr[1].abs() < 1e-3, "{gr:?}");
        assert!(f.value(Point::new(3.0, 0.0)).is_err());
    }

    #[test]
    fn z_plus_inverse_matches_closed_form() {
        let psi = "(r+1/r)*cos(theta)";
        let spec = scenario(Some("0.5"), "2", Some(psi), psi, 256, 128);
        let f = solve_scenario(&spec).unwrap();
        let g = f.grid();
        let mut worst = 0.0f64;
        for j in 0..=g.n_s {
            for i in 0..g.n_theta {
                let p = f.node_point(i, j);
                let r = p.norm();
                worst = worst.max((f.node_value(i, j) - (r + 1.0 / r) * p.x / r).abs());
            }
        }
        assert!(worst <= 5e-3, "{worst}");
    }

    #[test]
    fn dirichlet_rows_exact() {
        let spec = scenario(Some("2+sin(3*theta)"), "6+sin(4*theta)", Some("log(r)"), "log(r)", 64, 32);
        let f = solve_scenario(&spec).unwrap();
        let g = f.grid();
        for i in 0..g.n_theta {
            for j in [0, g.n_s] {
                let exact = f.node_point(i, j).norm().ln();
                assert!((f.node_value(i, j) - exact).abs() <= 1e-13 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn maximum_principle_on_m_matrix() {
        let spec = scenario(Some("1"), "2", Some("sin(3*theta)"), "cos(theta)", 64, 32);
        let sys = assemble(&spec).unwrap();
        assert!(sys.is_m_matrix());
        let f = solve(&sys, 1e-10).unwrap();
        let g = f.grid();
        for j in 0..=g.n_s {
            for i in 0..g.n_theta {
                let v = f.node_value(i, j);
                assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn singular_system_is_an_error_not_nan() {
        let spec = scenario(Some("1"), "2", Some("0"), "1", 32, 16);
        let mut sys = assemble(&spec).unwrap();
        let r = sys.grid.idx(3, 5);
        let span = sys.matrix.row_ptr[r]..sys.matrix.row_ptr[r + 1];
        for v in &mut sys.matrix.values[span] {
            *v = 0.0;
        }
        match solve(&sys, 1e-10) {
            Err(SolverError::NoConvergence { .. }) | Err(SolverError::Factorization(_)) => {}
            Ok(_) => panic!("singular system produced a field"),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn disk_quadratic_is_exact() {
        let spec = scenario(None, "1", None, "r^2*cos(2*theta)", 64, 32);
        let f = solve_scenario(&spec).unwrap();
        let g = f.grid();
        let mut worst = 0.0f64;
        for j in 0..=g.n_s {
            for i in 0..g.n_theta {
                let p = f.node_point(i, j);
                worst = worst.max((f.node_value(i, j) - (p.x * p.x - p.y * p.y)).abs());
            }
        }
        assert!(worst < 1e-3, "{worst}");
        assert!(f.center().unwrap().value.abs() < 1e-12);
    }
}
