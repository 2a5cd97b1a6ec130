//! Sparse direct solve with residual-driven iterative refinement.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use super::assemble::DiscreteSystem;
use super::field::SolutionField;
use super::SolverError;

const MAX_REFINEMENTS: usize = 4;

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative residual `‖Ax − b‖₂ / ‖b‖₂` (absolute when `b = 0`).
pub fn relative_residual(system: &DiscreteSystem, x: &[f64]) -> f64 {
    let ax = system.matrix.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(&system.rhs).map(|(a, b)| b - a).collect();
    let nb = norm2(&system.rhs);
    let nr = norm2(&r);
    if nb > 0.0 {
        nr / nb
    } else {
        nr
    }
}

/// Solves the system to relative residual `tol` and wraps the result as a
/// field.
pub fn solve(system: &DiscreteSystem, tol: f64) -> Result<SolutionField, SolverError> {
    let m = &system.matrix;
    let n = m.n;
    let mut triplets = Vec::with_capacity(m.values.len());
    for r in 0..n {
        for (c, v) in m.row(r) {
            triplets.push(Triplet::new(r, c, v));
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;

    let solve_with = |rhs: &[f64]| -> Vec<f64> {
        let b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let x = lu.solve(&b);
        (0..n).map(|i| x[(i, 0)]).collect()
    };

    let exact_dirichlet = |x: &mut [f64]| {
        for (r, fixed) in system.dirichlet.iter().enumerate() {
            if *fixed {
                x[r] = system.rhs[r];
            }
        }
    };
    let mut x = solve_with(&system.rhs);
    exact_dirichlet(&mut x);
    let mut res = relative_residual(system, &x);
    let mut iterations = 1;
    // refine while the residual keeps dropping, even below `tol`
    while iterations <= MAX_REFINEMENTS && res.is_finite() && res > 0.0 {
        let ax = m.mul_vec(&x);
        let r: Vec<f64> = system.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = solve_with(&r);
        let mut next = x.clone();
        for (xi, di) in next.iter_mut().zip(&dx) {
            *xi += di;
        }
        exact_dirichlet(&mut next);
        let next_res = relative_residual(system, &next);
        iterations += 1;
        if !(next_res < 0.5 * res) {
            if next_res < res {
                x = next;
                res = next_res;
            }
            break;
        }
        x = next;
        res = next_res;
    }
    if !(res <= tol) || x.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NoConvergence {
            iterations,
            residual: res,
        });
    }
    Ok(SolutionField::from_unknowns(&system.spec, &x, res))
}
