//! Grid-refinement study against a closed form or the finest grid.

use serde::Serialize;

use crate::domain::scenario::{GridSpec, ScenarioSpec};

use super::{solve_scenario, SolutionField, SolverError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub grid: GridSpec,
    /// Max node error.
    pub error: f64,
    /// `log2(e_prev / e)`; absent for the first row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    /// Whether errors are measured against the scenario's closed form.
    pub against_reference: bool,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn final_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.error)
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }
}

fn node_error(field: &SolutionField, exact: impl Fn(usize, usize) -> f64) -> f64 {
    let g = field.grid();
    let mut worst = 0.0f64;
    for j in 0..=g.n_s {
        for i in 0..g.n_theta {
            worst = worst.max((field.node_value(i, j) - exact(i, j)).abs());
        }
    }
    worst
}

/// Solves on each grid and reports L∞ node errors with observed orders.
/// Without a closed form the last grid serves as the reference, so its own
/// row is omitted.
pub fn convergence_study(
    spec: &ScenarioSpec,
    grids: &[GridSpec],
) -> Result<ConvergenceTable, SolverError> {
    let fields = grids
        .iter()
        .map(|g| solve_scenario(&spec.with_grid(*g)))
        .collect::<Result<Vec<_>, _>>()?;
    let against_reference = spec.reference.is_some();
    let mut errors = Vec::new();
    if against_reference {
        for f in &fields {
            errors.push(node_error(f, |i, j| {
                spec.reference_at(f.node_point(i, j)).unwrap_or(f64::NAN)
            }));
        }
    } else if let Some((finest, rest)) = fields.split_last() {
        for f in rest {
            errors.push(node_error(f, |i, j| {
                let g = f.grid();
                finest.value_ref(g.theta(i), g.s(j))
            }));
        }
    }
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (k, e) in errors.iter().enumerate() {
        let order = (k > 0).then(|| {
            let prev = errors[k - 1];
            if prev == 0.0 && *e == 0.0 {
                f64::NAN
            } else {
                (prev / e).log2()
            }
        });
        rows.push(ConvergenceRow {
            grid: grids[k],
            error: *e,
            order,
        });
    }
    Ok(ConvergenceTable {
        against_reference,
        rows,
    })
}
