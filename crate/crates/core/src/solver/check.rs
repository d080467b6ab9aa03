use serde::{Deserialize, Serialize};

use super::{LpInstance, LpSolution};

/// Primal/dual residuals of a claimed optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Largest constraint or bound violation.
    pub primal: f64,
    /// Largest sign violation of reduced costs and `<=` row duals.
    pub dual: f64,
    /// `|primal obj - dual obj| / (1 + |primal obj|)`.
    pub gap: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

/// Residual report for `solution` against `instance`.
///
/// Duals follow the sign convention of [`LpSolution`]: reduced costs are
/// `d = c - A_eq^T y_eq - A_le^T y_le`, and `y_le <= 0` at an optimum of a
/// minimisation.
pub fn check_optimality(instance: &LpInstance, solution: &LpSolution) -> ResidualReport {
    let x = &solution.x;
    let n = instance.num_vars();
    let mut primal = 0.0_f64;
    for (act, rhs) in instance.eq.activity(x).iter().zip(&instance.eq.rhs) {
        primal = primal.max((act - rhs).abs());
    }
    for (act, rhs) in instance.le.activity(x).iter().zip(&instance.le.rhs) {
        primal = primal.max(act - rhs);
    }
    for j in 0..n {
        primal = primal
            .max(instance.lower[j] - x[j])
            .max(x[j] - instance.upper[j]);
    }

    let primal_objective = instance.objective_value(x);
    let y_eq = &solution.duals_eq;
    let y_le = &solution.duals_le;
    if y_eq.len() != instance.eq.len() || y_le.len() != instance.le.len() {
        return ResidualReport {
            primal,
            dual: f64::INFINITY,
            gap: f64::INFINITY,
            primal_objective,
            dual_objective: f64::NAN,
        };
    }

    let mut reduced = instance.objective_dense();
    for (row, y) in instance.eq.rows.iter().zip(y_eq) {
        for &(j, a) in row {
            reduced[j] -= a * y;
        }
    }
    for (row, y) in instance.le.rows.iter().zip(y_le) {
        for &(j, a) in row {
            reduced[j] -= a * y;
        }
    }

    let mut dual = y_le.iter().fold(0.0_f64, |acc, &y| acc.max(y));
    let mut dual_objective: f64 = instance.eq.rhs.iter().zip(y_eq).map(|(b, y)| b * y).sum::<f64>()
        + instance.le.rhs.iter().zip(y_le).map(|(b, y)| b * y).sum::<f64>();
    for (j, &d) in reduced.iter().enumerate() {
        let (lo, hi) = (instance.lower[j], instance.upper[j]);
        if d > 0.0 {
            if lo.is_finite() {
                dual_objective += d * lo;
            } else {
                dual = dual.max(d);
            }
        } else if d < 0.0 {
            if hi.is_finite() {
                dual_objective += d * hi;
            } else {
                dual = dual.max(-d);
            }
        }
    }

    ResidualReport {
        primal,
        dual,
        gap: (primal_objective - dual_objective).abs() / (1.0 + primal_objective.abs()),
        primal_objective,
        dual_objective,
    }
}
