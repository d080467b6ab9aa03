//! Linear programming behind a narrow interface.
//!
//! [`LpInstance`] is the canonical container every model builder targets.
//! [`solve_lp`] runs the embedded bounded-variable revised simplex; the
//! [`LpSolver`] trait lets callers swap in an external solver through the
//! plain-text exchange format in [`dump`].

mod check;
pub mod dump;
mod external;
mod lu;
mod simplex;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use check::{check_optimality, ResidualReport};
pub use external::ExternalSolver;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("numerical breakdown after {iterations} iterations: {reason}")]
    NumericalBreakdown { iterations: usize, reason: String },
    #[error("external solver failed: {0}")]
    External(String),
}

/// Sparse constraint block `rows[i] · x (op) rhs[i]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseRows {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
}

impl SparseRows {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.rows.push(coeffs);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    /// Row activities `A x`.
    pub fn activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    pub(crate) fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Minimisation LP: `min c·x  s.t.  A_eq x = b_eq,  A_le x <= b_le,  lo <= x <= hi`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    /// Sparse objective; repeated indices are summed.
    pub objective: Vec<(usize, f64)>,
    pub eq: SparseRows,
    pub le: SparseRows,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub names: Vec<String>,
}

impl LpInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.eq.len() + self.le.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> usize {
        self.lower.push(lo);
        self.upper.push(hi);
        self.names.push(name.into());
        self.lower.len() - 1
    }

    pub fn add_cost(&mut self, var: usize, coeff: f64) {
        if coeff != 0.0 {
            self.objective.push((var, coeff));
        }
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.eq.push(coeffs, rhs)
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.le.push(coeffs, rhs)
    }

    pub fn objective_dense(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_vars()];
        for &(j, v) in &self.objective {
            c[j] += v;
        }
        c
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, v)| v * x[j]).sum()
    }

    /// Largest absolute right-hand side over both constraint blocks.
    pub fn rhs_inf_norm(&self) -> f64 {
        self.eq
            .rhs
            .iter()
            .chain(&self.le.rhs)
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        if self.upper.len() != n || self.names.len() != n {
            return Err(SolverError::InvalidInstance(format!(
                "bound/name vectors disagree: {} lower, {} upper, {} names",
                n,
                self.upper.len(),
                self.names.len()
            )));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
            {
                return Err(SolverError::InvalidInstance(format!(
                    "variable {} ({}) has bounds [{lo}, {hi}]",
                    j, self.names[j]
                )));
            }
        }
        for &(j, v) in &self.objective {
            if j >= n || !v.is_finite() {
                return Err(SolverError::InvalidInstance(format!(
                    "objective entry ({j}, {v}) out of range or not finite"
                )));
            }
        }
        for (label, block) in [("eq", &self.eq), ("le", &self.le)] {
            if block.rows.len() != block.rhs.len() {
                return Err(SolverError::InvalidInstance(format!(
                    "{label} block has {} rows but {} rhs entries",
                    block.rows.len(),
                    block.rhs.len()
                )));
            }
            for (i, (row, rhs)) in block.rows.iter().zip(&block.rhs).enumerate() {
                if !rhs.is_finite() {
                    return Err(SolverError::InvalidInstance(format!(
                        "{label} row {i} has non-finite rhs {rhs}"
                    )));
                }
                if let Some(&(j, v)) = row.iter().find(|&&(j, v)| j >= n || !v.is_finite()) {
                    return Err(SolverError::InvalidInstance(format!(
                        "{label} row {i} has entry ({j}, {v}) out of range or not finite"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LpStatus::Optimal => "Optimal",
            LpStatus::Infeasible => "Infeasible",
            LpStatus::Unbounded => "Unbounded",
            LpStatus::IterationLimit => "IterationLimit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals of the equality block; empty unless `status == Optimal`.
    pub duals_eq: Vec<f64>,
    /// Row duals of the `<=` block (non-positive at optimality); empty unless optimal.
    pub duals_le: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative tolerance for feasibility and optimality.
    pub tol: f64,
    /// Defaults to `50 * (variables + constraints)` when `None`.
    pub max_iters: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: None,
        }
    }
}

impl SolverOptions {
    pub fn iteration_cap(&self, instance: &LpInstance) -> usize {
        self.max_iters
            .unwrap_or(50 * (instance.num_vars() + instance.num_constraints()).max(1))
    }
}

/// Anything that can solve an [`LpInstance`].
pub trait LpSolver: Send + Sync {
    fn solve(&self, instance: &LpInstance) -> Result<LpSolution, SolverError>;
}

/// The embedded revised simplex.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmbeddedSimplex {
    pub options: SolverOptions,
}

impl LpSolver for EmbeddedSimplex {
    fn solve(&self, instance: &LpInstance) -> Result<LpSolution, SolverError> {
        solve_lp(instance, self.options.tol, self.options.iteration_cap(instance))
    }
}

/// Solve with the embedded bounded-variable revised simplex.
///
/// Never reports `Optimal` for a point that fails the final feasibility
/// re-check; unrecoverable pivoting trouble surfaces as
/// [`SolverError::NumericalBreakdown`].
pub fn solve_lp(
    instance: &LpInstance,
    tol: f64,
    max_iters: usize,
) -> Result<LpSolution, SolverError> {
    instance.validate()?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(SolverError::InvalidInstance(format!(
            "tolerance {tol} must lie in (0, 1)"
        )));
    }
    simplex::Simplex::new(instance, tol, max_iters).run()
}
