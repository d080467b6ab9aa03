//! Bounded-variable primal revised simplex.
//!
//! Every row `i` gets a logical column `e_i`: `[0, inf)` for `<=` rows and
//! `[0, 0]` for equalities, so the all-logical basis is always available as
//! a start. Phase 1 minimises the sum of bound violations of the basic
//! variables (composite costs recomputed each iteration); phase 2 uses the
//! true costs. Dantzig pricing switches to Bland's rule while the method is
//! stalling on degenerate pivots.

use super::lu::BasisFactor;
use super::{LpInstance, LpSolution, LpStatus, SolverError};

const REFACTOR_EVERY: usize = 96;
const PIVOT_TOL: f64 = 1e-9;
const STALL_LIMIT: usize = 40;
const MAX_CLEANUP_ROUNDS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable sitting at zero.
    Free,
}

enum Pricing {
    Entering { var: usize, dir: f64 },
    Done,
}

enum Ratio {
    Flip(f64),
    Pivot { pos: usize, step: f64, to_upper: bool },
    Unbounded,
}

pub(crate) struct Simplex<'a> {
    instance: &'a LpInstance,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_entries: Vec<(usize, f64)>,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    factor: Option<BasisFactor>,
    primal_tol: f64,
    dual_tol: f64,
    max_iters: usize,
    iterations: usize,
    bland: bool,
    stall: usize,
}

impl<'a> Simplex<'a> {
    pub(crate) fn new(instance: &'a LpInstance, tol: f64, max_iters: usize) -> Self {
        let n = instance.num_vars();
        let m_eq = instance.eq.len();
        let m = m_eq + instance.le.len();
        let total = n + m;

        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in instance.eq.rows.iter().chain(&instance.le.rows).enumerate() {
            for &(j, v) in row {
                per_col[j].push((i, v));
            }
        }
        let mut col_start = Vec::with_capacity(total + 1);
        let mut col_entries = Vec::with_capacity(instance.eq.nnz() + instance.le.nnz() + m);
        for mut col in per_col {
            col_start.push(col_entries.len());
            col.sort_by_key(|&(i, _)| i);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for (i, v) in col {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += v,
                    _ => merged.push((i, v)),
                }
            }
            col_entries.extend(merged.into_iter().filter(|&(_, v)| v != 0.0));
        }
        for i in 0..m {
            col_start.push(col_entries.len());
            col_entries.push((i, 1.0));
        }
        col_start.push(col_entries.len());

        let b: Vec<f64> = instance.eq.rhs.iter().chain(&instance.le.rhs).copied().collect();
        let mut lo = instance.lower.clone();
        let mut hi = instance.upper.clone();
        for i in 0..m {
            lo.push(0.0);
            hi.push(if i < m_eq { 0.0 } else { f64::INFINITY });
        }
        let mut cost = instance.objective_dense();
        cost.resize(total, 0.0);

        let mut state = Vec::with_capacity(total);
        let mut x = vec![0.0; total];
        for j in 0..n {
            let s = if lo[j].is_finite() {
                x[j] = lo[j];
                VarState::AtLower
            } else if hi[j].is_finite() {
                x[j] = hi[j];
                VarState::AtUpper
            } else {
                VarState::Free
            };
            state.push(s);
        }
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            state.push(VarState::Basic(i));
            basis.push(n + i);
        }

        let scale = 1.0 + b.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let primal_tol = (tol * 1e-2).min(1e-9) * scale.sqrt().max(1.0);
        let cscale = 1.0 + cost.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let dual_tol = (tol * 1e-2).min(1e-9) * cscale;

        Self {
            instance,
            m,
            n,
            col_start,
            col_entries,
            b,
            lo,
            hi,
            cost,
            basis,
            state,
            x,
            factor: None,
            primal_tol,
            dual_tol,
            max_iters,
            iterations: 0,
            bland: false,
            stall: 0,
        }
    }

    fn col(&self, j: usize) -> &[(usize, f64)] {
        &self.col_entries[self.col_start[j]..self.col_start[j + 1]]
    }

    fn breakdown(&self, reason: impl Into<String>) -> SolverError {
        SolverError::NumericalBreakdown {
            iterations: self.iterations,
            reason: reason.into(),
        }
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        let cols: Vec<&[(usize, f64)]> = self.basis.iter().map(|&j| self.col(j)).collect();
        match BasisFactor::factorize(self.m, &cols) {
            Ok(f) => {
                self.factor = Some(f);
                Ok(())
            }
            Err(s) => Err(self.breakdown(format!(
                "singular basis at position {} (variable {})",
                s.position, self.basis[s.position]
            ))),
        }
    }

    fn factor(&self) -> &BasisFactor {
        self.factor.as_ref().expect("basis factorised")
    }

    /// Recompute basic values from the nonbasic ones: `x_B = B^-1 (b - N x_N)`.
    fn recompute_basic(&mut self) {
        let mut r = self.b.clone();
        for j in 0..self.n + self.m {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                for &(i, v) in self.col(j) {
                    r[i] -= v * xj;
                }
            }
        }
        self.factor().ftran(&mut r);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = r[pos];
        }
    }

    fn tol_at(&self, bound: f64) -> f64 {
        self.primal_tol * (1.0 + bound.abs()).sqrt()
    }

    /// Phase-1 costs of the basic variables; returns the number of violations.
    fn phase_one_costs(&self, cb: &mut [f64]) -> usize {
        let mut count = 0;
        for (pos, &j) in self.basis.iter().enumerate() {
            let v = self.x[j];
            cb[pos] = if v < self.lo[j] - self.tol_at(self.lo[j]) {
                count += 1;
                -1.0
            } else if v > self.hi[j] + self.tol_at(self.hi[j]) {
                count += 1;
                1.0
            } else {
                0.0
            };
        }
        count
    }

    fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&j| {
                let v = self.x[j];
                (self.lo[j] - v).max(0.0) + (v - self.hi[j]).max(0.0)
            })
            .sum()
    }

    fn price(&self, y: &[f64], phase_one: bool) -> Pricing {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n + self.m {
            let st = self.state[j];
            if matches!(st, VarState::Basic(_)) || self.lo[j] == self.hi[j] {
                continue;
            }
            let cj = if phase_one { 0.0 } else { self.cost[j] };
            let d = cj - self.col(j).iter().map(|&(i, v)| v * y[i]).sum::<f64>();
            let dir = match st {
                VarState::AtLower if d < -self.dual_tol => 1.0,
                VarState::AtUpper if d > self.dual_tol => -1.0,
                VarState::Free if d.abs() > self.dual_tol => -d.signum(),
                _ => continue,
            };
            if self.bland {
                return Pricing::Entering { var: j, dir };
            }
            if best.is_none_or(|(_, _, bd)| d.abs() > bd) {
                best = Some((j, dir, d.abs()));
            }
        }
        match best {
            Some((var, dir, _)) => Pricing::Entering { var, dir },
            None => Pricing::Done,
        }
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64]) -> Ratio {
        let mut best: Option<(usize, f64, bool, f64)> = None;
        for (pos, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[pos];
            let v = self.x[j];
            let (l, u) = (self.lo[j], self.hi[j]);
            let rate = -dir * a;
            let (bound, to_upper) = if rate < 0.0 {
                if v > u + self.tol_at(u) {
                    (u, true)
                } else if v >= l - self.tol_at(l) && l.is_finite() {
                    (l, false)
                } else {
                    continue;
                }
            } else if v < l - self.tol_at(l) {
                (l, false)
            } else if v <= u + self.tol_at(u) && u.is_finite() {
                (u, true)
            } else {
                continue;
            };
            let step = ((v - bound) / -rate).max(0.0);
            let replace = match best {
                None => true,
                Some((bpos, bstep, _, babs)) => {
                    let tie = 1e-12 * (1.0 + bstep);
                    if step < bstep - tie {
                        true
                    } else if step <= bstep + tie {
                        if self.bland {
                            j < self.basis[bpos]
                        } else {
                            a.abs() > babs
                        }
                    } else {
                        false
                    }
                }
            };
            if replace {
                best = Some((pos, step, to_upper, a.abs()));
            }
        }

        let flip = if self.lo[q].is_finite() && self.hi[q].is_finite() {
            Some(self.hi[q] - self.lo[q])
        } else {
            None
        };
        match (best, flip) {
            (Some((_, step, _, _)), Some(f)) if f <= step => Ratio::Flip(f),
            (None, Some(f)) => Ratio::Flip(f),
            (Some((pos, step, to_upper, _)), _) => Ratio::Pivot {
                pos,
                step,
                to_upper,
            },
            (None, None) => Ratio::Unbounded,
        }
    }

    fn entering_column(&self, q: usize) -> Vec<f64> {
        let mut alpha = vec![0.0; self.m];
        for &(i, v) in self.col(q) {
            alpha[i] = v;
        }
        self.factor().ftran(&mut alpha);
        alpha
    }

    fn duals(&self, phase_one: bool) -> Vec<f64> {
        let mut cb = vec![0.0; self.m];
        if phase_one {
            self.phase_one_costs(&mut cb);
        } else {
            for (pos, &j) in self.basis.iter().enumerate() {
                cb[pos] = self.cost[j];
            }
        }
        self.factor().btran(&mut cb);
        cb
    }

    pub(crate) fn run(mut self) -> Result<LpSolution, SolverError> {
        self.refactor()?;
        self.recompute_basic();
        let mut cleanup_rounds = 0;

        loop {
            if self.iterations >= self.max_iters {
                return Ok(self.finish(LpStatus::IterationLimit));
            }
            let mut cb = vec![0.0; self.m];
            let phase_one = self.phase_one_costs(&mut cb) > 0;
            let y = self.duals(phase_one);

            let (q, dir) = match self.price(&y, phase_one) {
                Pricing::Entering { var, dir } => (var, dir),
                Pricing::Done => {
                    // Confirm on a fresh factorisation before classifying.
                    self.refactor()?;
                    self.recompute_basic();
                    let mut cb = vec![0.0; self.m];
                    let still_infeasible = self.phase_one_costs(&mut cb) > 0;
                    if still_infeasible == phase_one {
                        let y = self.duals(phase_one);
                        if let Pricing::Done = self.price(&y, phase_one) {
                            if phase_one {
                                return Ok(self.finish(LpStatus::Infeasible));
                            }
                            return Ok(self.finish(LpStatus::Optimal));
                        }
                    }
                    cleanup_rounds += 1;
                    if cleanup_rounds > MAX_CLEANUP_ROUNDS {
                        return Err(self.breakdown(format!(
                            "could not confirm termination (infeasibility {:.3e})",
                            self.infeasibility()
                        )));
                    }
                    continue;
                }
            };

            let alpha = self.entering_column(q);
            let ratio = self.ratio_test(q, dir, &alpha);
            let step = match ratio {
                Ratio::Unbounded => {
                    if phase_one {
                        return Err(self.breakdown("unbounded ray during phase 1"));
                    }
                    return Ok(self.finish(LpStatus::Unbounded));
                }
                Ratio::Flip(step) => {
                    self.apply_step(q, dir, step, &alpha);
                    self.state[q] = match self.state[q] {
                        VarState::AtLower => VarState::AtUpper,
                        _ => VarState::AtLower,
                    };
                    self.x[q] = if matches!(self.state[q], VarState::AtUpper) {
                        self.hi[q]
                    } else {
                        self.lo[q]
                    };
                    step
                }
                Ratio::Pivot {
                    pos,
                    step,
                    to_upper,
                } => {
                    self.apply_step(q, dir, step, &alpha);
                    let leaving = self.basis[pos];
                    self.x[leaving] = if to_upper { self.hi[leaving] } else { self.lo[leaving] };
                    self.state[leaving] = if to_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.basis[pos] = q;
                    self.state[q] = VarState::Basic(pos);
                    let needs_refactor = {
                        let f = self.factor.as_mut().expect("basis factorised");
                        f.push_update(pos, &alpha);
                        f.num_updates() >= REFACTOR_EVERY
                    };
                    if needs_refactor {
                        self.refactor()?;
                        self.recompute_basic();
                    }
                    step
                }
            };

            self.iterations += 1;
            if step <= 1e-12 {
                self.stall += 1;
                if self.stall > STALL_LIMIT {
                    self.bland = true;
                }
            } else {
                self.stall = 0;
                self.bland = false;
            }
        }
    }

    fn apply_step(&mut self, q: usize, dir: f64, step: f64, alpha: &[f64]) {
        if step == 0.0 {
            return;
        }
        self.x[q] += dir * step;
        for (pos, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let j = self.basis[pos];
                self.x[j] -= dir * step * a;
            }
        }
    }

    fn finish(self, status: LpStatus) -> LpSolution {
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let objective = self.instance.objective_value(&x);
        let (duals_eq, duals_le) = if status == LpStatus::Optimal {
            let y = self.duals(false);
            let m_eq = self.instance.eq.len();
            (y[..m_eq].to_vec(), y[m_eq..].to_vec())
        } else {
            (Vec::new(), Vec::new())
        };
        LpSolution {
            status,
            x,
            objective,
            duals_eq,
            duals_le,
            iterations: self.iterations,
        }
    }
}
