//! Sparse LU factorisation of simplex bases with product-form updates.
//!
//! The factorisation is left-looking: basis columns are processed sparsest
//! first, each one eliminated against the already computed `L` columns in
//! pivot order, and the pivot row is chosen by threshold partial pivoting
//! with a row-count tie-break. With `Q` the column order this yields
//! `B Q = L U`, where column `k` of `L` is unit at row `pivot_rows[k]`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Singular {
    pub position: usize,
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct BasisFactor {
    m: usize,
    pivot_rows: Vec<usize>,
    pivot_positions: Vec<usize>,
    /// `row_step[r]` is the pivot step that eliminated row `r`.
    row_step: Vec<usize>,
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Off-diagonal entries `(k', u)` with `k' < k` for each step `k`.
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
}

impl BasisFactor {
    /// Factorise the basis whose column at position `p` is `cols[p]`.
    pub(crate) fn factorize(m: usize, cols: &[&[(usize, f64)]]) -> Result<Self, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (cols[p].len(), p));

        let mut row_count = vec![0usize; m];
        for col in cols {
            for &(r, _) in col.iter() {
                row_count[r] += 1;
            }
        }

        let unset = usize::MAX;
        let mut row_step = vec![unset; m];
        let mut pivot_rows: Vec<usize> = Vec::with_capacity(m);
        let mut pivot_positions: Vec<usize> = Vec::with_capacity(m);
        let mut l_cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut u_cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut u_diag: Vec<f64> = Vec::with_capacity(m);

        let mut work = vec![0.0_f64; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut is_touched = vec![false; m];
        let mut queued = vec![false; m];
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();

        for (step, &pos) in order.iter().enumerate() {
            for &(r, v) in cols[pos] {
                if !is_touched[r] {
                    is_touched[r] = true;
                    touched.push(r);
                }
                work[r] += v;
                let k = row_step[r];
                if k != unset && !queued[k] {
                    queued[k] = true;
                    heap.push(Reverse(k));
                }
            }

            let mut u_col = Vec::new();
            while let Some(Reverse(k)) = heap.pop() {
                queued[k] = false;
                let xk = work[pivot_rows[k]];
                if xk.abs() <= DROP_TOL {
                    continue;
                }
                u_col.push((k, xk));
                for &(r, l) in &l_cols[k] {
                    if !is_touched[r] {
                        is_touched[r] = true;
                        touched.push(r);
                    }
                    work[r] -= l * xk;
                    let kr = row_step[r];
                    if kr != unset && !queued[kr] {
                        queued[kr] = true;
                        heap.push(Reverse(kr));
                    }
                }
            }

            let mut max_abs = 0.0_f64;
            for &r in &touched {
                if row_step[r] == unset {
                    max_abs = max_abs.max(work[r].abs());
                }
            }
            if max_abs < SINGULAR_TOL {
                return Err(Singular { position: pos });
            }
            let mut best: Option<(usize, usize, f64)> = None;
            for &r in &touched {
                if row_step[r] != unset {
                    continue;
                }
                let v = work[r].abs();
                if v < PIVOT_THRESHOLD * max_abs {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((br, bc, bv)) => {
                        (row_count[r], std::cmp::Reverse(ordered(v)), r)
                            < (bc, std::cmp::Reverse(ordered(bv)), br)
                    }
                };
                if better {
                    best = Some((r, row_count[r], v));
                }
            }
            let (prow, _, _) = best.expect("threshold admits the maximum");
            let pivot = work[prow];

            let mut l_col = Vec::new();
            for &r in &touched {
                if row_step[r] == unset && r != prow && work[r].abs() > DROP_TOL {
                    l_col.push((r, work[r] / pivot));
                }
            }
            l_col.sort_unstable_by_key(|&(r, _)| r);

            for &r in &touched {
                work[r] = 0.0;
                is_touched[r] = false;
            }
            touched.clear();

            row_step[prow] = step;
            pivot_rows.push(prow);
            pivot_positions.push(pos);
            l_cols.push(l_col);
            u_cols.push(u_col);
            u_diag.push(pivot);
        }

        Ok(Self {
            m,
            pivot_rows,
            pivot_positions,
            row_step,
            l_cols,
            u_cols,
            u_diag,
            etas: Vec::new(),
        })
    }

    pub(crate) fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// Solve `B z = a` in place: `rhs` is indexed by row on entry and by
    /// basis position on exit.
    pub(crate) fn ftran(&self, rhs: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let xk = rhs[self.pivot_rows[k]];
            if xk != 0.0 {
                for &(r, l) in &self.l_cols[k] {
                    rhs[r] -= l * xk;
                }
            }
        }
        let mut w: Vec<f64> = self.pivot_rows.iter().map(|&r| rhs[r]).collect();
        for k in (0..m).rev() {
            let wk = w[k] / self.u_diag[k];
            w[k] = wk;
            if wk != 0.0 {
                for &(kp, u) in &self.u_cols[k] {
                    w[kp] -= u * wk;
                }
            }
        }
        for k in 0..m {
            rhs[self.pivot_positions[k]] = w[k];
        }
        for eta in &self.etas {
            let zp = rhs[eta.pos] / eta.pivot;
            rhs[eta.pos] = zp;
            if zp != 0.0 {
                for &(i, a) in &eta.entries {
                    rhs[i] -= a * zp;
                }
            }
        }
    }

    /// Solve `B^T y = c` in place: `rhs` is indexed by basis position on
    /// entry and by row on exit.
    pub(crate) fn btran(&self, rhs: &mut [f64]) {
        let m = self.m;
        for eta in self.etas.iter().rev() {
            let mut acc = rhs[eta.pos];
            for &(i, a) in &eta.entries {
                acc -= a * rhs[i];
            }
            rhs[eta.pos] = acc / eta.pivot;
        }
        let mut v: Vec<f64> = self.pivot_positions.iter().map(|&p| rhs[p]).collect();
        for k in 0..m {
            let mut acc = v[k];
            for &(kp, u) in &self.u_cols[k] {
                acc -= u * v[kp];
            }
            v[k] = acc / self.u_diag[k];
        }
        for k in (0..m).rev() {
            let mut acc = v[k];
            for &(r, l) in &self.l_cols[k] {
                acc -= l * rhs[r];
            }
            rhs[self.pivot_rows[k]] = acc;
        }
        debug_assert!(self.row_step.len() == m);
    }

    /// Record the replacement of the column at `pos` by a column whose
    /// FTRAN image is `alpha`.
    pub(crate) fn push_update(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, a)| i != pos && a.abs() > DROP_TOL)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}

/// Total order on non-NaN magnitudes for tie-breaking.
fn ordered(v: f64) -> u64 {
    v.to_bits()
}
