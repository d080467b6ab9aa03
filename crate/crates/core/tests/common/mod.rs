//! Test-only oracles, independent of the crate's solver and models.
#![allow(dead_code)]

use h2stack::solver::LpInstance;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Minimum of `c·x` over a bounded polytope by enumerating every vertex.
///
/// All variables must have finite bounds. Each candidate vertex is the
/// solution of `n` linearly independent tight constraints (rows or bounds)
/// chosen from the full list; feasible candidates are scored and the best
/// objective returned. `None` means the polytope is empty.
pub fn vertex_enumeration_min(inst: &LpInstance) -> Option<f64> {
    let n = inst.num_vars();
    assert!(inst.lower.iter().chain(&inst.upper).all(|b| b.is_finite()));

    // Every constraint as a dense row `a·x = b` when tight.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let dense = |row: &[(usize, f64)]| {
        let mut a = vec![0.0; n];
        for &(j, v) in row {
            a[j] += v;
        }
        a
    };
    for (row, &b) in inst.eq.rows.iter().zip(&inst.eq.rhs) {
        rows.push((dense(row), b));
    }
    for (row, &b) in inst.le.rows.iter().zip(&inst.le.rhs) {
        rows.push((dense(row), b));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e.clone(), inst.lower[j]));
        rows.push((e, inst.upper[j]));
    }

    let c = inst.objective_dense();
    let feasible = |x: &[f64]| -> bool {
        let tol = 1e-7;
        let act = |row: &[(usize, f64)]| row.iter().map(|&(j, v)| v * x[j]).sum::<f64>();
        inst.eq
            .rows
            .iter()
            .zip(&inst.eq.rhs)
            .all(|(r, b)| (act(r) - b).abs() <= tol * (1.0 + b.abs()))
            && inst
                .le
                .rows
                .iter()
                .zip(&inst.le.rhs)
                .all(|(r, b)| act(r) <= b + tol * (1.0 + b.abs()))
            && (0..n).all(|j| {
                x[j] >= inst.lower[j] - tol * (1.0 + inst.lower[j].abs())
                    && x[j] <= inst.upper[j] + tol * (1.0 + inst.upper[j].abs())
            })
    };

    let mut best: Option<f64> = None;
    let total = rows.len();
    let mut chosen = Vec::with_capacity(n);
    combinations(total, n, &mut chosen, &mut |subset| {
        let mut mat: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].0.clone()).collect();
        let mut rhs: Vec<f64> = subset.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = gauss_solve(&mut mat, &mut rhs) {
            if feasible(&x) {
                let val: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                if best.is_none_or(|b| val < b) {
                    best = Some(val);
                }
            }
        }
    });
    best
}

fn combinations(total: usize, k: usize, chosen: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    fn rec(
        start: usize,
        total: usize,
        k: usize,
        chosen: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if chosen.len() == k {
            f(chosen);
            return;
        }
        let need = k - chosen.len();
        for i in start..=total.saturating_sub(need) {
            if total - i < need {
                break;
            }
            chosen.push(i);
            rec(i + 1, total, k, chosen, f);
            chosen.pop();
        }
    }
    rec(0, total, k, chosen, f);
}

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn gauss_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Closed-form lifetime: smallest year count whose accumulated nominal-load
/// energy-demand increase strictly exceeds `threshold_percent`.
pub fn lifetime_oracle(rho0_uv_per_h: f64, threshold_percent: f64) -> u32 {
    let per_year = 8760.0 * rho0_uv_per_h * 1e-6 * 26.5887 / 52.5 * 100.0;
    let mut k = 1u32;
    while (k as f64) * per_year <= threshold_percent {
        k += 1;
    }
    k
}

/// Shipped default configuration shortened to `horizon` hours with `j`
/// linearisation points.
pub fn short_setup(horizon: usize, j: usize) -> h2stack::lifecycle::ModelSetup {
    let mut cfg = h2stack::config::RunConfig::default();
    cfg.horizon = horizon;
    cfg.electrolyzer.j_points = j;
    cfg.setup().expect("default config is valid")
}

/// Random bounded-box LP with at most 8 variables and 8 constraints.
pub fn random_lp(rng: &mut ChaCha8Rng, integral: bool) -> LpInstance {
    let n = rng.gen_range(1..=6);
    let m_eq = rng.gen_range(0..=2.min(n));
    let m_le = rng.gen_range(1..=6 - m_eq.min(5));
    let draw = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        let v = rng.gen_range(lo..hi);
        if integral {
            v.round()
        } else {
            v
        }
    };
    let mut inst = LpInstance::new();
    for j in 0..n {
        let lo = draw(rng, -5.0, 2.0);
        let hi = lo + draw(rng, 0.0, 8.0).abs();
        inst.add_var(format!("x{j}"), lo, hi);
        inst.add_cost(j, draw(rng, -10.0, 10.0));
    }
    for k in 0..m_eq + m_le {
        let mut row = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                row.push((j, draw(rng, -6.0, 6.0)));
            }
        }
        let rhs = draw(rng, -10.0, 15.0);
        if k < m_eq {
            inst.add_eq(row, rhs);
        } else {
            inst.add_le(row, rhs);
        }
    }
    inst
}
