//! Plain-text exchange format for LP instances and solutions.
//!
//! Instance dump:
//!
//! ```text
//! LPDUMP vars=<n> eq=<rows> le=<rows>
//! NAMES
//! <col> <name>
//! OBJ
//! <col> <value>
//! EQ
//! <row> <col> <value>
//! <row> rhs <value>
//! LE
//! <row> <col> <value>
//! <row> rhs <value>
//! BOUNDS
//! <col> <lo> <hi>
//! ```
//!
//! Bounds use `inf` / `-inf`. Numbers are written in shortest round-trip
//! form. Solutions use the sections `STATUS`, `OBJECTIVE`, `ITERATIONS`
//! (single value lines) and `X`, `DUALS_EQ`, `DUALS_LE` (`<index> <value>`).

use std::fmt::Write as _;

use super::{LpInstance, LpSolution, LpStatus, SolverError};

fn bad(line_no: usize, msg: impl std::fmt::Display) -> SolverError {
    SolverError::InvalidInstance(format!("dump line {}: {msg}", line_no + 1))
}

pub fn write_instance(instance: &LpInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "LPDUMP vars={} eq={} le={}",
        instance.num_vars(),
        instance.eq.len(),
        instance.le.len()
    );
    out.push_str("NAMES\n");
    for (j, name) in instance.names.iter().enumerate() {
        let _ = writeln!(out, "{j} {}", name.replace(char::is_whitespace, "_"));
    }
    out.push_str("OBJ\n");
    for &(j, v) in &instance.objective {
        let _ = writeln!(out, "{j} {v:?}");
    }
    for (label, block) in [("EQ", &instance.eq), ("LE", &instance.le)] {
        out.push_str(label);
        out.push('\n');
        for (i, (row, rhs)) in block.rows.iter().zip(&block.rhs).enumerate() {
            for &(j, v) in row {
                let _ = writeln!(out, "{i} {j} {v:?}");
            }
            let _ = writeln!(out, "{i} rhs {rhs:?}");
        }
    }
    out.push_str("BOUNDS\n");
    for j in 0..instance.num_vars() {
        let _ = writeln!(out, "{j} {:?} {:?}", instance.lower[j], instance.upper[j]);
    }
    out
}

fn parse_f64(tok: Option<&str>, line_no: usize) -> Result<f64, SolverError> {
    let tok = tok.ok_or_else(|| bad(line_no, "missing number"))?;
    tok.parse::<f64>()
        .map_err(|_| bad(line_no, format!("not a number: {tok}")))
}

fn parse_usize(tok: Option<&str>, line_no: usize) -> Result<usize, SolverError> {
    let tok = tok.ok_or_else(|| bad(line_no, "missing index"))?;
    tok.parse::<usize>()
        .map_err(|_| bad(line_no, format!("not an index: {tok}")))
}

pub fn read_instance(text: &str) -> Result<LpInstance, SolverError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hno, header) = lines.next().ok_or_else(|| bad(0, "empty dump"))?;
    let mut counts = [None; 3];
    let mut toks = header.split_whitespace();
    if toks.next() != Some("LPDUMP") {
        return Err(bad(hno, "missing LPDUMP header"));
    }
    for tok in toks {
        let (key, val) = tok.split_once('=').ok_or_else(|| bad(hno, tok))?;
        let idx = match key {
            "vars" => 0,
            "eq" => 1,
            "le" => 2,
            _ => return Err(bad(hno, format!("unknown header key {key}"))),
        };
        counts[idx] = Some(val.parse::<usize>().map_err(|_| bad(hno, val))?);
    }
    let [Some(n), Some(m_eq), Some(m_le)] = counts else {
        return Err(bad(hno, "header needs vars, eq and le counts"));
    };

    let mut inst = LpInstance {
        lower: vec![0.0; n],
        upper: vec![f64::INFINITY; n],
        names: (0..n).map(|j| format!("x{j}")).collect(),
        ..LpInstance::default()
    };
    inst.eq.rows = vec![Vec::new(); m_eq];
    inst.eq.rhs = vec![0.0; m_eq];
    inst.le.rows = vec![Vec::new(); m_le];
    inst.le.rhs = vec![0.0; m_le];

    let mut section = "";
    for (no, line) in lines {
        let line = line.trim();
        if matches!(line, "NAMES" | "OBJ" | "EQ" | "LE" | "BOUNDS") {
            section = line;
            continue;
        }
        let mut t = line.split_whitespace();
        match section {
            "NAMES" => {
                let j = parse_usize(t.next(), no)?;
                let name = t.next().ok_or_else(|| bad(no, "missing name"))?;
                *inst.names.get_mut(j).ok_or_else(|| bad(no, "column out of range"))? =
                    name.to_string();
            }
            "OBJ" => {
                let j = parse_usize(t.next(), no)?;
                inst.objective.push((j, parse_f64(t.next(), no)?));
            }
            "EQ" | "LE" => {
                let block = if section == "EQ" { &mut inst.eq } else { &mut inst.le };
                let i = parse_usize(t.next(), no)?;
                if i >= block.rows.len() {
                    return Err(bad(no, "row out of range"));
                }
                let col = t.next();
                if col == Some("rhs") {
                    block.rhs[i] = parse_f64(t.next(), no)?;
                } else {
                    let j = parse_usize(col, no)?;
                    block.rows[i].push((j, parse_f64(t.next(), no)?));
                }
            }
            "BOUNDS" => {
                let j = parse_usize(t.next(), no)?;
                if j >= n {
                    return Err(bad(no, "column out of range"));
                }
                inst.lower[j] = parse_f64(t.next(), no)?;
                inst.upper[j] = parse_f64(t.next(), no)?;
            }
            _ => return Err(bad(no, "data before any section header")),
        }
    }
    inst.validate()?;
    Ok(inst)
}

pub fn write_solution(solution: &LpSolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "STATUS {}", solution.status);
    let _ = writeln!(out, "OBJECTIVE {:?}", solution.objective);
    let _ = writeln!(out, "ITERATIONS {}", solution.iterations);
    for (label, values) in [
        ("X", &solution.x),
        ("DUALS_EQ", &solution.duals_eq),
        ("DUALS_LE", &solution.duals_le),
    ] {
        let _ = writeln!(out, "{label}");
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(out, "{i} {v:?}");
        }
    }
    out
}

/// Parse a solution for an instance with `n` variables and the given row counts.
pub fn read_solution(
    text: &str,
    n: usize,
    m_eq: usize,
    m_le: usize,
) -> Result<LpSolution, SolverError> {
    let mut sol = LpSolution {
        status: LpStatus::Infeasible,
        x: vec![0.0; n],
        objective: f64::NAN,
        duals_eq: Vec::new(),
        duals_le: Vec::new(),
        iterations: 0,
    };
    let mut status = None;
    let mut section = "";
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut t = line.split_whitespace();
        let head = t.next().unwrap_or_default();
        match head {
            "STATUS" => {
                status = Some(match t.next() {
                    Some("Optimal") => LpStatus::Optimal,
                    Some("Infeasible") => LpStatus::Infeasible,
                    Some("Unbounded") => LpStatus::Unbounded,
                    Some("IterationLimit") => LpStatus::IterationLimit,
                    other => return Err(bad(no, format!("unknown status {other:?}"))),
                });
            }
            "OBJECTIVE" => sol.objective = parse_f64(t.next(), no)?,
            "ITERATIONS" => sol.iterations = parse_usize(t.next(), no)?,
            "X" | "DUALS_EQ" | "DUALS_LE" => {
                section = head;
                match head {
                    "DUALS_EQ" => sol.duals_eq = vec![0.0; m_eq],
                    "DUALS_LE" => sol.duals_le = vec![0.0; m_le],
                    _ => {}
                }
            }
            _ => {
                let i = parse_usize(Some(head), no)?;
                let v = parse_f64(t.next(), no)?;
                let target = match section {
                    "X" => &mut sol.x,
                    "DUALS_EQ" => &mut sol.duals_eq,
                    "DUALS_LE" => &mut sol.duals_le,
                    _ => return Err(bad(no, "value outside a vector section")),
                };
                *target.get_mut(i).ok_or_else(|| bad(no, "index out of range"))? = v;
            }
        }
    }
    sol.status = status.ok_or_else(|| bad(0, "missing STATUS line"))?;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn instance_strategy() -> impl Strategy<Value = LpInstance> {
        (1usize..6, 0usize..4, 0usize..4).prop_flat_map(|(n, m_eq, m_le)| {
            let entry = (0..n, -1e3f64..1e3);
            let row = prop::collection::vec(entry, 0..4);
            (
                prop::collection::vec((0..n, -50f64..50.0), 0..6),
                prop::collection::vec((row.clone(), -1e4f64..1e4), m_eq),
                prop::collection::vec((row, -1e4f64..1e4), m_le),
                prop::collection::vec((-10f64..0.0, prop::option::of(0f64..1e6)), n),
            )
                .prop_map(move |(obj, eq, le, bounds)| {
                    let mut inst = LpInstance::new();
                    for (j, (lo, hi)) in bounds.into_iter().enumerate() {
                        inst.add_var(format!("v{j}"), lo, hi.unwrap_or(f64::INFINITY));
                    }
                    inst.objective = obj;
                    for (r, b) in eq {
                        inst.add_eq(r, b);
                    }
                    for (r, b) in le {
                        inst.add_le(r, b);
                    }
                    inst
                })
        })
    }

    proptest! {
        #[test]
        fn instance_dump_round_trips(inst in instance_strategy()) {
            let text = write_instance(&inst);
            prop_assert_eq!(read_instance(&text).unwrap(), inst);
        }
    }

    #[test]
    fn solution_round_trips() {
        let sol = LpSolution {
            status: LpStatus::Optimal,
            x: vec![1.5, -0.25, 1e-300],
            objective: 3.0,
            duals_eq: vec![0.1],
            duals_le: vec![-2.0, 0.0],
            iterations: 7,
        };
        let text = write_solution(&sol);
        assert_eq!(read_solution(&text, 3, 1, 2).unwrap(), sol);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_instance("").is_err());
        assert!(read_instance("LPDUMP vars=1 eq=0 le=0\nOBJ\n0 abc\n").is_err());
        assert!(read_instance("LPDUMP vars=1 eq=0 le=0\nBOUNDS\n0 2 1\n").is_err());
    }
}
