use h2stack::solver::{
    check_optimality, dump, solve_lp, EmbeddedSimplex, ExternalSolver, LpInstance, LpSolver,
    LpStatus,
};

const INF: f64 = f64::INFINITY;

/// max 3x + 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18, x, y >= 0.
/// Hand solution: x = 2, y = 6, objective -36 in minimisation form,
/// row duals (0, -1.5, -1).
fn textbook() -> LpInstance {
    let mut inst = LpInstance::new();
    let x = inst.add_var("x", 0.0, INF);
    let y = inst.add_var("y", 0.0, INF);
    inst.add_cost(x, -3.0);
    inst.add_cost(y, -5.0);
    inst.add_le(vec![(x, 1.0)], 4.0);
    inst.add_le(vec![(y, 2.0)], 12.0);
    inst.add_le(vec![(x, 3.0), (y, 2.0)], 18.0);
    inst
}

#[test]
fn textbook_lp_residuals_vanish() {
    let inst = textbook();
    let sol = solve_lp(&inst, 1e-7, 100).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
    assert!((sol.objective + 36.0).abs() < 1e-12);
    for (got, want) in sol.duals_le.iter().zip([0.0, -1.5, -1.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    let rep = check_optimality(&inst, &sol);
    assert!(rep.primal <= 1e-9 && rep.dual <= 1e-9 && rep.gap <= 1e-9, "{rep:?}");
}

#[test]
fn perturbed_primal_shows_up_in_the_report() {
    let inst = textbook();
    let mut sol = solve_lp(&inst, 1e-7, 100).unwrap();
    sol.x[1] += 1e-3;
    let rep = check_optimality(&inst, &sol);
    // 2y <= 12 and 3x + 2y <= 18 are both tight; each moves by 2e-3.
    assert!((rep.primal - 2e-3).abs() < 1e-12);
    assert!(rep.gap > 1e-5);
}

#[test]
fn duplicated_row_keeps_the_gap_closed() {
    let mut inst = textbook();
    inst.add_le(vec![(0, 3.0), (1, 2.0)], 18.0);
    inst.add_eq(vec![(0, 1.0), (1, -1.0)], -4.0);
    inst.add_eq(vec![(0, 2.0), (1, -2.0)], -8.0);
    let sol = solve_lp(&inst, 1e-7, 100).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective + 36.0).abs() < 1e-9);
    let rep = check_optimality(&inst, &sol);
    assert!(rep.gap <= 1e-7 && rep.primal <= 1e-9 && rep.dual <= 1e-9, "{rep:?}");
}

#[test]
fn external_adapter_reads_the_exchange_files() {
    // A stand-in "solver" that copies a prepared solution to the output path
    // after checking it was handed a parseable instance dump.
    let inst = textbook();
    let sol = EmbeddedSimplex::default().solve(&inst).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let prepared = dir.path().join("prepared.txt");
    std::fs::write(&prepared, dump::write_solution(&sol)).unwrap();
    let script = dir.path().join("fake_solver.sh");
    std::fs::write(
        &script,
        format!(
            "#!/bin/sh\nhead -1 \"$1\" | grep -q '^LPDUMP vars=2 eq=0 le=3' || exit 3\ncp {} \"$2\"\n",
            prepared.display()
        ),
    )
    .unwrap();
    let external = ExternalSolver {
        command: "/bin/sh".into(),
        args: vec![script.display().to_string()],
    };
    let got = external.solve(&inst).unwrap();
    assert_eq!(got, sol);

    let failing = ExternalSolver::new("/bin/false");
    assert!(failing.solve(&inst).is_err());
}
