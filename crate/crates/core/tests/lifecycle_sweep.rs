mod common;

use h2stack::degradation::{AccrualMode, DegradationScenario};
use h2stack::figures::{figure_sweep_config, write_figures, FigureBase};
use h2stack::lifecycle::{simulate_lifecycle, simulate_trajectory, FailureKind, LifecycleError};
use h2stack::sweep::{sweep_grid, sweep_threshold, PointStatus, SweepConfig};

fn base() -> DegradationScenario {
    DegradationScenario::preset("base_const").unwrap()
}

#[test]
fn lifecycle_csv_rows_follow_the_threshold() {
    let setup = common::short_setup(48, 3);
    for (threshold, rows) in [(20.0, 7usize), (5.0, 2)] {
        let res = simulate_lifecycle(&setup, &base(), threshold, 40).unwrap();
        assert_eq!(res.eol_years as usize, rows);
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), rows + 1);
        assert!(text.starts_with("year,R_start_percent,dU_star_V,c_ppa,c_storage,r_surplus\n"));
        let mut buf = Vec::new();
        res.write_summary_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with(&format!("eol_years,lcoh_av\n{rows},")));
    }
}

#[test]
fn short_max_years_is_reported() {
    let setup = common::short_setup(48, 3);
    let low = DegradationScenario::preset("bottom_const").unwrap();
    let err = simulate_lifecycle(&setup, &low, 20.0, 1).unwrap_err();
    assert!(matches!(err, LifecycleError::MaxYearsExceeded { max_years: 1, .. }));
    assert_eq!(err.kind(), FailureKind::MaxYearsExceeded);
}

#[test]
fn operating_hours_accrual_never_shortens_life() {
    let all = common::short_setup(168, 3);
    let mut op = all.clone();
    op.accrual = AccrualMode::OperatingHoursOnly;
    let a = simulate_lifecycle(&all, &base(), 20.0, 60).unwrap();
    let b = simulate_lifecycle(&op, &base(), 20.0, 60).unwrap();
    assert!(b.eol_years >= a.eol_years, "{} vs {}", b.eol_years, a.eol_years);
}

#[test]
fn load_dependent_rates_wear_faster_than_their_base() {
    let setup = common::short_setup(48, 5);
    let base_eol = simulate_lifecycle(&setup, &base(), 20.0, 40).unwrap().eol_years;
    for name in ["infl_50", "infl_70", "infl_90"] {
        let s = DegradationScenario::preset(name).unwrap();
        let eol = simulate_lifecycle(&setup, &s, 20.0, 40).unwrap().eol_years;
        assert!(eol <= base_eol, "{name}: {eol} > {base_eol}");
    }
}

#[test]
fn nominal_energy_demand_rises_every_year() {
    let setup = common::short_setup(48, 3);
    let traj = simulate_trajectory(&setup, &base(), 30.0, 40);
    assert!(traj.failure.is_none());
    for w in traj.years.windows(2) {
        assert!(w[1].eps_nom > w[0].eps_nom);
        assert!(w[1].r_start_percent > w[0].r_start_percent);
    }
}

fn small_grid(parallelism: usize) -> SweepConfig {
    SweepConfig {
        thresholds: vec![5.0, 10.0, 15.0, 20.0, 25.0],
        capex: vec![502.43, 1252.35],
        alphas: vec![0.075, 0.75],
        scenarios: vec!["base_const".into(), "infl_70".into(), "top_const".into()],
        parallelism,
    }
}

#[test]
fn sweep_output_does_not_depend_on_thread_count() {
    let setup = common::short_setup(48, 3);
    let csv = |p| {
        let table = sweep_grid(&setup, &small_grid(p), 40).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        buf
    };
    let serial = csv(1);
    assert_eq!(serial, csv(8));
    assert_eq!(serial, csv(1));
    let text = String::from_utf8(serial).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 2 * 5);
}

#[test]
fn sweep_records_failed_cells_instead_of_aborting() {
    let setup = common::short_setup(48, 3);
    let mut grid = small_grid(2);
    grid.scenarios = vec!["bottom_const".into()];
    grid.thresholds = vec![5.0, 40.0];
    let table = sweep_grid(&setup, &grid, 10).unwrap();
    let failures = table.failures();
    assert_eq!(failures.len(), 4);
    assert!(failures
        .iter()
        .all(|f| f.status == PointStatus::Failed(FailureKind::MaxYearsExceeded) && f.threshold_percent == 40.0));
    assert!(table.curves.iter().all(|c| c.optimum.is_some_and(|o| o.threshold_percent == 5.0)));
}

#[test]
fn threshold_curve_matches_individual_lifecycles() {
    let setup = common::short_setup(48, 3);
    let thresholds = [5.0, 10.0, 20.0];
    let curve = sweep_threshold(&setup, "base_const", &base(), &thresholds, 40).unwrap();
    for (p, &r) in curve.points.iter().zip(&thresholds) {
        let direct = simulate_lifecycle(&setup, &base(), r, 40).unwrap();
        assert_eq!(p.eol_years, Some(direct.eol_years));
        assert_eq!(p.lcoh_av, Some(direct.lcoh.lcoh_av));
    }
}

#[test]
fn figure_bundle_has_every_file() {
    let setup = common::short_setup(24, 3);
    let figure_base = FigureBase {
        scenario: "base_const".into(),
        alpha: 0.4125,
        capex: 1252.35,
    };
    let mut grid = small_grid(0);
    grid.thresholds = vec![10.0, 20.0];
    let grid = figure_sweep_config(&grid, &figure_base);
    let table = sweep_grid(&setup, &grid, 40).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = write_figures(&table, &grid, &figure_base, dir.path()).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        names,
        [
            "fig2_surcharge_split.csv",
            "fig3_base_case.csv",
            "fig4_capex.csv",
            "fig5_alpha.csv",
            "fig6_rates.csv",
            "fig7a_scale.csv",
            "fig7b_inflection.csv",
            "fig8_optima.csv"
        ]
    );
    let fig8 = std::fs::read_to_string(dir.path().join("fig8_optima.csv")).unwrap();
    assert_eq!(fig8.lines().count(), 1 + table.curves.len());
    let fig6 = std::fs::read_to_string(dir.path().join("fig6_rates.csv")).unwrap();
    assert!(fig6.contains("infl_50,1,15\n"));
    assert!(fig6.contains("base_const,0.5,7.5\n"));
}
