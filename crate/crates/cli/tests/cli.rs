use std::path::Path;
use std::process::{Command, Output};

use h2stack::config::DEFAULT_CONFIG_JSON;

const BIN: &str = env!("CARGO_BIN_EXE_h2stack");

/// Short horizon and coarse curve keep every command fast.
const FAST: [&str; 4] = ["--horizon", "24", "--j-points", "3"];

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .env_remove("H2STACK_CONFIG")
        .args(args)
        .args(FAST)
        .arg("--quiet")
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn default_config_validates() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["validate-config"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn shipped_config_file_validates() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default_config.json");
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["validate-config", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn config_env_var_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{}").unwrap();
    let out = Command::new(BIN)
        .current_dir(dir.path())
        .env("H2STACK_CONFIG", dir.path().join("bad.json"))
        .arg("validate-config")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_field_is_a_config_error_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = DEFAULT_CONFIG_JSON.replace("\"usage_fee\"", "\"turnover_fee\"");
    std::fs::write(dir.path().join("c.json"), text).unwrap();
    let out = run(dir.path(), &["validate-config", "--config", "c.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("storage"), "{}", stderr(&out));
}

#[test]
fn out_of_domain_value_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["validate-config", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("degradation.alpha"), "{}", stderr(&out));
}

#[test]
fn missing_series_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let text = DEFAULT_CONFIG_JSON.replacen(
        r#"{ "kind": "synthetic", "seed": 2023 }"#,
        r#"{ "kind": "csv", "path": "onshore.csv" }"#,
        1,
    );
    std::fs::write(dir.path().join("c.json"), text).unwrap();
    let out = run(dir.path(), &["dispatch", "--config", "c.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("FileNotFound"), "{}", stderr(&out));
}

#[test]
fn arbitrage_config_exits_as_unbounded() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["dispatch", "--sale-price", "0.1976"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("UnboundedSurplusArbitrage"), "{}", stderr(&out));
    // With the override the LP itself is unbounded.
    let out = run(dir.path(), &["dispatch", "--sale-price", "0.1976", "--allow-surplus-arbitrage"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("UnboundedSurplusArbitrage"), "{}", stderr(&out));
}

#[test]
fn dispatch_without_storage_has_no_storage_cost() {
    let dir = tempfile::tempdir().unwrap();
    let text = DEFAULT_CONFIG_JSON
        .replace(r#""seed": 2023 }"#, r#""seed": 0 }"#)
        .replace(r#"{ "kind": "synthetic", "seed": 0 }"#, r#"{ "kind": "constant", "value": 0.6 }"#);
    std::fs::write(dir.path().join("c.json"), text).unwrap();
    let out = run(dir.path(), &["dispatch", "--config", "c.json", "--no-storage", "--output-dir", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = read(dir.path().join("o/dispatch_summary.csv"));
    let mut lines = summary.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "c_storage").unwrap();
    assert_eq!(row[col], "0");
    assert_eq!(read(dir.path().join("o/dispatch_hourly.csv")).lines().count(), 25);
}

#[test]
fn dispatch_of_a_later_year_uses_the_degraded_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["dispatch", "--year", "3", "--output-dir", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = read(dir.path().join("o/dispatch_summary.csv"));
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "3");
    assert!(row[2].parse::<f64>().unwrap() > 52.5);
}

#[test]
fn lifecycle_rows_follow_the_threshold() {
    let dir = tempfile::tempdir().unwrap();
    for (r, rows) in [("20", 7), ("5", 2)] {
        let out = run(dir.path(), &["lifecycle", "--threshold", r, "--output-dir", r]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let csv = read(dir.path().join(r).join("lifecycle.csv"));
        assert_eq!(csv.lines().count(), rows + 1, "R={r}");
        assert!(dir.path().join(r).join("lcoh_breakdown.csv").is_file());
        let summary = read(dir.path().join(r).join("lifecycle_summary.csv"));
        assert!(summary.lines().nth(1).unwrap().starts_with(&format!("{rows},")));
    }
}

#[test]
fn unreachable_threshold_exits_with_max_years_exceeded() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["lifecycle", "--scenario", "bottom_const", "--max-years", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("MaxYearsExceeded"), "{}", stderr(&out));
}

fn single_curve_config(dir: &Path) {
    let text = DEFAULT_CONFIG_JSON
        .replace(r#""alphas": [0.075, 0.4125, 0.75]"#, r#""alphas": [0.4125]"#)
        .replace(r#""capex": [502.43, 877.39, 1252.35, 1627.30, 2002.26]"#, r#""capex": [1252.35]"#)
        .replace(
            r#""scenarios": ["bottom_const", "low_const", "base_const", "high_const", "top_const"]"#,
            r#""scenarios": ["base_const"]"#,
        );
    assert_ne!(text, DEFAULT_CONFIG_JSON);
    std::fs::write(dir.join("c.json"), text).unwrap();
}

#[test]
fn sweep_writes_the_threshold_curve_and_its_optimum() {
    let dir = tempfile::tempdir().unwrap();
    single_curve_config(dir.path());
    let out = run(dir.path(), &["sweep", "--config", "c.json", "--output-dir", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = read(dir.path().join("o/sweep.csv"));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "scenario,alpha,capex_eur_per_kw,R_percent,eol_years,lcoh_eur_per_kg,share_ppa,share_storage,\
         share_surplus,share_peri,share_stacks,is_optimum,status"
    );
    assert_eq!(lines.len(), 12);
    assert_eq!(lines.iter().filter(|l| l.contains(",true,")).count(), 1);
    assert_eq!(read(dir.path().join("o/optima.csv")).lines().count(), 2);
}

#[test]
fn sweep_bytes_do_not_depend_on_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(dir.path(), &["sweep", "--parallel", "1", "--output-dir", "p1"]);
    let b = run(dir.path(), &["sweep", "--parallel", "8", "--output-dir", "p8"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(b.status.code(), Some(0), "{}", stderr(&b));
    for f in ["sweep.csv", "optima.csv"] {
        assert_eq!(read(dir.path().join("p1").join(f)), read(dir.path().join("p8").join(f)), "{f}");
    }
}

#[test]
fn figure_flag_writes_the_bundle_without_changing_the_table() {
    let dir = tempfile::tempdir().unwrap();
    single_curve_config(dir.path());
    let plain = run(dir.path(), &["sweep", "--config", "c.json", "--output-dir", "plain"]);
    let figs = run(dir.path(), &["sweep", "--config", "c.json", "--figures", "--output-dir", "figs"]);
    assert_eq!(plain.status.code(), Some(0), "{}", stderr(&plain));
    assert_eq!(figs.status.code(), Some(0), "{}", stderr(&figs));
    assert_eq!(read(dir.path().join("plain/sweep.csv")), read(dir.path().join("figs/sweep.csv")));
    for f in [
        "fig2_surcharge_split.csv",
        "fig3_base_case.csv",
        "fig4_capex.csv",
        "fig5_alpha.csv",
        "fig6_rates.csv",
        "fig7a_scale.csv",
        "fig7b_inflection.csv",
        "fig8_optima.csv",
    ] {
        assert!(dir.path().join("figs/figures").join(f).is_file(), "{f}");
    }
    let out = run(dir.path(), &["emit-figures", "--config", "c.json", "--output-dir", "only"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        read(dir.path().join("only/figures/fig8_optima.csv")),
        read(dir.path().join("figs/figures/fig8_optima.csv"))
    );
}
