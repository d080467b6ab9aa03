//! Per-figure CSV bundles.
//!
//! Every file is derived from one [`SweepTable`] plus a few closed-form
//! curves, so the bundle is as deterministic as the sweep itself.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::degradation::{degradation_rate, voltage_surcharge_at_load, DegradationScenario, PRESET_NAMES};
use crate::output::fmt_g6;
use crate::sweep::{Curve, SweepConfig, SweepTable};

#[derive(Debug, Error)]
pub enum FigureError {
    #[error("sweep table has no curve for scenario {scenario}, alpha {alpha}, capex {capex}")]
    MissingCurve { scenario: String, alpha: f64, capex: f64 },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Degradation(#[from] crate::degradation::DegradationError),
}

/// Reference point the single-curve figures are drawn at.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureBase {
    pub scenario: String,
    pub alpha: f64,
    pub capex: f64,
}

const SCALE_PRESETS: [&str; 5] = ["bottom_const", "low_const", "base_const", "high_const", "top_const"];
const INFLECTION_PRESETS: [&str; 5] = ["infl_50", "infl_60", "infl_70", "infl_80", "infl_90"];

/// Widen a sweep grid so that it contains every curve the bundle needs.
pub fn figure_sweep_config(sweep: &SweepConfig, base: &FigureBase) -> SweepConfig {
    let mut cfg = sweep.clone();
    for name in PRESET_NAMES.iter().chain(std::iter::once(&base.scenario.as_str())) {
        if !cfg.scenarios.iter().any(|s| s == name) {
            cfg.scenarios.push(name.to_string());
        }
    }
    if !cfg.alphas.contains(&base.alpha) {
        cfg.alphas.push(base.alpha);
    }
    if !cfg.capex.contains(&base.capex) {
        cfg.capex.push(base.capex);
    }
    cfg
}

type Rows = Vec<Vec<String>>;

fn write_rows(dir: &Path, name: &str, header: &[&str], rows: Rows) -> Result<PathBuf, FigureError> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|source| FigureError::Io {
        path: path.clone(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|source| FigureError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn opt_g6(v: Option<f64>) -> String {
    v.map(fmt_g6).unwrap_or_default()
}

fn curve<'a>(table: &'a SweepTable, scenario: &str, alpha: f64, capex: f64) -> Result<&'a Curve, FigureError> {
    table.curve(scenario, alpha, capex).ok_or_else(|| FigureError::MissingCurve {
        scenario: scenario.to_string(),
        alpha,
        capex,
    })
}

/// LCOH-versus-R rows for a set of curves, tagged with a label column.
fn curve_rows(curves: &[(&str, &Curve)]) -> Rows {
    let mut rows = Vec::new();
    for (label, c) in curves {
        for p in &c.points {
            let is_opt = c.optimum.is_some_and(|o| o.threshold_percent == p.threshold_percent);
            rows.push(vec![
                label.to_string(),
                fmt_g6(p.threshold_percent),
                p.eol_years.map(|e| e.to_string()).unwrap_or_default(),
                opt_g6(p.lcoh_av),
                is_opt.to_string(),
                p.status.to_string(),
            ]);
        }
    }
    rows
}

const CURVE_HEADER: [&str; 6] = ["series", "R_percent", "eol_years", "lcoh_eur_per_kg", "is_optimum", "status"];

/// Write fig2 through fig8 into `dir` and return the written paths.
pub fn write_figures(table: &SweepTable, sweep: &SweepConfig, base: &FigureBase, dir: &Path) -> Result<Vec<PathBuf>, FigureError> {
    fs::create_dir_all(dir).map_err(|source| FigureError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let load_grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();

    // Shift/tilt split of the voltage surcharge.
    let mut rows = Vec::new();
    for &alpha in &sweep.alphas {
        for &pi in &load_grid {
            rows.push(vec![fmt_g6(alpha), fmt_g6(pi), fmt_g6(voltage_surcharge_at_load(1.0, alpha, pi))]);
        }
    }
    written.push(write_rows(dir, "fig2_surcharge_split.csv", &["alpha", "load_fraction", "du_over_du_star"], rows)?);

    // Base curve with eol and cost shares.
    let c = curve(table, &base.scenario, base.alpha, base.capex)?;
    let rows = c
        .points
        .iter()
        .map(|p| {
            let s = p.shares;
            vec![
                fmt_g6(p.threshold_percent),
                p.eol_years.map(|e| e.to_string()).unwrap_or_default(),
                opt_g6(p.lcoh_av),
                opt_g6(s.map(|s| s.ppa)),
                opt_g6(s.map(|s| s.storage)),
                opt_g6(s.map(|s| s.surplus)),
                opt_g6(s.map(|s| s.peri)),
                opt_g6(s.map(|s| s.stacks)),
                c.optimum.is_some_and(|o| o.threshold_percent == p.threshold_percent).to_string(),
                p.status.to_string(),
            ]
        })
        .collect();
    written.push(write_rows(
        dir,
        "fig3_base_case.csv",
        &[
            "R_percent",
            "eol_years",
            "lcoh_eur_per_kg",
            "share_ppa",
            "share_storage",
            "share_surplus",
            "share_peri",
            "share_stacks",
            "is_optimum",
            "status",
        ],
        rows,
    )?);

    // CAPEX variation.
    let labels: Vec<String> = sweep.capex.iter().map(|c| fmt_g6(*c)).collect();
    let mut curves = Vec::new();
    for (label, &capex) in labels.iter().zip(&sweep.capex) {
        curves.push((label.as_str(), curve(table, &base.scenario, base.alpha, capex)?));
    }
    written.push(write_rows(dir, "fig4_capex.csv", &CURVE_HEADER, curve_rows(&curves))?);

    // α variation.
    let labels: Vec<String> = sweep.alphas.iter().map(|a| fmt_g6(*a)).collect();
    let mut curves = Vec::new();
    for (label, &alpha) in labels.iter().zip(&sweep.alphas) {
        curves.push((label.as_str(), curve(table, &base.scenario, alpha, base.capex)?));
    }
    written.push(write_rows(dir, "fig5_alpha.csv", &CURVE_HEADER, curve_rows(&curves))?);

    // Rate curves of the scenario presets.
    let mut rows = Vec::new();
    for name in PRESET_NAMES {
        let s = DegradationScenario::preset(name)?;
        for &pi in &load_grid {
            rows.push(vec![name.to_string(), fmt_g6(pi), fmt_g6(degradation_rate(&s, pi)?)]);
        }
    }
    written.push(write_rows(dir, "fig6_rates.csv", &["scenario", "load_fraction", "rate_uv_per_h"], rows)?);

    // Scale and inflection scenarios.
    for (file, names) in [("fig7a_scale.csv", SCALE_PRESETS), ("fig7b_inflection.csv", INFLECTION_PRESETS)] {
        let mut curves = Vec::new();
        for name in names {
            curves.push((name, curve(table, name, base.alpha, base.capex)?));
        }
        written.push(write_rows(dir, file, &CURVE_HEADER, curve_rows(&curves))?);
    }

    // Optima of every grid combination.
    let rows = table
        .curves
        .iter()
        .map(|c| {
            vec![
                c.scenario.clone(),
                fmt_g6(c.alpha),
                fmt_g6(c.capex),
                opt_g6(c.optimum.map(|o| o.threshold_percent)),
                c.optimum.map(|o| o.eol_years.to_string()).unwrap_or_default(),
                opt_g6(c.optimum.map(|o| o.lcoh_av)),
            ]
        })
        .collect();
    written.push(write_rows(
        dir,
        "fig8_optima.csv",
        &["scenario", "alpha", "capex_eur_per_kw", "R_opt_percent", "eol_opt_years", "lcoh_opt_eur_per_kg"],
        rows,
    )?);
    Ok(written)
}
