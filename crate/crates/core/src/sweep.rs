//! Threshold curves, cost optima and parallel parameter grids.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degradation::{DegradationError, DegradationScenario};
use crate::economics::{CostShares, EconomicTerms};
use crate::lifecycle::{simulate_trajectory, FailureKind, ModelSetup, Trajectory};
use crate::output::fmt_g6;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("curve has no successful point")]
    EmptyCurve,
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Scenario(#[from] DegradationError),
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
}

pub const DEFAULT_THRESHOLDS: [f64; 11] = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0];
pub const DEFAULT_CAPEX_GRID: [f64; 5] = [502.43, 877.39, 1252.35, 1627.30, 2002.26];
pub const DEFAULT_ALPHAS: [f64; 3] = [0.075, 0.4125, 0.75];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Degradation thresholds R in %.
    pub thresholds: Vec<f64>,
    /// CAPEX values in €/kW.
    pub capex: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Scenario preset names.
    pub scenarios: Vec<String>,
    /// Worker threads; 0 uses every available core.
    pub parallelism: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            capex: DEFAULT_CAPEX_GRID.to_vec(),
            alphas: DEFAULT_ALPHAS.to_vec(),
            scenarios: ["bottom_const", "low_const", "base_const", "high_const", "top_const"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            parallelism: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        validate_thresholds(&self.thresholds)?;
        if self.capex.is_empty() || self.alphas.is_empty() || self.scenarios.is_empty() {
            return Err(SweepError::InvalidGrid("every grid must be non-empty".into()));
        }
        if self.capex.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(SweepError::InvalidGrid("CAPEX values must be non-negative".into()));
        }
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(SweepError::InvalidGrid("alpha values must lie in [0, 1]".into()));
        }
        for s in &self.scenarios {
            DegradationScenario::preset(s)?;
        }
        Ok(())
    }
}

fn validate_thresholds(thresholds: &[f64]) -> Result<(), SweepError> {
    if thresholds.is_empty() {
        return Err(SweepError::InvalidGrid("threshold grid is empty".into()));
    }
    if thresholds.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(SweepError::InvalidGrid("thresholds must be positive".into()));
    }
    if thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SweepError::InvalidGrid("thresholds must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    Failed(FailureKind),
}

impl fmt::Display for PointStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointStatus::Ok => f.write_str("ok"),
            PointStatus::Failed(kind) => kind.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub threshold_percent: f64,
    pub eol_years: Option<u32>,
    pub lcoh_av: Option<f64>,
    pub shares: Option<CostShares>,
    pub status: PointStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimum {
    pub threshold_percent: f64,
    pub eol_years: u32,
    pub lcoh_av: f64,
}

/// LCOH over the threshold grid for one (scenario, α, CAPEX) combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub scenario: String,
    pub alpha: f64,
    pub capex: f64,
    pub points: Vec<CurvePoint>,
    pub optimum: Option<Optimum>,
}

impl Curve {
    pub fn is_unreachable(&self) -> bool {
        self.points.iter().all(|p| p.status != PointStatus::Ok)
    }
}

/// Minimal-LCOH point; exact ties go to the smaller threshold.
pub fn find_cost_optimum(points: &[CurvePoint]) -> Result<Optimum, SweepError> {
    let mut best: Option<Optimum> = None;
    for p in points {
        if let (PointStatus::Ok, Some(eol), Some(lcoh)) = (p.status, p.eol_years, p.lcoh_av) {
            let better = match best {
                None => true,
                Some(b) => {
                    lcoh < b.lcoh_av || (lcoh == b.lcoh_av && p.threshold_percent < b.threshold_percent)
                }
            };
            if better {
                best = Some(Optimum {
                    threshold_percent: p.threshold_percent,
                    eol_years: eol,
                    lcoh_av: lcoh,
                });
            }
        }
    }
    best.ok_or(SweepError::EmptyCurve)
}

fn curve_from_trajectory(
    setup: &ModelSetup,
    trajectory: &Trajectory,
    scenario: &str,
    capex: f64,
    thresholds: &[f64],
) -> Curve {
    let economics = EconomicTerms {
        c_capex: capex,
        ..setup.economics.clone()
    };
    let points: Vec<CurvePoint> = thresholds
        .iter()
        .map(|&r| match trajectory.lifecycle(r, &economics, setup) {
            Ok(res) => CurvePoint {
                threshold_percent: r,
                eol_years: Some(res.eol_years),
                lcoh_av: Some(res.lcoh.lcoh_av),
                shares: Some(res.lcoh.shares),
                status: PointStatus::Ok,
            },
            Err(e) => CurvePoint {
                threshold_percent: r,
                eol_years: None,
                lcoh_av: None,
                shares: None,
                status: PointStatus::Failed(e.kind()),
            },
        })
        .collect();
    let optimum = find_cost_optimum(&points).ok();
    Curve {
        scenario: scenario.to_string(),
        alpha: trajectory.scenario.alpha,
        capex,
        points,
        optimum,
    }
}

/// One lifecycle per threshold, sharing a single degradation trajectory.
pub fn sweep_threshold(
    setup: &ModelSetup,
    scenario_name: &str,
    scenario: &DegradationScenario,
    thresholds: &[f64],
    max_years: u32,
) -> Result<Curve, SweepError> {
    validate_thresholds(thresholds)?;
    let top = *thresholds.last().expect("non-empty");
    let trajectory = simulate_trajectory(setup, scenario, top, max_years);
    Ok(curve_from_trajectory(
        setup,
        &trajectory,
        scenario_name,
        setup.economics.c_capex,
        thresholds,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub scenario: String,
    pub alpha: f64,
    pub capex: f64,
    pub threshold_percent: f64,
    pub eol_years: Option<u32>,
    pub lcoh_av: Option<f64>,
    pub shares: Option<CostShares>,
    pub is_optimum: bool,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedCell {
    pub scenario: String,
    pub alpha: f64,
    pub capex: f64,
    pub threshold_percent: f64,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub curves: Vec<Curve>,
}

impl SweepTable {
    pub fn records(&self) -> Vec<SweepRecord> {
        let mut out = Vec::new();
        for c in &self.curves {
            for p in &c.points {
                let is_optimum = c.optimum.is_some_and(|o| o.threshold_percent == p.threshold_percent);
                out.push(SweepRecord {
                    scenario: c.scenario.clone(),
                    alpha: c.alpha,
                    capex: c.capex,
                    threshold_percent: p.threshold_percent,
                    eol_years: p.eol_years,
                    lcoh_av: p.lcoh_av,
                    shares: p.shares,
                    is_optimum,
                    status: p.status,
                });
            }
        }
        out
    }

    pub fn failures(&self) -> Vec<FailedCell> {
        self.records()
            .into_iter()
            .filter(|r| r.status != PointStatus::Ok)
            .map(|r| FailedCell {
                scenario: r.scenario,
                alpha: r.alpha,
                capex: r.capex,
                threshold_percent: r.threshold_percent,
                status: r.status,
            })
            .collect()
    }

    pub fn curve(&self, scenario: &str, alpha: f64, capex: f64) -> Option<&Curve> {
        self.curves
            .iter()
            .find(|c| c.scenario == scenario && c.alpha == alpha && c.capex == capex)
    }

    /// CSV with one row per grid cell.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "scenario",
            "alpha",
            "capex_eur_per_kw",
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
        ])?;
        let opt = |v: Option<f64>| v.map(fmt_g6).unwrap_or_default();
        for r in self.records() {
            let s = r.shares;
            w.write_record([
                r.scenario.clone(),
                fmt_g6(r.alpha),
                fmt_g6(r.capex),
                fmt_g6(r.threshold_percent),
                r.eol_years.map(|e| e.to_string()).unwrap_or_default(),
                opt(r.lcoh_av),
                opt(s.map(|s| s.ppa)),
                opt(s.map(|s| s.storage)),
                opt(s.map(|s| s.surplus)),
                opt(s.map(|s| s.peri)),
                opt(s.map(|s| s.stacks)),
                r.is_optimum.to_string(),
                r.status.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn run_cells<T, F>(parallelism: usize, cells: &[T], f: F) -> Result<Vec<Trajectory>, SweepError>
where
    T: Sync,
    F: Fn(&T) -> Trajectory + Sync + Send,
{
    if parallelism == 1 {
        return Ok(cells.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| SweepError::ThreadPool(e.to_string()))?;
    // `collect` on an indexed parallel iterator keeps input order.
    Ok(pool.install(|| cells.par_iter().map(f).collect()))
}

/// Full Cartesian product of scenarios × α × CAPEX × thresholds.
///
/// Dispatch and degradation depend on neither CAPEX nor the threshold, so
/// one trajectory per (scenario, α) is simulated in parallel and every
/// CAPEX/threshold cell is derived from it. Failed cells keep a status.
pub fn sweep_grid(setup: &ModelSetup, config: &SweepConfig, max_years: u32) -> Result<SweepTable, SweepError> {
    config.validate()?;
    let top = *config.thresholds.last().expect("validated");
    let mut cells = Vec::new();
    for name in &config.scenarios {
        let base = DegradationScenario::preset(name)?;
        for &alpha in &config.alphas {
            cells.push((name.clone(), base.with_alpha(alpha)));
        }
    }
    let trajectories = run_cells(config.parallelism, &cells, |(_, s)| {
        simulate_trajectory(setup, s, top, max_years)
    })?;
    let mut curves = Vec::new();
    for ((name, _), traj) in cells.iter().zip(&trajectories) {
        for &capex in &config.capex {
            curves.push(curve_from_trajectory(setup, traj, name, capex, &config.thresholds));
        }
    }
    Ok(SweepTable { curves })
}

/// Failure classes counted over a table, for progress reports.
pub fn failure_summary(table: &SweepTable) -> Vec<(FailureKind, usize)> {
    let mut counts: Vec<(FailureKind, usize)> = Vec::new();
    for f in table.failures() {
        if let PointStatus::Failed(kind) = f.status {
            match counts.iter_mut().find(|(k, _)| *k == kind) {
                Some((_, n)) => *n += 1,
                None => counts.push((kind, 1)),
            }
        }
    }
    counts
}
