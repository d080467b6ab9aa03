//! Multi-year loop: dispatch with the degraded envelope, accumulate
//! degradation, stop once the nominal-load energy demand has risen past
//! the threshold.
//!
//! The degradation trajectory of a scenario does not depend on the
//! threshold or on CAPEX, so [`simulate_trajectory`] runs the years once
//! and [`Trajectory::lifecycle`] derives the result for any threshold the
//! trajectory covers.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::degradation::{
    annual_voltage_increase, apply_year, degradation_fraction, exceeds_threshold, AccrualMode,
    DegradationScenario, DegradationState,
};
use crate::dispatch::{
    build_problem, hourly_load_fractions, solve_dispatch, Booking, CostBreakdown, DispatchError,
    DispatchOptions, DispatchSolution, GridTerms, PpaTerms, StorageTerms,
};
use crate::economics::{
    lcoh, peripheral_cost_year, stack_cost_year, EconomicTerms, EconomicsError, LcohBreakdown,
    LcohMode, YearCosts,
};
use crate::electrolyzer::{build_envelope, ElectrolyzerError, ElectrolyzerSpec};
use crate::output::fmt_g6;
use crate::solver::LpSolver;
use crate::timeseries::DemandSeries;

#[derive(Debug, Error, Clone)]
pub enum LifecycleError {
    #[error("threshold {threshold}% not exceeded within {max_years} years")]
    MaxYearsExceeded { threshold: f64, max_years: u32 },
    #[error("year {year}: {source}")]
    Dispatch {
        year: u32,
        source: Arc<DispatchError>,
    },
    #[error("year {year}: {source}")]
    Envelope {
        year: u32,
        source: ElectrolyzerError,
    },
    #[error(transparent)]
    Economics(#[from] EconomicsError),
    #[error("invalid lifecycle input: {0}")]
    Invalid(String),
}

/// Coarse outcome class used for status columns and exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    MaxYearsExceeded,
    Infeasible,
    Unbounded,
    NumericFailure,
    InvalidInput,
}

impl FailureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::MaxYearsExceeded => "max_years_exceeded",
            FailureKind::Infeasible => "infeasible",
            FailureKind::Unbounded => "unbounded",
            FailureKind::NumericFailure => "numeric_failure",
            FailureKind::InvalidInput => "invalid_input",
        }
    }
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl LifecycleError {
    pub fn kind(&self) -> FailureKind {
        match self {
            LifecycleError::MaxYearsExceeded { .. } => FailureKind::MaxYearsExceeded,
            LifecycleError::Dispatch { source, .. } => match source.as_ref() {
                DispatchError::Infeasible => FailureKind::Infeasible,
                DispatchError::Unbounded
                | DispatchError::UnboundedSurplusArbitrage { .. }
                | DispatchError::SurplusArbitrage { .. } => {
                    FailureKind::Unbounded
                }
                DispatchError::IterationLimit(_)
                | DispatchError::CostMismatch { .. }
                | DispatchError::Solver(_) => FailureKind::NumericFailure,
                _ => FailureKind::InvalidInput,
            },
            LifecycleError::Envelope { .. } | LifecycleError::Invalid(_) => FailureKind::InvalidInput,
            LifecycleError::Economics(_) => FailureKind::InvalidInput,
        }
    }
}

/// Immutable model inputs shared by every run.
#[derive(Clone)]
pub struct ModelSetup {
    pub electrolyzer: ElectrolyzerSpec,
    pub ppa: Vec<PpaTerms>,
    pub storage: StorageTerms,
    pub grid: GridTerms,
    pub demand: DemandSeries,
    pub horizon: usize,
    pub dt_hours: f64,
    pub dispatch: DispatchOptions,
    pub accrual: AccrualMode,
    pub economics: EconomicTerms,
    pub lcoh_mode: LcohMode,
    pub solver: Arc<dyn LpSolver>,
}

impl fmt::Debug for ModelSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSetup")
            .field("electrolyzer", &self.electrolyzer)
            .field("sources", &self.ppa.iter().map(PpaTerms::source).collect::<Vec<_>>())
            .field("horizon", &self.horizon)
            .field("dt_hours", &self.dt_hours)
            .finish_non_exhaustive()
    }
}

impl ModelSetup {
    /// Factor from one simulated horizon to one accounting year.
    pub fn annual_scale(&self) -> f64 {
        self.dispatch.year_hours / (self.horizon as f64 * self.dt_hours)
    }

    /// Hydrogen delivered per accounting year, in kg.
    pub fn annual_mass(&self) -> f64 {
        self.demand.total_mass(self.dt_hours) * self.annual_scale()
    }

    pub fn with_economics(&self, economics: EconomicTerms) -> Self {
        Self {
            economics,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LoadStats {
    pub mean: f64,
    pub max: f64,
    /// Steps with non-zero load, scaled to the accounting year (h).
    pub operating_hours: f64,
    /// Energy over nominal power, scaled to the accounting year (h).
    pub full_load_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearResult {
    pub year: u32,
    pub r_start_percent: f64,
    pub r_end_percent: f64,
    /// Nominal-load voltage increase of this year, in V.
    pub du_star_v: f64,
    /// Degraded nominal-load ε used for this year's dispatch.
    pub eps_nom: f64,
    /// Dispatch costs scaled to one accounting year.
    pub costs: CostBreakdown,
    pub load: LoadStats,
    pub bookings: Vec<Booking>,
    pub storage_capacity_kg: f64,
    pub iterations: usize,
    pub max_primal_residual: f64,
    pub max_gap: f64,
}

/// Dispatch one horizon on the envelope of a degradation state.
pub fn dispatch_for_state(setup: &ModelSetup, state: &DegradationState) -> Result<DispatchSolution, LifecycleError> {
    let year = state.year_index;
    let spec = &setup.electrolyzer;
    let eps = state.degraded_points(&spec.bol_points());
    let envelope =
        build_envelope(spec, &eps).map_err(|source| LifecycleError::Envelope { year, source })?;
    let dispatch_err = |source: DispatchError| LifecycleError::Dispatch {
        year,
        source: Arc::new(source),
    };
    let problem = build_problem(
        &setup.ppa,
        &setup.storage,
        &setup.grid,
        &setup.demand,
        &envelope,
        setup.horizon,
        setup.dt_hours,
        &setup.dispatch,
    )
    .map_err(dispatch_err)?;
    solve_dispatch(&problem, setup.solver.as_ref()).map_err(dispatch_err)
}

/// One year of operation: dispatch on the current envelope, then degrade.
pub fn year_step(
    setup: &ModelSetup,
    scenario: &DegradationScenario,
    state: &DegradationState,
) -> Result<(YearResult, DegradationState), LifecycleError> {
    let year = state.year_index;
    let spec = &setup.electrolyzer;
    let eps = state.degraded_points(&spec.bol_points());
    let solution = dispatch_for_state(setup, state)?;
    let profile = hourly_load_fractions(&solution, spec.p_nom);
    let scale = setup.annual_scale();
    let du_star = annual_voltage_increase(scenario, &profile, setup.dt_hours, setup.accrual) * scale;
    let next = apply_year(state, du_star, scenario.alpha, &spec.grid_fractions());

    let n = profile.len().max(1) as f64;
    let load = LoadStats {
        mean: profile.iter().sum::<f64>() / n,
        max: profile.iter().cloned().fold(0.0, f64::max),
        operating_hours: profile.iter().filter(|&&p| p > 0.0).count() as f64 * setup.dt_hours * scale,
        full_load_hours: profile.iter().sum::<f64>() * setup.dt_hours * scale,
    };
    let result = YearResult {
        year,
        r_start_percent: degradation_fraction(state, spec.eps_nom),
        r_end_percent: degradation_fraction(&next, spec.eps_nom),
        du_star_v: du_star,
        eps_nom: *eps.last().expect("at least two grid points"),
        costs: solution.costs.scaled(scale),
        load,
        bookings: solution.bookings.clone(),
        storage_capacity_kg: solution.storage_capacity_kg,
        iterations: solution.diagnostics.iterations,
        max_primal_residual: solution.diagnostics.residuals.primal,
        max_gap: solution.diagnostics.residuals.gap,
    };
    Ok((result, next))
}

/// Years simulated for one scenario, up to the first year past
/// `max_threshold` or `max_years`, whichever comes first.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub scenario: DegradationScenario,
    pub years: Vec<YearResult>,
    pub max_years: u32,
    /// Error that stopped the simulation early, if any.
    pub failure: Option<LifecycleError>,
}

pub fn simulate_trajectory(
    setup: &ModelSetup,
    scenario: &DegradationScenario,
    max_threshold: f64,
    max_years: u32,
) -> Trajectory {
    let mut state = DegradationState::fresh(setup.electrolyzer.j_points);
    let mut years = Vec::new();
    let mut failure = None;
    if let Err(e) = scenario.validate() {
        failure = Some(LifecycleError::Invalid(e.to_string()));
    }
    while failure.is_none() && (years.len() as u32) < max_years {
        match year_step(setup, scenario, &state) {
            Ok((result, next)) => {
                let done = exceeds_threshold(result.r_end_percent, max_threshold);
                years.push(result);
                state = next;
                if done {
                    break;
                }
            }
            Err(e) => failure = Some(e),
        }
    }
    Trajectory {
        scenario: *scenario,
        years,
        max_years,
        failure,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifecycleDiagnostics {
    pub total_iterations: usize,
    pub max_primal_residual: f64,
    pub max_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifecycleResult {
    pub scenario: DegradationScenario,
    pub threshold_percent: f64,
    pub eol_years: u32,
    pub years: Vec<YearResult>,
    pub lcoh: LcohBreakdown,
    pub diagnostics: LifecycleDiagnostics,
}

impl Trajectory {
    /// First year after which R strictly exceeds `threshold`.
    pub fn eol_for(&self, threshold: f64) -> Result<u32, LifecycleError> {
        match self
            .years
            .iter()
            .position(|y| exceeds_threshold(y.r_end_percent, threshold))
        {
            Some(i) => Ok(i as u32 + 1),
            None => Err(self.failure.clone().unwrap_or(LifecycleError::MaxYearsExceeded {
                threshold,
                max_years: self.max_years,
            })),
        }
    }

    pub fn lifecycle(
        &self,
        threshold: f64,
        economics: &EconomicTerms,
        setup: &ModelSetup,
    ) -> Result<LifecycleResult, LifecycleError> {
        let eol = self.eol_for(threshold)?;
        let years = &self.years[..eol as usize];
        let p_nom = setup.electrolyzer.p_nom;
        let annual_mass = setup.annual_mass();
        let c_peri = peripheral_cost_year(economics, p_nom, annual_mass);
        let c_stacks = stack_cost_year(economics, p_nom, eol);
        let records: Vec<YearCosts> = years
            .iter()
            .map(|y| YearCosts {
                c_ppa: y.costs.c_ppa + y.costs.c_grid,
                c_storage: y.costs.c_storage,
                r_surplus: y.costs.r_surplus,
                c_peri,
                c_stacks,
            })
            .collect();
        let breakdown = lcoh(&records, annual_mass, eol, setup.lcoh_mode)?;
        Ok(LifecycleResult {
            scenario: self.scenario,
            threshold_percent: threshold,
            eol_years: eol,
            years: years.to_vec(),
            lcoh: breakdown,
            diagnostics: LifecycleDiagnostics {
                total_iterations: years.iter().map(|y| y.iterations).sum(),
                max_primal_residual: years.iter().map(|y| y.max_primal_residual).fold(0.0, f64::max),
                max_gap: years.iter().map(|y| y.max_gap).fold(0.0, f64::max),
            },
        })
    }
}

pub fn simulate_lifecycle(
    setup: &ModelSetup,
    scenario: &DegradationScenario,
    threshold: f64,
    max_years: u32,
) -> Result<LifecycleResult, LifecycleError> {
    if !(threshold > 0.0) {
        return Err(LifecycleError::Invalid(format!("threshold {threshold} must be positive")));
    }
    if max_years < 1 {
        return Err(LifecycleError::Invalid("max_years must be at least 1".into()));
    }
    simulate_trajectory(setup, scenario, threshold, max_years).lifecycle(
        threshold,
        &setup.economics,
        setup,
    )
}

impl LifecycleResult {
    /// CSV `year,R_start_percent,dU_star_V,c_ppa,c_storage,r_surplus`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["year", "R_start_percent", "dU_star_V", "c_ppa", "c_storage", "r_surplus"])?;
        for y in &self.years {
            w.write_record([
                y.year.to_string(),
                fmt_g6(y.r_start_percent),
                fmt_g6(y.du_star_v),
                fmt_g6(y.costs.c_ppa + y.costs.c_grid),
                fmt_g6(y.costs.c_storage),
                fmt_g6(y.costs.r_surplus),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV `eol_years,lcoh_av`.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["eol_years", "lcoh_av"])?;
        w.write_record([self.eol_years.to_string(), fmt_g6(self.lcoh.lcoh_av)])?;
        w.flush()?;
        Ok(())
    }
}
