//! Python module `pyh2stack`.
//!
//! Long computations release the GIL. Errors surface as subclasses of
//! `pyh2stack.H2StackError`.

use std::path::PathBuf;

use h2stack::config::{ConfigError, RunConfig, ScenarioRef};
use h2stack::degradation::{self, DegradationScenario, PRESET_NAMES};
use h2stack::dispatch::DispatchSolution;
use h2stack::economics::{self, CostShares};
use h2stack::lifecycle::{self, FailureKind, LifecycleError, LifecycleResult};
use h2stack::sweep::{self, SweepError, SweepTable};
use h2stack::timeseries::Source;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(pyh2stack, H2StackError, PyException, "Base class of every pyh2stack error.");
create_exception!(pyh2stack, ConfigurationError, H2StackError, "Invalid configuration or input.");
create_exception!(pyh2stack, InfeasibleError, H2StackError, "The dispatch LP has no feasible point.");
create_exception!(pyh2stack, UnboundedError, H2StackError, "The dispatch LP is unbounded.");
create_exception!(pyh2stack, NumericError, H2StackError, "The solver failed numerically.");
create_exception!(
    pyh2stack,
    MaxYearsExceededError,
    H2StackError,
    "The threshold was not exceeded within max_years."
);

fn config_err(e: ConfigError) -> PyErr {
    match e {
        ConfigError::SurplusArbitrage { .. } => UnboundedError::new_err(e.to_string()),
        _ => ConfigurationError::new_err(e.to_string()),
    }
}

fn lifecycle_err(e: LifecycleError) -> PyErr {
    let msg = e.to_string();
    match e.kind() {
        FailureKind::MaxYearsExceeded => MaxYearsExceededError::new_err(msg),
        FailureKind::Infeasible => InfeasibleError::new_err(msg),
        FailureKind::Unbounded => UnboundedError::new_err(msg),
        FailureKind::NumericFailure => NumericError::new_err(msg),
        FailureKind::InvalidInput => ConfigurationError::new_err(msg),
    }
}

fn sweep_err(e: SweepError) -> PyErr {
    match e {
        SweepError::ThreadPool(_) | SweepError::EmptyCurve => NumericError::new_err(e.to_string()),
        _ => ConfigurationError::new_err(e.to_string()),
    }
}

fn csv_string<E: std::fmt::Display>(write: impl FnOnce(&mut Vec<u8>) -> Result<(), E>) -> PyResult<String> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| H2StackError::new_err(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| H2StackError::new_err(e.to_string()))
}

fn shares_dict<'py>(py: Python<'py>, s: &CostShares) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("ppa", s.ppa)?;
    d.set_item("storage", s.storage)?;
    d.set_item("surplus", s.surplus)?;
    d.set_item("peri", s.peri)?;
    d.set_item("stacks", s.stacks)?;
    Ok(d)
}

/// Full run configuration; the default is the reference plant.
#[pyclass(name = "RunConfig", module = "pyh2stack")]
pub struct PyRunConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyRunConfig {
    /// Parse a JSON document, or return the default configuration.
    #[new]
    #[pyo3(signature = (json = None))]
    fn new(json: Option<&str>) -> PyResult<Self> {
        let inner = match json {
            Some(text) => RunConfig::from_json_str(text).map_err(config_err)?,
            None => RunConfig::default(),
        };
        Ok(Self { inner })
    }

    /// Read and validate a JSON config file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        RunConfig::load(&path).map(|inner| Self { inner }).map_err(config_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json_pretty()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(config_err)
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    #[setter]
    fn set_horizon(&mut self, v: usize) {
        self.inner.horizon = v;
    }

    #[getter]
    fn j_points(&self) -> usize {
        self.inner.electrolyzer.j_points
    }

    #[setter]
    fn set_j_points(&mut self, v: usize) {
        self.inner.electrolyzer.j_points = v;
    }

    #[getter]
    fn threshold_percent(&self) -> f64 {
        self.inner.lifecycle.threshold_percent
    }

    #[setter]
    fn set_threshold_percent(&mut self, v: f64) {
        self.inner.lifecycle.threshold_percent = v;
    }

    #[getter]
    fn max_years(&self) -> u32 {
        self.inner.lifecycle.max_years
    }

    #[setter]
    fn set_max_years(&mut self, v: u32) {
        self.inner.lifecycle.max_years = v;
    }

    /// Preset name, or "custom".
    #[getter]
    fn scenario(&self) -> String {
        self.inner.scenario_name()
    }

    #[setter]
    fn set_scenario(&mut self, name: String) {
        self.inner.degradation.scenario = ScenarioRef::Preset(name);
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.degradation.alpha
    }

    #[setter]
    fn set_alpha(&mut self, v: f64) {
        self.inner.degradation.alpha = v;
    }

    #[getter]
    fn capex(&self) -> f64 {
        self.inner.economics.c_capex
    }

    #[setter]
    fn set_capex(&mut self, v: f64) {
        self.inner.economics.c_capex = v;
    }

    #[getter]
    fn sale_price(&self) -> f64 {
        self.inner.grid.sale_price
    }

    #[setter]
    fn set_sale_price(&mut self, v: f64) {
        self.inner.grid.sale_price = v;
    }

    #[getter]
    fn storage_enabled(&self) -> bool {
        self.inner.storage.enabled
    }

    #[setter]
    fn set_storage_enabled(&mut self, v: bool) {
        self.inner.storage.enabled = v;
    }

    /// Restrict the sweep grid; omitted axes keep their values.
    #[pyo3(signature = (thresholds = None, capex = None, alphas = None, scenarios = None, parallelism = None))]
    fn set_sweep(
        &mut self,
        thresholds: Option<Vec<f64>>,
        capex: Option<Vec<f64>>,
        alphas: Option<Vec<f64>>,
        scenarios: Option<Vec<String>>,
        parallelism: Option<usize>,
    ) {
        let s = &mut self.inner.sweep;
        if let Some(v) = thresholds {
            s.thresholds = v;
        }
        if let Some(v) = capex {
            s.capex = v;
        }
        if let Some(v) = alphas {
            s.alphas = v;
        }
        if let Some(v) = scenarios {
            s.scenarios = v;
        }
        if let Some(v) = parallelism {
            s.parallelism = v;
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "RunConfig(horizon={}, j_points={}, scenario={:?}, alpha={}, threshold_percent={})",
            self.inner.horizon,
            self.inner.electrolyzer.j_points,
            self.inner.scenario_name(),
            self.inner.degradation.alpha,
            self.inner.lifecycle.threshold_percent
        )
    }
}

/// Degradation-rate scenario; rates in µV/h.
#[pyclass(name = "DegradationScenario", module = "pyh2stack", frozen)]
pub struct PyScenario {
    inner: DegradationScenario,
}

#[pymethods]
impl PyScenario {
    /// Constant rate when only `rho0` is given.
    #[new]
    #[pyo3(signature = (rho0, rho1 = None, pi_infl = 1.0, alpha = degradation::DEFAULT_ALPHA))]
    fn new(rho0: f64, rho1: Option<f64>, pi_infl: f64, alpha: f64) -> PyResult<Self> {
        let inner = match rho1 {
            Some(r1) => DegradationScenario::inflection(rho0, r1, pi_infl, alpha),
            None => DegradationScenario::constant(rho0, alpha),
        };
        inner.validate().map_err(|e| ConfigurationError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (name, alpha = None))]
    fn preset(name: &str, alpha: Option<f64>) -> PyResult<Self> {
        let s = DegradationScenario::preset(name).map_err(|e| ConfigurationError::new_err(e.to_string()))?;
        Ok(Self {
            inner: alpha.map_or(s, |a| s.with_alpha(a)),
        })
    }

    #[getter]
    fn rho0(&self) -> f64 {
        self.inner.rho0
    }

    #[getter]
    fn rho1(&self) -> f64 {
        self.inner.rho1
    }

    #[getter]
    fn pi_infl(&self) -> f64 {
        self.inner.pi_infl
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    /// Degradation rate in µV/h at load fraction `pi`.
    fn rate(&self, pi: f64) -> PyResult<f64> {
        degradation::degradation_rate(&self.inner, pi).map_err(|e| ConfigurationError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "DegradationScenario(rho0={}, rho1={}, pi_infl={}, alpha={})",
            s.rho0, s.rho1, s.pi_infl, s.alpha
        )
    }
}

#[pyclass(name = "LifecycleResult", module = "pyh2stack", frozen)]
pub struct PyLifecycleResult {
    inner: LifecycleResult,
}

#[pymethods]
impl PyLifecycleResult {
    #[getter]
    fn eol_years(&self) -> u32 {
        self.inner.eol_years
    }

    #[getter]
    fn threshold_percent(&self) -> f64 {
        self.inner.threshold_percent
    }

    #[getter]
    fn lcoh_av(&self) -> f64 {
        self.inner.lcoh.lcoh_av
    }

    #[getter]
    fn shares<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        shares_dict(py, &self.inner.lcoh.shares)
    }

    /// One dict per simulated year; costs are annualised €.
    #[getter]
    fn years<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .years
            .iter()
            .map(|y| {
                let d = PyDict::new(py);
                d.set_item("year", y.year)?;
                d.set_item("r_start_percent", y.r_start_percent)?;
                d.set_item("r_end_percent", y.r_end_percent)?;
                d.set_item("du_star_v", y.du_star_v)?;
                d.set_item("eps_nom", y.eps_nom)?;
                d.set_item("c_ppa", y.costs.c_ppa)?;
                d.set_item("c_grid", y.costs.c_grid)?;
                d.set_item("c_storage", y.costs.c_storage)?;
                d.set_item("r_surplus", y.costs.r_surplus)?;
                d.set_item("mean_load", y.load.mean)?;
                d.set_item("storage_capacity_kg", y.storage_capacity_kg)?;
                Ok(d)
            })
            .collect()
    }

    fn to_csv(&self) -> PyResult<String> {
        csv_string(|w| self.inner.write_csv(w))
    }

    fn summary_csv(&self) -> PyResult<String> {
        csv_string(|w| self.inner.write_summary_csv(w))
    }

    fn __repr__(&self) -> String {
        format!(
            "LifecycleResult(eol_years={}, lcoh_av={:.6})",
            self.inner.eol_years, self.inner.lcoh.lcoh_av
        )
    }
}

#[pyclass(name = "DispatchResult", module = "pyh2stack", frozen)]
pub struct PyDispatchResult {
    inner: DispatchSolution,
}

#[pymethods]
impl PyDispatchResult {
    /// Objective over the simulated horizon in €.
    #[getter]
    fn objective(&self) -> f64 {
        self.inner.costs.net()
    }

    #[getter]
    fn costs<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = &self.inner.costs;
        let d = PyDict::new(py);
        d.set_item("c_ppa", c.c_ppa)?;
        d.set_item("c_grid", c.c_grid)?;
        d.set_item("c_storage", c.c_storage)?;
        d.set_item("r_surplus", c.r_surplus)?;
        Ok(d)
    }

    /// Booked capacity per source in kW.
    #[getter]
    fn bookings<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for b in &self.inner.bookings {
            d.set_item(b.source.as_str(), b.capacity_kw)?;
        }
        Ok(d)
    }

    #[getter]
    fn storage_capacity_kg(&self) -> f64 {
        self.inner.storage_capacity_kg
    }

    #[getter]
    fn p_ely(&self) -> Vec<f64> {
        self.inner.p_ely.clone()
    }

    #[getter]
    fn m_dot_ely(&self) -> Vec<f64> {
        self.inner.m_dot_ely.clone()
    }

    #[getter]
    fn m_level(&self) -> Vec<f64> {
        self.inner.m_level.clone()
    }

    fn source_power(&self, source: &str) -> PyResult<Vec<f64>> {
        let s: Source = source.parse().map_err(|e: h2stack::timeseries::TimeseriesError| {
            ConfigurationError::new_err(e.to_string())
        })?;
        Ok(self.inner.source_power(s).map(<[f64]>::to_vec).unwrap_or_default())
    }

    fn to_csv(&self) -> PyResult<String> {
        csv_string(|w| self.inner.write_csv(w))
    }
}

#[pyclass(name = "SweepTable", module = "pyh2stack", frozen)]
pub struct PySweepTable {
    inner: SweepTable,
}

#[pymethods]
impl PySweepTable {
    fn to_csv(&self) -> PyResult<String> {
        csv_string(|w| self.inner.write_csv(w))
    }

    /// One dict per grid cell.
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .records()
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("scenario", &r.scenario)?;
                d.set_item("alpha", r.alpha)?;
                d.set_item("capex", r.capex)?;
                d.set_item("threshold_percent", r.threshold_percent)?;
                d.set_item("eol_years", r.eol_years)?;
                d.set_item("lcoh_av", r.lcoh_av)?;
                d.set_item("is_optimum", r.is_optimum)?;
                d.set_item("status", r.status.to_string())?;
                Ok(d)
            })
            .collect()
    }

    /// LCOH-minimal point per (scenario, alpha, capex); None when every
    /// cell of a curve failed.
    fn optima<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .curves
            .iter()
            .map(|c| {
                let d = PyDict::new(py);
                d.set_item("scenario", &c.scenario)?;
                d.set_item("alpha", c.alpha)?;
                d.set_item("capex", c.capex)?;
                d.set_item("threshold_percent", c.optimum.map(|o| o.threshold_percent))?;
                d.set_item("eol_years", c.optimum.map(|o| o.eol_years))?;
                d.set_item("lcoh_av", c.optimum.map(|o| o.lcoh_av))?;
                Ok(d)
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.curves.iter().map(|c| c.points.len()).sum()
    }
}

fn scenario_for(config: &RunConfig, scenario: Option<&PyScenario>) -> PyResult<DegradationScenario> {
    match scenario {
        Some(s) => Ok(s.inner),
        None => config.scenario().map_err(config_err),
    }
}

/// Simulate one stack life.
#[pyfunction]
#[pyo3(signature = (config, scenario = None, threshold = None, max_years = None))]
fn simulate_lifecycle(
    py: Python<'_>,
    config: &PyRunConfig,
    scenario: Option<&PyScenario>,
    threshold: Option<f64>,
    max_years: Option<u32>,
) -> PyResult<PyLifecycleResult> {
    let cfg = &config.inner;
    let scenario = scenario_for(cfg, scenario)?;
    let setup = cfg.setup().map_err(config_err)?;
    let threshold = threshold.unwrap_or(cfg.lifecycle.threshold_percent);
    let max_years = max_years.unwrap_or(cfg.lifecycle.max_years);
    py.detach(|| lifecycle::simulate_lifecycle(&setup, &scenario, threshold, max_years))
        .map(|inner| PyLifecycleResult { inner })
        .map_err(lifecycle_err)
}

/// Dispatch of operating year `year`, after simulating the years before it.
#[pyfunction]
#[pyo3(signature = (config, year = 1, scenario = None))]
fn solve_dispatch(
    py: Python<'_>,
    config: &PyRunConfig,
    year: u32,
    scenario: Option<&PyScenario>,
) -> PyResult<PyDispatchResult> {
    if year == 0 {
        return Err(ConfigurationError::new_err("years are counted from 1"));
    }
    let cfg = &config.inner;
    let scenario = scenario_for(cfg, scenario)?;
    let setup = cfg.setup().map_err(config_err)?;
    py.detach(|| {
        let mut state = degradation::DegradationState::fresh(setup.electrolyzer.j_points);
        for _ in 1..year {
            state = lifecycle::year_step(&setup, &scenario, &state)?.1;
        }
        lifecycle::dispatch_for_state(&setup, &state)
    })
    .map(|inner| PyDispatchResult { inner })
    .map_err(lifecycle_err)
}

/// Evaluate the configured sweep grid.
#[pyfunction]
#[pyo3(signature = (config, parallelism = None))]
fn sweep_grid(py: Python<'_>, config: &PyRunConfig, parallelism: Option<usize>) -> PyResult<PySweepTable> {
    let cfg = &config.inner;
    let setup = cfg.setup().map_err(config_err)?;
    let mut grid = cfg.sweep.clone();
    if let Some(p) = parallelism {
        grid.parallelism = p;
    }
    let max_years = cfg.lifecycle.max_years;
    py.detach(|| sweep::sweep_grid(&setup, &grid, max_years))
        .map(|inner| PySweepTable { inner })
        .map_err(sweep_err)
}

/// Capital recovery factor A(r, t).
#[pyfunction]
fn annuity_factor(r: f64, t: u32) -> f64 {
    economics::annuity_factor(r, t)
}

/// kWh/kg of specific energy per volt of cell voltage.
#[pyfunction]
fn faraday_factor() -> f64 {
    degradation::faraday_factor()
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    PRESET_NAMES.to_vec()
}

/// Add every class, function and exception to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyLifecycleResult>()?;
    m.add_class::<PyDispatchResult>()?;
    m.add_class::<PySweepTable>()?;
    m.add_function(wrap_pyfunction!(simulate_lifecycle, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dispatch, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_grid, m)?)?;
    m.add_function(wrap_pyfunction!(annuity_factor, m)?)?;
    m.add_function(wrap_pyfunction!(faraday_factor, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add("H2StackError", py.get_type::<H2StackError>())?;
    m.add("ConfigurationError", py.get_type::<ConfigurationError>())?;
    m.add("InfeasibleError", py.get_type::<InfeasibleError>())?;
    m.add("UnboundedError", py.get_type::<UnboundedError>())?;
    m.add("NumericError", py.get_type::<NumericError>())?;
    m.add("MaxYearsExceededError", py.get_type::<MaxYearsExceededError>())?;
    Ok(())
}

#[pymodule]
fn pyh2stack(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
