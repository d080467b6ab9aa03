//! Run configuration: a single JSON document with every model parameter.
//!
//! Parsing reports the JSON path of the offending field; semantic
//! validation does the same for out-of-domain values. Relative file paths
//! are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degradation::{AccrualMode, DegradationScenario};
use crate::dispatch::{validate_terms, DispatchOptions, GridTerms, PpaTerms, StorageTerms};
use crate::economics::{EconomicTerms, LcohMode};
use crate::electrolyzer::{ElectrolyzerSpec, LowerBoundMode};
use crate::lifecycle::ModelSetup;
use crate::solver::{EmbeddedSimplex, ExternalSolver, LpSolver, SolverOptions};
use crate::sweep::SweepConfig;
use crate::timeseries::{
    constant_demand, load_capacity_factors, load_demand, synthetic_capacity_factors,
    CapacityFactorSeries, DemandSeries, Source, TimeseriesError,
};

/// Environment variable naming the config used when none is given.
pub const CONFIG_ENV: &str = "H2STACK_CONFIG";

/// The shipped default configuration.
pub const DEFAULT_CONFIG_JSON: &str = include_str!("../../../configs/default_config.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config value at `{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("file not found for `{path}`: {file}")]
    FileNotFound { path: String, file: PathBuf },
    /// Selling surplus at or above the cheapest purchase price makes the
    /// dispatch LP unbounded.
    #[error(
        "UnboundedSurplusArbitrage at `grid.sale_price`: sale price {sale} €/kWh is not below the \
         cheapest electricity price {cheapest} €/kWh; set flags.allow_surplus_arbitrage to override"
    )]
    SurplusArbitrage { sale: f64, cheapest: f64 },
    #[error("series for `{path}`: {source}")]
    Series {
        path: String,
        source: TimeseriesError,
    },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeriesConfig {
    /// `hour,value` CSV file.
    Csv { path: PathBuf },
    /// Deterministic synthetic weather.
    Synthetic { seed: u64 },
    /// The same factor in every hour.
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub source: Source,
    /// Pay-as-produced price in €/kWh.
    pub price: f64,
    pub series: SeriesConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandConfig {
    Constant { rate_kg_per_h: f64 },
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Preset(String),
    Custom {
        rho0: f64,
        rho1: f64,
        pi_infl: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationConfig {
    pub scenario: ScenarioRef,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifecycleConfig {
    /// Threshold R in %.
    pub threshold_percent: f64,
    pub max_years: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Flags {
    pub lower_bound: LowerBoundMode,
    pub lcoh_mode: LcohMode,
    pub accrual: AccrualMode,
    pub allow_surplus_arbitrage: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSolverConfig {
    pub command: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: Option<usize>,
    pub external: Option<ExternalSolverConfig>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: None,
            external: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: usize,
    pub dt_hours: f64,
    /// Hours per accounting year; results of shorter horizons are scaled up.
    pub year_hours: f64,
    pub electrolyzer: ElectrolyzerSpec,
    pub sources: Vec<SourceConfig>,
    pub demand: DemandConfig,
    pub storage: StorageTerms,
    pub grid: GridTerms,
    pub degradation: DegradationConfig,
    pub economics: EconomicTerms,
    pub lifecycle: LifecycleConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_json_str(DEFAULT_CONFIG_JSON).expect("shipped default config parses")
    }
}

impl RunConfig {
    /// Parse without validating.
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    /// Read, parse and validate a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn scenario(&self) -> Result<DegradationScenario, ConfigError> {
        let alpha = self.degradation.alpha;
        let s = match &self.degradation.scenario {
            ScenarioRef::Preset(name) => DegradationScenario::preset(name)
                .map_err(|e| invalid("degradation.scenario", e.to_string()))?
                .with_alpha(alpha),
            ScenarioRef::Custom { rho0, rho1, pi_infl } => {
                DegradationScenario::inflection(*rho0, *rho1, *pi_infl, alpha)
            }
        };
        s.validate()
            .map_err(|e| invalid("degradation.scenario", e.to_string()))?;
        Ok(s)
    }

    /// Name used for the configured scenario in outputs.
    pub fn scenario_name(&self) -> String {
        match &self.degradation.scenario {
            ScenarioRef::Preset(name) => name.clone(),
            ScenarioRef::Custom { .. } => "custom".into(),
        }
    }

    /// Check every parameter against its domain and every referenced file.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if !(self.dt_hours > 0.0 && self.dt_hours.is_finite()) {
            return Err(invalid("dt_hours", "must be positive"));
        }
        if !(self.year_hours > 0.0 && self.year_hours.is_finite()) {
            return Err(invalid("year_hours", "must be positive"));
        }
        self.electrolyzer
            .validate()
            .map_err(|e| invalid("electrolyzer", e.to_string()))?;
        if self.sources.is_empty() {
            return Err(invalid("sources", "at least one PPA source is required"));
        }
        for (i, s) in self.sources.iter().enumerate() {
            let at = format!("sources[{i}]");
            if !(s.price >= 0.0 && s.price.is_finite()) {
                return Err(invalid(format!("{at}.price"), "must be non-negative"));
            }
            if self.sources[..i].iter().any(|o| o.source == s.source) {
                return Err(invalid(format!("{at}.source"), format!("{} listed twice", s.source)));
            }
            match &s.series {
                SeriesConfig::Csv { path } => self.check_file(&format!("{at}.series.path"), path)?,
                SeriesConfig::Constant { value } if !(0.0..=1.0).contains(value) => {
                    return Err(invalid(format!("{at}.series.value"), "must lie in [0, 1]"));
                }
                _ => {}
            }
        }
        match &self.demand {
            DemandConfig::Constant { rate_kg_per_h } if !(*rate_kg_per_h >= 0.0 && rate_kg_per_h.is_finite()) => {
                return Err(invalid("demand.rate_kg_per_h", "must be non-negative"));
            }
            DemandConfig::Csv { path } => self.check_file("demand.path", path)?,
            _ => {}
        }
        let st = &self.storage;
        if !(st.capacity_fee >= 0.0) {
            return Err(invalid("storage.capacity_fee", "must be non-negative"));
        }
        if !(st.usage_fee >= 0.0) {
            return Err(invalid("storage.usage_fee", "must be non-negative"));
        }
        for (name, cap) in [("storage.max_in", st.max_in), ("storage.max_out", st.max_out)] {
            if cap.is_some_and(|c| !(c >= 0.0)) {
                return Err(invalid(name, "must be non-negative or null"));
            }
        }
        if !(self.grid.sale_price >= 0.0) {
            return Err(invalid("grid.sale_price", "must be non-negative"));
        }
        if !(self.grid.purchase_price >= 0.0) {
            return Err(invalid("grid.purchase_price", "must be non-negative"));
        }
        if !self.flags.allow_surplus_arbitrage && self.grid.sale_price > 0.0 {
            let mut cheapest = self.sources.iter().map(|s| s.price).fold(f64::INFINITY, f64::min);
            if self.grid.purchase_enabled {
                cheapest = cheapest.min(self.grid.purchase_price);
            }
            if self.grid.sale_price >= cheapest {
                return Err(ConfigError::SurplusArbitrage {
                    sale: self.grid.sale_price,
                    cheapest,
                });
            }
        }
        if !(0.0..=1.0).contains(&self.degradation.alpha) {
            return Err(invalid("degradation.alpha", "must lie in [0, 1]"));
        }
        self.scenario()?;
        self.economics
            .validate()
            .map_err(|e| invalid("economics", e.to_string()))?;
        if !(self.lifecycle.threshold_percent > 0.0 && self.lifecycle.threshold_percent.is_finite()) {
            return Err(invalid("lifecycle.threshold_percent", "must be positive"));
        }
        if self.lifecycle.max_years < 1 {
            return Err(invalid("lifecycle.max_years", "must be at least 1"));
        }
        self.sweep
            .validate()
            .map_err(|e| invalid("sweep", e.to_string()))?;
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(invalid("solver.tol", "must lie in (0, 1)"));
        }
        if let Some(ext) = &self.solver.external {
            if ext.command.as_os_str().is_empty() {
                return Err(invalid("solver.external.command", "must not be empty"));
            }
        }
        Ok(())
    }

    fn check_file(&self, at: &str, path: &Path) -> Result<(), ConfigError> {
        let full = self.resolve(path);
        if full.is_file() {
            Ok(())
        } else {
            Err(ConfigError::FileNotFound {
                path: at.to_string(),
                file: full,
            })
        }
    }

    fn load_series(&self, i: usize, s: &SourceConfig) -> Result<CapacityFactorSeries, ConfigError> {
        let at = format!("sources[{i}].series");
        let wrap = |source| ConfigError::Series {
            path: at.clone(),
            source,
        };
        let series = match &s.series {
            SeriesConfig::Csv { path } => {
                load_capacity_factors(&self.resolve(path), s.source, self.horizon).map_err(wrap)?
            }
            SeriesConfig::Synthetic { seed } => synthetic_capacity_factors(s.source, self.horizon, *seed),
            SeriesConfig::Constant { value } => {
                CapacityFactorSeries::new(s.source, vec![*value; self.horizon], 1.0).map_err(wrap)?
            }
        };
        series.with_step(self.dt_hours).map_err(wrap)
    }

    fn load_demand(&self) -> Result<DemandSeries, ConfigError> {
        let wrap = |source| ConfigError::Series {
            path: "demand".into(),
            source,
        };
        match &self.demand {
            DemandConfig::Constant { rate_kg_per_h } => constant_demand(*rate_kg_per_h, self.horizon).map_err(wrap),
            DemandConfig::Csv { path } => load_demand(&self.resolve(path), self.horizon).map_err(wrap),
        }
    }

    pub fn solver(&self) -> Arc<dyn LpSolver> {
        match &self.solver.external {
            Some(ext) => Arc::new(ExternalSolver {
                command: self.resolve(&ext.command),
                args: ext.args.clone(),
            }),
            None => Arc::new(EmbeddedSimplex {
                options: SolverOptions {
                    tol: self.solver.tol,
                    max_iters: self.solver.max_iters,
                },
            }),
        }
    }

    /// Validate, load every series and assemble the shared model inputs.
    pub fn setup(&self) -> Result<ModelSetup, ConfigError> {
        self.validate()?;
        let ppa = self
            .sources
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(PpaTerms {
                    price: s.price,
                    series: self.load_series(i, s)?,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let dispatch = DispatchOptions {
            lower_bound: self.flags.lower_bound,
            allow_surplus_arbitrage: self.flags.allow_surplus_arbitrage,
            year_hours: self.year_hours,
        };
        validate_terms(&ppa, &self.storage, &self.grid, &dispatch)
            .map_err(|e| invalid("grid", e.to_string()))?;
        Ok(ModelSetup {
            electrolyzer: self.electrolyzer.clone(),
            ppa,
            storage: self.storage.clone(),
            grid: self.grid.clone(),
            demand: self.load_demand()?,
            horizon: self.horizon,
            dt_hours: self.dt_hours,
            dispatch,
            accrual: self.flags.accrual,
            economics: self.economics.clone(),
            lcoh_mode: self.flags.lcoh_mode,
            solver: self.solver(),
        })
    }
}
