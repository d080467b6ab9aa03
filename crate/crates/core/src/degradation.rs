//! Year-by-year stack degradation.
//!
//! A load-dependent voltage rate is integrated over the dispatch profile,
//! split into a load-independent shift and a load-proportional tilt, and
//! converted to a specific-energy surcharge via Faraday's law.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FARADAY: f64 = 96_485.0;
pub const MOLAR_MASS_H2: f64 = 2.016e-3;
const JOULE_PER_KWH: f64 = 3.6e6;

/// Tolerance for the strict threshold comparison, in percentage points.
pub const EOL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DegradationError {
    #[error("load fraction {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("invalid degradation scenario: {0}")]
    InvalidScenario(String),
    #[error("unknown scenario preset `{0}`")]
    UnknownPreset(String),
}

/// 2F/M_H2 in kWh/(kg·V).
pub fn faraday_factor() -> f64 {
    2.0 * FARADAY / MOLAR_MASS_H2 / JOULE_PER_KWH
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationScenario {
    /// Base rate in µV/h.
    pub rho0: f64,
    /// Rate at nominal load in µV/h.
    pub rho1: f64,
    /// Inflection load fraction; 1.0 encodes a constant rate.
    pub pi_infl: f64,
    /// Shift share of the voltage surcharge.
    pub alpha: f64,
}

pub const DEFAULT_ALPHA: f64 = 0.4125;

pub const PRESET_NAMES: [&str; 10] = [
    "bottom_const",
    "low_const",
    "base_const",
    "high_const",
    "top_const",
    "infl_50",
    "infl_60",
    "infl_70",
    "infl_80",
    "infl_90",
];

impl DegradationScenario {
    pub fn constant(rho0: f64, alpha: f64) -> Self {
        Self {
            rho0,
            rho1: rho0,
            pi_infl: 1.0,
            alpha,
        }
    }

    pub fn inflection(rho0: f64, rho1: f64, pi_infl: f64, alpha: f64) -> Self {
        Self {
            rho0,
            rho1,
            pi_infl,
            alpha,
        }
    }

    /// Named preset with the default shift/tilt coefficient.
    pub fn preset(name: &str) -> Result<Self, DegradationError> {
        let a = DEFAULT_ALPHA;
        Ok(match name {
            "bottom_const" => Self::constant(2.5, a),
            "low_const" => Self::constant(5.0, a),
            "base_const" => Self::constant(7.5, a),
            "high_const" => Self::constant(10.0, a),
            "top_const" => Self::constant(12.5, a),
            "infl_50" => Self::inflection(7.5, 15.0, 0.5, a),
            "infl_60" => Self::inflection(7.5, 15.0, 0.6, a),
            "infl_70" => Self::inflection(7.5, 15.0, 0.7, a),
            "infl_80" => Self::inflection(7.5, 15.0, 0.8, a),
            "infl_90" => Self::inflection(7.5, 15.0, 0.9, a),
            other => return Err(DegradationError::UnknownPreset(other.to_string())),
        })
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    pub fn is_constant(&self) -> bool {
        self.pi_infl >= 1.0 || self.rho1 == self.rho0
    }

    pub fn validate(&self) -> Result<(), DegradationError> {
        let bad = |m: String| Err(DegradationError::InvalidScenario(m));
        if !(self.rho0 >= 0.0 && self.rho0.is_finite()) {
            return bad(format!("rho0 = {} must be non-negative", self.rho0));
        }
        if !(self.rho1 >= self.rho0 && self.rho1.is_finite()) {
            return bad(format!("rho1 = {} must be at least rho0", self.rho1));
        }
        if !(self.pi_infl > 0.0 && self.pi_infl <= 1.0) {
            return bad(format!("pi_infl = {} must lie in (0, 1]", self.pi_infl));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha = {} must lie in [0, 1]", self.alpha));
        }
        Ok(())
    }
}

/// Which hours accumulate degradation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccrualMode {
    #[default]
    AllHours,
    OperatingHoursOnly,
}

/// Degradation rate at load fraction `pi`, in µV/h.
pub fn degradation_rate(scenario: &DegradationScenario, pi: f64) -> Result<f64, DegradationError> {
    if !(0.0..=1.0).contains(&pi) {
        return Err(DegradationError::OutOfRange(pi));
    }
    Ok(rate_unchecked(scenario, pi))
}

fn rate_unchecked(s: &DegradationScenario, pi: f64) -> f64 {
    if pi <= s.pi_infl {
        s.rho0
    } else {
        s.rho0 + (s.rho1 - s.rho0) / (1.0 - s.pi_infl) * (pi - s.pi_infl)
    }
}

/// Nominal-load voltage increase ΔU* in V accumulated over `profile`.
///
/// Profile entries are clamped to [0, 1] to absorb solver round-off.
pub fn annual_voltage_increase(
    scenario: &DegradationScenario,
    profile: &[f64],
    dt_hours: f64,
    accrual: AccrualMode,
) -> f64 {
    let micro_volts: f64 = profile
        .iter()
        .filter(|&&pi| accrual == AccrualMode::AllHours || pi > 0.0)
        .map(|&pi| rate_unchecked(scenario, pi.clamp(0.0, 1.0)) * dt_hours)
        .sum();
    micro_volts * 1e-6
}

/// Voltage surcharge at load `pi`: α·ΔU* + π·(1−α)·ΔU*.
pub fn voltage_surcharge_at_load(du_star: f64, alpha: f64, pi: f64) -> f64 {
    if pi == 1.0 {
        // Shift and tilt add up to ΔU* at nominal load; keep that exact.
        return du_star;
    }
    alpha * du_star + pi * (1.0 - alpha) * du_star
}

/// Specific-energy surcharge in kWh/kg for a voltage surcharge in V.
pub fn voltage_to_energy(du: f64) -> f64 {
    faraday_factor() * du
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradationState {
    /// Σ ΔU*_k over completed years, in V.
    pub cumulative_du_star: f64,
    /// The year about to be operated (1 for a fresh stack).
    pub year_index: u32,
    /// Energy-demand surcharge per grid point, in kWh/kg.
    pub eps_surcharge: Vec<f64>,
}

impl DegradationState {
    pub fn fresh(grid_points: usize) -> Self {
        Self {
            cumulative_du_star: 0.0,
            year_index: 1,
            eps_surcharge: vec![0.0; grid_points],
        }
    }

    /// Surcharge at nominal load, in kWh/kg.
    pub fn nominal_surcharge(&self) -> f64 {
        voltage_to_energy(self.cumulative_du_star)
    }

    /// Degraded ε at each grid point.
    pub fn degraded_points(&self, bol_points: &[f64]) -> Vec<f64> {
        bol_points
            .iter()
            .zip(&self.eps_surcharge)
            .map(|(e, d)| e + d)
            .collect()
    }
}

pub fn apply_year(
    state: &DegradationState,
    du_star_year: f64,
    alpha: f64,
    fractions: &[f64],
) -> DegradationState {
    let cumulative = state.cumulative_du_star + du_star_year.max(0.0);
    DegradationState {
        cumulative_du_star: cumulative,
        year_index: state.year_index + 1,
        eps_surcharge: fractions
            .iter()
            .map(|&pi| voltage_to_energy(voltage_surcharge_at_load(cumulative, alpha, pi)))
            .collect(),
    }
}

/// Percentage increase of nominal-load energy demand.
pub fn degradation_fraction(state: &DegradationState, eps_nom_free: f64) -> f64 {
    state.nominal_surcharge() / eps_nom_free * 100.0
}

/// Strict end-of-life test.
pub fn exceeds_threshold(r_percent: f64, threshold_percent: f64) -> bool {
    r_percent > threshold_percent + EOL_TOLERANCE
}
