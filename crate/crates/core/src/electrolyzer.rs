//! Beginning-of-life efficiency curve and its piecewise-linear envelope.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElectrolyzerError {
    #[error("load fraction {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("envelope slopes increase between segments {segment} and {next} ({a} < {b})", next = segment + 1)]
    NonConcave { segment: usize, a: f64, b: f64 },
    #[error("expected {expected} energy-demand points, got {found}")]
    PointCount { expected: usize, found: usize },
    #[error("invalid electrolyzer parameter: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrolyzerSpec {
    /// Nominal power in kW.
    pub p_nom: f64,
    /// Specific energy demand at nominal load in kWh/kg.
    pub eps_nom: f64,
    /// Relative decrease of ε per 10 % load reduction (0.01 = 1 %).
    pub partload_gain: f64,
    /// Number of linearisation grid points J.
    pub j_points: usize,
}

impl Default for ElectrolyzerSpec {
    fn default() -> Self {
        Self {
            p_nom: 300_000.0,
            eps_nom: 52.5,
            partload_gain: 0.01,
            j_points: 37,
        }
    }
}

impl ElectrolyzerSpec {
    pub fn validate(&self) -> Result<(), ElectrolyzerError> {
        let bad = |msg: &str| Err(ElectrolyzerError::InvalidSpec(msg.to_string()));
        if !(self.p_nom > 0.0 && self.p_nom.is_finite()) {
            return bad("p_nom must be positive");
        }
        if !(self.eps_nom > 0.0 && self.eps_nom.is_finite()) {
            return bad("eps_nom must be positive");
        }
        if !(0.0..0.1).contains(&self.partload_gain) {
            return bad("partload_gain must lie in [0, 0.1)");
        }
        if self.j_points < 2 {
            return bad("j_points must be at least 2");
        }
        Ok(())
    }

    /// Grid fractions π_j = j/(J−1).
    pub fn grid_fractions(&self) -> Vec<f64> {
        let last = (self.j_points - 1) as f64;
        (0..self.j_points).map(|j| j as f64 / last).collect()
    }

    /// Degradation-free ε at every grid point.
    pub fn bol_points(&self) -> Vec<f64> {
        self.grid_fractions()
            .into_iter()
            .map(|pi| bol_energy_demand(self, pi).expect("grid fractions are in range"))
            .collect()
    }
}

/// Degradation-free specific energy demand at load fraction `pi`, in kWh/kg.
pub fn bol_energy_demand(spec: &ElectrolyzerSpec, pi: f64) -> Result<f64, ElectrolyzerError> {
    if !(0.0..=1.0).contains(&pi) {
        return Err(ElectrolyzerError::OutOfRange(pi));
    }
    Ok(spec.eps_nom * (1.0 - spec.partload_gain * 10.0 * (1.0 - pi)))
}

/// Chord linearisation of ṁ(P) = P/ε(P/p_nom) over the grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseEnvelope {
    pub p_nom: f64,
    pub fractions: Vec<f64>,
    pub eps_per_point: Vec<f64>,
    /// Slopes a_lin in kg/kWh, one per segment.
    pub a_lin: Vec<f64>,
    /// Intercepts b_lin in kg/h, one per segment.
    pub b_lin: Vec<f64>,
}

impl PiecewiseEnvelope {
    pub fn num_segments(&self) -> usize {
        self.a_lin.len()
    }

    /// Hydrogen output at each grid point.
    pub fn mass_points(&self) -> Vec<f64> {
        self.fractions
            .iter()
            .zip(&self.eps_per_point)
            .map(|(pi, eps)| pi * self.p_nom / eps)
            .collect()
    }

    /// Envelope value min_j (a_j P + b_j) in kg/h.
    pub fn evaluate(&self, power_kw: f64) -> f64 {
        self.a_lin
            .iter()
            .zip(&self.b_lin)
            .map(|(a, b)| a * power_kw + b)
            .fold(f64::INFINITY, f64::min)
    }

    /// Least power whose envelope value reaches `mass_flow` (inverse of
    /// [`evaluate`](Self::evaluate) on the increasing part); `p_nom` when the
    /// flow is above the nominal point.
    pub fn min_power_for(&self, mass_flow: f64) -> f64 {
        if mass_flow <= 0.0 {
            return 0.0;
        }
        let m = self.mass_points();
        for j in 0..m.len() - 1 {
            if mass_flow <= m[j + 1] && m[j + 1] > m[j] {
                let p0 = self.fractions[j] * self.p_nom;
                let p1 = self.fractions[j + 1] * self.p_nom;
                return p0 + (mass_flow - m[j]) * (p1 - p0) / (m[j + 1] - m[j]);
            }
        }
        self.p_nom
    }
}

// Slopes that agree to this relative tolerance count as equal, so an
// exactly linear curve (zero part-load gain) is accepted.
const CONCAVITY_RTOL: f64 = 1e-12;

pub fn build_envelope(
    spec: &ElectrolyzerSpec,
    eps_per_point: &[f64],
) -> Result<PiecewiseEnvelope, ElectrolyzerError> {
    spec.validate()?;
    if eps_per_point.len() != spec.j_points {
        return Err(ElectrolyzerError::PointCount {
            expected: spec.j_points,
            found: eps_per_point.len(),
        });
    }
    if let Some(&bad) = eps_per_point.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(ElectrolyzerError::InvalidSpec(format!(
            "energy demand {bad} must be positive"
        )));
    }
    let fractions = spec.grid_fractions();
    let power: Vec<f64> = fractions.iter().map(|pi| pi * spec.p_nom).collect();
    let mass: Vec<f64> = power
        .iter()
        .zip(eps_per_point)
        .map(|(p, e)| p / e)
        .collect();

    let segments = spec.j_points - 1;
    let mut a_lin = Vec::with_capacity(segments);
    let mut b_lin = Vec::with_capacity(segments);
    for j in 0..segments {
        let a = (mass[j + 1] - mass[j]) / (power[j + 1] - power[j]);
        let b = if j == 0 { 0.0 } else { mass[j] - a * power[j] };
        a_lin.push(a);
        b_lin.push(b);
    }
    for j in 1..segments {
        if a_lin[j] > a_lin[j - 1] * (1.0 + CONCAVITY_RTOL) {
            return Err(ElectrolyzerError::NonConcave {
                segment: j - 1,
                a: a_lin[j - 1],
                b: a_lin[j],
            });
        }
    }
    Ok(PiecewiseEnvelope {
        p_nom: spec.p_nom,
        fractions,
        eps_per_point: eps_per_point.to_vec(),
        a_lin,
        b_lin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundMode {
    /// P_t − ṁ_t·ε_nom ≤ 0 with the current nominal-load ε.
    #[default]
    Relaxed,
    /// P_nom − ṁ_t·ε_nom ≤ 0, taken literally.
    Literal,
    Off,
}

/// Half-space `coef_p·P + coef_mdot·ṁ ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub coef_p: f64,
    pub coef_mdot: f64,
    pub rhs: f64,
}

impl HalfSpace {
    pub fn holds(&self, p: f64, mdot: f64, tol: f64) -> bool {
        self.coef_p * p + self.coef_mdot * mdot <= self.rhs + tol
    }
}

/// Lower bound on hydrogen output at the configured nominal-load ε.
pub fn lower_bound_constraint(spec: &ElectrolyzerSpec, mode: LowerBoundMode) -> Option<HalfSpace> {
    lower_bound_for(spec.p_nom, spec.eps_nom, mode)
}

/// Lower bound for an arbitrary nominal-load ε.
///
/// After degradation the caller passes the degraded nominal value so the
/// relaxed bound stays below the envelope.
pub fn lower_bound_for(p_nom: f64, eps_nom: f64, mode: LowerBoundMode) -> Option<HalfSpace> {
    match mode {
        LowerBoundMode::Relaxed => Some(HalfSpace {
            coef_p: 1.0,
            coef_mdot: -eps_nom,
            rhs: 0.0,
        }),
        LowerBoundMode::Literal => Some(HalfSpace {
            coef_p: 0.0,
            coef_mdot: -eps_nom,
            rhs: -p_nom,
        }),
        LowerBoundMode::Off => None,
    }
}
