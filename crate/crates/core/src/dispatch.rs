//! Cost-minimal dispatch of PPAs, electrolyzer and cavern storage over one
//! horizon, formulated as a single LP.
//!
//! PPAs are pay-as-produced: the booked capacity P^PPA_s yields
//! P^PPA_s·f_s,t every hour and all of it is paid for; whatever the
//! electrolyzer does not take is surplus. Storage is priced by booked
//! capacity (pro-rated to the horizon) plus an injection fee.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::electrolyzer::{lower_bound_for, LowerBoundMode, PiecewiseEnvelope};
use crate::output::fmt_g6;
use crate::solver::{check_optimality, LpInstance, LpSolver, LpStatus, ResidualReport, SolverError};
use crate::timeseries::{CapacityFactorSeries, DemandSeries, Source};

const INF: f64 = f64::INFINITY;
/// Relative tolerance of the objective-vs-components cross-check.
pub const COST_CHECK_RTOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("{what} has {found} steps, expected {expected}")]
    LengthMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("{what} uses a {found} h step, expected {expected} h")]
    StepMismatch {
        what: String,
        expected: f64,
        found: f64,
    },
    #[error("invalid dispatch terms: {0}")]
    InvalidTerms(String),
    #[error(
        "surplus sale price {sale} €/kWh is not below the cheapest electricity price {cheapest} €/kWh; \
         the dispatch LP would be unbounded (set allow_surplus_arbitrage to override)"
    )]
    SurplusArbitrage { sale: f64, cheapest: f64 },
    #[error("dispatch infeasible: demand cannot be met with the available capacity factors and storage")]
    Infeasible,
    #[error("dispatch unbounded: surplus sale price {sale} €/kWh exceeds electricity price {cheapest} €/kWh")]
    UnboundedSurplusArbitrage { sale: f64, cheapest: f64 },
    #[error("dispatch unbounded")]
    Unbounded,
    #[error("LP iteration limit reached after {0} iterations")]
    IterationLimit(usize),
    #[error("objective {objective} disagrees with recomputed costs {recomputed}")]
    CostMismatch { objective: f64, recomputed: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpaTerms {
    /// Pay-as-produced price in €/kWh.
    pub price: f64,
    pub series: CapacityFactorSeries,
}

impl PpaTerms {
    pub fn source(&self) -> Source {
        self.series.source()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageTerms {
    pub enabled: bool,
    /// Capacity fee in €/(kg·a) on the booked maximum level.
    pub capacity_fee: f64,
    /// Usage fee in €/kg injected.
    pub usage_fee: f64,
    /// Injection cap in kg/h; `None` is unbounded.
    pub max_in: Option<f64>,
    /// Withdrawal cap in kg/h; `None` is unbounded.
    pub max_out: Option<f64>,
}

impl Default for StorageTerms {
    fn default() -> Self {
        Self {
            enabled: true,
            capacity_fee: 12.75,
            usage_fee: 0.36,
            max_in: None,
            max_out: None,
        }
    }
}

impl StorageTerms {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    fn active(&self) -> bool {
        self.enabled && self.max_in != Some(0.0) && self.max_out != Some(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridTerms {
    /// Remuneration of surplus power in €/kWh.
    pub sale_price: f64,
    pub purchase_enabled: bool,
    /// Grid purchase price in €/kWh, used when purchase is enabled.
    pub purchase_price: f64,
}

impl Default for GridTerms {
    fn default() -> Self {
        Self {
            sale_price: 0.0,
            purchase_enabled: false,
            purchase_price: 0.1976,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispatchOptions {
    pub lower_bound: LowerBoundMode,
    pub allow_surplus_arbitrage: bool,
    /// Hours in one accounting year; the capacity fee is pro-rated by
    /// horizon length over this value.
    pub year_hours: f64,
}

impl Default for DispatchOptions {
    fn default() -> Self {
        Self {
            lower_bound: LowerBoundMode::Relaxed,
            allow_surplus_arbitrage: false,
            year_hours: 8760.0,
        }
    }
}

/// Cheapest price at which power can enter the system.
fn cheapest_price(ppa: &[PpaTerms], grid: &GridTerms) -> f64 {
    let mut cheapest = ppa.iter().map(|p| p.price).fold(INF, f64::min);
    if grid.purchase_enabled {
        cheapest = cheapest.min(grid.purchase_price);
    }
    cheapest
}

/// Reject price combinations that make the LP unbounded unless overridden.
pub fn validate_terms(
    ppa: &[PpaTerms],
    storage: &StorageTerms,
    grid: &GridTerms,
    options: &DispatchOptions,
) -> Result<(), DispatchError> {
    let bad = |m: String| Err(DispatchError::InvalidTerms(m));
    for p in ppa {
        if !(p.price >= 0.0 && p.price.is_finite()) {
            return bad(format!("{} PPA price {} must be non-negative", p.source(), p.price));
        }
    }
    let mut seen = Vec::new();
    for p in ppa {
        if seen.contains(&p.source()) {
            return bad(format!("{} PPA listed twice", p.source()));
        }
        seen.push(p.source());
    }
    if !(storage.capacity_fee >= 0.0 && storage.usage_fee >= 0.0) {
        return bad("storage fees must be non-negative".into());
    }
    for cap in [storage.max_in, storage.max_out].into_iter().flatten() {
        if !(cap >= 0.0) {
            return bad(format!("storage flow cap {cap} must be non-negative"));
        }
    }
    if !(grid.sale_price >= 0.0 && grid.purchase_price >= 0.0) {
        return bad("grid prices must be non-negative".into());
    }
    if !(options.year_hours > 0.0) {
        return bad("year_hours must be positive".into());
    }
    let cheapest = cheapest_price(ppa, grid);
    if !options.allow_surplus_arbitrage && cheapest.is_finite() && grid.sale_price >= cheapest && grid.sale_price > 0.0 {
        return Err(DispatchError::SurplusArbitrage {
            sale: grid.sale_price,
            cheapest,
        });
    }
    Ok(())
}

/// Variable layout of a built dispatch LP. Hourly quantities occupy
/// contiguous blocks starting at the stored offset.
#[derive(Debug, Clone, PartialEq)]
struct Layout {
    horizon: usize,
    booking: Vec<usize>,
    p_ely: usize,
    p_surplus: usize,
    m_dot_ely: usize,
    p_buy: Option<usize>,
    /// (m_in, m_out, level, booked capacity) offsets when storage is active.
    storage: Option<(usize, usize, usize, usize)>,
}

/// A dispatch LP together with what is needed to read its solution back.
#[derive(Debug, Clone)]
pub struct DispatchProblem {
    pub instance: LpInstance,
    layout: Layout,
    dt_hours: f64,
    sources: Vec<Source>,
    prices: Vec<f64>,
    factors: Vec<Vec<f64>>,
    storage: StorageTerms,
    grid: GridTerms,
    capacity_fee_fraction: f64,
    cheapest: f64,
    envelope: PiecewiseEnvelope,
}

impl DispatchProblem {
    pub fn horizon(&self) -> usize {
        self.layout.horizon
    }

    pub fn dt_hours(&self) -> f64 {
        self.dt_hours
    }
}

#[allow(clippy::too_many_arguments)]
pub fn build_problem(
    ppa: &[PpaTerms],
    storage: &StorageTerms,
    grid: &GridTerms,
    demand: &DemandSeries,
    envelope: &PiecewiseEnvelope,
    horizon: usize,
    dt_hours: f64,
    options: &DispatchOptions,
) -> Result<DispatchProblem, DispatchError> {
    validate_terms(ppa, storage, grid, options)?;
    if demand.len() != horizon {
        return Err(DispatchError::LengthMismatch {
            what: "demand series".into(),
            expected: horizon,
            found: demand.len(),
        });
    }
    for p in ppa {
        if p.series.len() != horizon {
            return Err(DispatchError::LengthMismatch {
                what: format!("{} capacity factors", p.source()),
                expected: horizon,
                found: p.series.len(),
            });
        }
        if p.series.dt_hours() != dt_hours {
            return Err(DispatchError::StepMismatch {
                what: format!("{} capacity factors", p.source()),
                expected: dt_hours,
                found: p.series.dt_hours(),
            });
        }
    }
    for w in envelope.a_lin.windows(2) {
        if w[1] > w[0] * (1.0 + 1e-12) {
            return Err(DispatchError::InvalidTerms("envelope is not concave".into()));
        }
    }
    let p_nom = envelope.p_nom;
    let eps_nom = *envelope
        .eps_per_point
        .last()
        .ok_or_else(|| DispatchError::InvalidTerms("empty envelope".into()))?;
    let t_len = horizon;
    let dt = dt_hours;
    let mut lp = LpInstance::new();

    let booking: Vec<usize> = ppa
        .iter()
        .map(|p| lp.add_var(format!("P_PPA_{}", p.source()), 0.0, INF))
        .collect();
    let block = |lp: &mut LpInstance, name: &str, hi: f64| -> usize {
        let first = lp.num_vars();
        for t in 0..t_len {
            lp.add_var(format!("{name}[{t}]"), 0.0, hi);
        }
        first
    };
    let p_ely = block(&mut lp, "P_ely", p_nom);
    let p_surplus = block(&mut lp, "P_surplus", INF);
    let m_dot_ely = block(&mut lp, "m_dot_ely", INF);
    let p_buy = grid
        .purchase_enabled
        .then(|| block(&mut lp, "P_buy", INF));
    let storage_vars = storage.active().then(|| {
        let m_in = block(&mut lp, "m_dot_in", storage.max_in.unwrap_or(INF));
        let m_out = block(&mut lp, "m_dot_out", storage.max_out.unwrap_or(INF));
        let level = block(&mut lp, "m_level", INF);
        let cap = lp.add_var("m_storage_max", 0.0, INF);
        (m_in, m_out, level, cap)
    });

    // Objective.
    for (k, p) in ppa.iter().enumerate() {
        let produced: f64 = p.series.values().iter().sum::<f64>() * dt;
        lp.add_cost(booking[k], p.price * produced);
    }
    let capacity_fee_fraction = t_len as f64 * dt / options.year_hours;
    if let Some((m_in, _, _, cap)) = storage_vars {
        lp.add_cost(cap, storage.capacity_fee * capacity_fee_fraction);
        if storage.usage_fee != 0.0 {
            for t in 0..t_len {
                lp.add_cost(m_in + t, storage.usage_fee * dt);
            }
        }
    }
    if grid.sale_price != 0.0 {
        for t in 0..t_len {
            lp.add_cost(p_surplus + t, -grid.sale_price * dt);
        }
    }
    if let Some(buy) = p_buy {
        for t in 0..t_len {
            lp.add_cost(buy + t, grid.purchase_price * dt);
        }
    }

    let lower = lower_bound_for(p_nom, eps_nom, options.lower_bound);
    for t in 0..t_len {
        // Hydrogen balance.
        let mut row = vec![(m_dot_ely + t, 1.0)];
        if let Some((m_in, m_out, _, _)) = storage_vars {
            row.push((m_in + t, -1.0));
            row.push((m_out + t, 1.0));
        }
        lp.add_eq(row, demand.values()[t]);

        // Power balance.
        let mut row: Vec<(usize, f64)> = ppa
            .iter()
            .enumerate()
            .filter(|(_, p)| p.series.values()[t] != 0.0)
            .map(|(k, p)| (booking[k], p.series.values()[t]))
            .collect();
        if let Some(buy) = p_buy {
            row.push((buy + t, 1.0));
        }
        row.push((p_ely + t, -1.0));
        row.push((p_surplus + t, -1.0));
        lp.add_eq(row, 0.0);

        if let Some((m_in, m_out, level, cap)) = storage_vars {
            // Level recursion with cyclic closure.
            let prev = (t + t_len - 1) % t_len;
            let mut coeffs: BTreeMap<usize, f64> = BTreeMap::new();
            *coeffs.entry(level + t).or_default() += 1.0;
            *coeffs.entry(level + prev).or_default() -= 1.0;
            *coeffs.entry(m_in + t).or_default() -= dt;
            *coeffs.entry(m_out + t).or_default() += dt;
            lp.add_eq(coeffs.into_iter().filter(|(_, v)| *v != 0.0).collect(), 0.0);
            lp.add_le(vec![(level + t, 1.0), (cap, -1.0)], 0.0);
        }

        for (a, b) in envelope.a_lin.iter().zip(&envelope.b_lin) {
            lp.add_le(vec![(m_dot_ely + t, 1.0), (p_ely + t, -a)], *b);
        }
        if let Some(h) = lower {
            let mut row = Vec::with_capacity(2);
            if h.coef_p != 0.0 {
                row.push((p_ely + t, h.coef_p));
            }
            row.push((m_dot_ely + t, h.coef_mdot));
            lp.add_le(row, h.rhs);
        }
    }

    Ok(DispatchProblem {
        instance: lp,
        layout: Layout {
            horizon: t_len,
            booking,
            p_ely,
            p_surplus,
            m_dot_ely,
            p_buy,
            storage: storage_vars,
        },
        dt_hours,
        sources: ppa.iter().map(PpaTerms::source).collect(),
        prices: ppa.iter().map(|p| p.price).collect(),
        factors: ppa.iter().map(|p| p.series.values().to_vec()).collect(),
        storage: storage.clone(),
        grid: grid.clone(),
        capacity_fee_fraction,
        cheapest: cheapest_price(ppa, grid),
        envelope: envelope.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CostBreakdown {
    pub c_ppa: f64,
    /// Grid purchases; zero unless purchase is enabled.
    pub c_grid: f64,
    pub c_storage: f64,
    pub r_surplus: f64,
}

impl CostBreakdown {
    pub fn net(&self) -> f64 {
        self.c_ppa + self.c_grid + self.c_storage - self.r_surplus
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            c_ppa: self.c_ppa * factor,
            c_grid: self.c_grid * factor,
            c_storage: self.c_storage * factor,
            r_surplus: self.r_surplus * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Booking {
    pub source: Source,
    pub capacity_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchDiagnostics {
    pub iterations: usize,
    pub objective: f64,
    pub residuals: ResidualReport,
    pub variables: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchSolution {
    pub dt_hours: f64,
    /// Hourly production per booked source, kW.
    pub p_source: Vec<(Source, Vec<f64>)>,
    pub p_ely: Vec<f64>,
    pub p_surplus: Vec<f64>,
    pub p_buy: Vec<f64>,
    pub m_dot_ely: Vec<f64>,
    pub m_dot_in: Vec<f64>,
    pub m_dot_out: Vec<f64>,
    pub m_level: Vec<f64>,
    pub bookings: Vec<Booking>,
    pub storage_capacity_kg: f64,
    pub costs: CostBreakdown,
    pub diagnostics: DispatchDiagnostics,
}

fn nonneg(v: f64) -> f64 {
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

pub fn solve_dispatch(
    problem: &DispatchProblem,
    solver: &dyn LpSolver,
) -> Result<DispatchSolution, DispatchError> {
    let sol = solver.solve(&problem.instance)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(DispatchError::Infeasible),
        LpStatus::Unbounded => {
            let sale = problem.grid.sale_price;
            return Err(if sale > 0.0 && sale >= problem.cheapest {
                DispatchError::UnboundedSurplusArbitrage {
                    sale,
                    cheapest: problem.cheapest,
                }
            } else {
                DispatchError::Unbounded
            });
        }
        LpStatus::IterationLimit => return Err(DispatchError::IterationLimit(sol.iterations)),
    }
    let lay = &problem.layout;
    let t_len = lay.horizon;
    let dt = problem.dt_hours;
    let x = &sol.x;
    let hourly = |first: usize| -> Vec<f64> { (0..t_len).map(|t| nonneg(x[first + t])).collect() };

    let bookings: Vec<Booking> = problem
        .sources
        .iter()
        .zip(&lay.booking)
        .map(|(&source, &j)| Booking {
            source,
            capacity_kw: nonneg(x[j]),
        })
        .collect();
    let p_source: Vec<(Source, Vec<f64>)> = bookings
        .iter()
        .zip(&problem.factors)
        .map(|(b, f)| (b.source, f.iter().map(|v| v * b.capacity_kw).collect()))
        .collect();
    let zeros = vec![0.0; t_len];
    let (m_dot_in, m_dot_out, m_level, storage_capacity_kg) = match lay.storage {
        Some((i, o, l, c)) => (hourly(i), hourly(o), hourly(l), nonneg(x[c])),
        None => (zeros.clone(), zeros.clone(), zeros.clone(), 0.0),
    };
    let p_buy = lay.p_buy.map(hourly).unwrap_or_else(|| zeros.clone());
    let mut p_surplus = hourly(lay.p_surplus);
    let mut p_ely = hourly(lay.p_ely);
    let m_dot_ely = hourly(lay.m_dot_ely);
    // Power that is already paid for and has nowhere else to go can be
    // burnt below the envelope at no cost. Such co-optimal vertices are
    // moved to the least power producing the same hydrogen; the excess
    // becomes surplus.
    for t in 0..t_len {
        let needed = problem.envelope.min_power_for(m_dot_ely[t]);
        if needed < p_ely[t] {
            p_surplus[t] += p_ely[t] - needed;
            p_ely[t] = needed;
        }
    }

    let c_ppa: f64 = p_source
        .iter()
        .zip(&problem.prices)
        .map(|((_, p), price)| price * dt * p.iter().sum::<f64>())
        .sum();
    let c_grid = if problem.grid.purchase_enabled {
        problem.grid.purchase_price * dt * p_buy.iter().sum::<f64>()
    } else {
        0.0
    };
    let c_storage = if lay.storage.is_some() {
        problem.storage.capacity_fee * problem.capacity_fee_fraction * storage_capacity_kg
            + problem.storage.usage_fee * dt * m_dot_in.iter().sum::<f64>()
    } else {
        0.0
    };
    let r_surplus = problem.grid.sale_price * dt * p_surplus.iter().sum::<f64>();
    let costs = CostBreakdown {
        c_ppa,
        c_grid,
        c_storage,
        r_surplus,
    };
    let recomputed = costs.net();
    if (recomputed - sol.objective).abs() > COST_CHECK_RTOL * (1.0 + sol.objective.abs()) {
        return Err(DispatchError::CostMismatch {
            objective: sol.objective,
            recomputed,
        });
    }

    Ok(DispatchSolution {
        dt_hours: dt,
        p_source,
        p_ely,
        p_surplus,
        p_buy,
        m_dot_ely,
        m_dot_in,
        m_dot_out,
        m_level,
        bookings,
        storage_capacity_kg,
        costs,
        diagnostics: DispatchDiagnostics {
            iterations: sol.iterations,
            objective: sol.objective,
            residuals: check_optimality(&problem.instance, &sol),
            variables: problem.instance.num_vars(),
            constraints: problem.instance.num_constraints(),
        },
    })
}

/// Electrolyzer load fraction per step.
pub fn hourly_load_fractions(solution: &DispatchSolution, p_nom: f64) -> Vec<f64> {
    solution
        .p_ely
        .iter()
        .map(|p| (p / p_nom).clamp(0.0, 1.0))
        .collect()
}

impl DispatchSolution {
    pub fn horizon(&self) -> usize {
        self.p_ely.len()
    }

    pub fn source_power(&self, source: Source) -> Option<&[f64]> {
        self.p_source
            .iter()
            .find(|(s, _)| *s == source)
            .map(|(_, v)| v.as_slice())
    }

    /// Hourly CSV with one column per source (zero when not booked).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "hour",
            "P_onshore",
            "P_offshore",
            "P_solar",
            "P_ely",
            "P_surplus",
            "m_dot_ely",
            "m_dot_in",
            "m_dot_out",
            "m_level",
        ])?;
        let cols: Vec<Option<&[f64]>> = Source::ALL.iter().map(|s| self.source_power(*s)).collect();
        for t in 0..self.horizon() {
            let mut rec = vec![t.to_string()];
            for c in &cols {
                rec.push(fmt_g6(c.map_or(0.0, |v| v[t])));
            }
            for v in [
                self.p_ely[t],
                self.p_surplus[t],
                self.m_dot_ely[t],
                self.m_dot_in[t],
                self.m_dot_out[t],
                self.m_level[t],
            ] {
                rec.push(fmt_g6(v));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Largest hourly hydrogen-balance residual in kg/h.
    pub fn hydrogen_balance_residual(&self, demand: &[f64]) -> f64 {
        (0..self.horizon())
            .map(|t| (self.m_dot_ely[t] - self.m_dot_in[t] + self.m_dot_out[t] - demand[t]).abs())
            .fold(0.0, f64::max)
    }

    /// Largest hourly power-balance residual in kW.
    pub fn power_balance_residual(&self) -> f64 {
        (0..self.horizon())
            .map(|t| {
                let supply: f64 = self.p_source.iter().map(|(_, p)| p[t]).sum::<f64>() + self.p_buy[t];
                (supply - self.p_ely[t] - self.p_surplus[t]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest storage-recursion residual in kg, including the cyclic link.
    pub fn storage_closure_residual(&self) -> f64 {
        let t_len = self.horizon();
        (0..t_len)
            .map(|t| {
                let prev = self.m_level[(t + t_len - 1) % t_len];
                (self.m_level[t] - prev - (self.m_dot_in[t] - self.m_dot_out[t]) * self.dt_hours).abs()
            })
            .fold(0.0, f64::max)
    }
}
