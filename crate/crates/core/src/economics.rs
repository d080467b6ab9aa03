//! Annuity-based electrolyzer costs and the averaged LCOH.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::output::fmt_g6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconomicsError {
    #[error("lifetime must contain at least one year")]
    EmptyLifetime,
    #[error("expected {expected} year records, got {found}")]
    RecordCount { expected: usize, found: usize },
    #[error("annual hydrogen mass must be positive, got {0} kg")]
    NoDemand(f64),
    #[error("invalid economic parameter: {0}")]
    InvalidTerms(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicTerms {
    /// Specific CAPEX in €/kW.
    pub c_capex: f64,
    pub s_peri: f64,
    pub s_stacks: f64,
    /// Fixed OPEX in €/(kW·a).
    pub c_opex_fix: f64,
    /// Depreciation period of the peripherals in years.
    pub t_dep_peri: u32,
    pub r_in: f64,
    /// Water price in €/m³.
    pub c_water: f64,
    /// Water use in kg H2O per kg H2.
    pub w_ely: f64,
}

impl Default for EconomicTerms {
    fn default() -> Self {
        Self {
            c_capex: 1252.35,
            s_peri: 0.75,
            s_stacks: 0.25,
            c_opex_fix: 23.45,
            t_dep_peri: 20,
            r_in: 0.07,
            c_water: 3.725,
            w_ely: 14.0,
        }
    }
}

const WATER_DENSITY: f64 = 1000.0;

impl EconomicTerms {
    pub fn validate(&self) -> Result<(), EconomicsError> {
        let bad = |m: &str| Err(EconomicsError::InvalidTerms(m.to_string()));
        if !(self.c_capex >= 0.0 && self.c_capex.is_finite()) {
            return bad("c_capex must be non-negative");
        }
        if !(self.s_peri >= 0.0 && self.s_stacks >= 0.0)
            || (self.s_peri + self.s_stacks - 1.0).abs() > 1e-9
        {
            return bad("cost shares must be non-negative and sum to 1");
        }
        if !(self.c_opex_fix >= 0.0 && self.c_water >= 0.0 && self.w_ely >= 0.0) {
            return bad("OPEX, water price and water use must be non-negative");
        }
        if self.t_dep_peri < 1 {
            return bad("t_dep_peri must be at least 1 year");
        }
        if !(self.r_in > 0.0 && self.r_in.is_finite()) {
            return bad("r_in must be positive");
        }
        Ok(())
    }
}

/// Capital recovery factor r(1+r)^t / ((1+r)^t − 1); 1/t at r = 0.
pub fn annuity_factor(r: f64, t: u32) -> f64 {
    assert!(t >= 1, "annuity period must be at least one year");
    if r == 0.0 {
        return 1.0 / t as f64;
    }
    let q = (1.0 + r).powi(t as i32);
    r * q / (q - 1.0)
}

/// Yearly peripheral cost: CAPEX annuity, fixed OPEX and water, in €.
pub fn peripheral_cost_year(terms: &EconomicTerms, p_nom: f64, annual_h2_kg: f64) -> f64 {
    peripheral_parts(terms, p_nom, annual_h2_kg).iter().sum()
}

/// (CAPEX annuity, fixed OPEX, water) parts of the peripheral cost.
pub fn peripheral_parts(terms: &EconomicTerms, p_nom: f64, annual_h2_kg: f64) -> [f64; 3] {
    [
        p_nom * terms.c_capex * terms.s_peri * annuity_factor(terms.r_in, terms.t_dep_peri),
        p_nom * terms.c_opex_fix,
        terms.c_water * terms.w_ely / WATER_DENSITY * annual_h2_kg,
    ]
}

/// Yearly stack cost with the stack share amortised over `lifetime` years.
pub fn stack_cost_year(terms: &EconomicTerms, p_nom: f64, lifetime: u32) -> f64 {
    p_nom * terms.c_capex * terms.s_stacks * annuity_factor(terms.r_in, lifetime)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct YearCosts {
    /// Electricity purchase (PPA plus any grid purchase), €.
    pub c_ppa: f64,
    pub c_storage: f64,
    pub r_surplus: f64,
    pub c_peri: f64,
    pub c_stacks: f64,
}

impl YearCosts {
    pub fn total(&self) -> f64 {
        self.c_ppa + self.c_storage - self.r_surplus + self.c_peri + self.c_stacks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LcohMode {
    /// Lifetime cost over lifetime hydrogen.
    #[default]
    Averaged,
    /// Sum of yearly costs over one year of hydrogen.
    LiteralSum,
}

/// Component shares of the total cost; revenue enters negatively.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CostShares {
    pub ppa: f64,
    pub storage: f64,
    pub surplus: f64,
    pub peri: f64,
    pub stacks: f64,
}

impl CostShares {
    pub fn sum(&self) -> f64 {
        self.ppa + self.storage + self.surplus + self.peri + self.stacks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LcohBreakdown {
    pub years: Vec<YearCosts>,
    pub totals: YearCosts,
    pub annual_mass_kg: f64,
    pub eol_years: u32,
    /// €/kg.
    pub lcoh_av: f64,
    pub shares: CostShares,
    pub mode: LcohMode,
}

pub fn lcoh(
    years: &[YearCosts],
    annual_mass_kg: f64,
    eol: u32,
    mode: LcohMode,
) -> Result<LcohBreakdown, EconomicsError> {
    if eol == 0 || years.is_empty() {
        return Err(EconomicsError::EmptyLifetime);
    }
    if years.len() != eol as usize {
        return Err(EconomicsError::RecordCount {
            expected: eol as usize,
            found: years.len(),
        });
    }
    if !(annual_mass_kg > 0.0) {
        return Err(EconomicsError::NoDemand(annual_mass_kg));
    }
    let mut totals = YearCosts::default();
    for y in years {
        totals.c_ppa += y.c_ppa;
        totals.c_storage += y.c_storage;
        totals.r_surplus += y.r_surplus;
        totals.c_peri += y.c_peri;
        totals.c_stacks += y.c_stacks;
    }
    let total = totals.total();
    let denominator = match mode {
        LcohMode::Averaged => eol as f64 * annual_mass_kg,
        LcohMode::LiteralSum => annual_mass_kg,
    };
    let shares = if total != 0.0 {
        CostShares {
            ppa: totals.c_ppa / total,
            storage: totals.c_storage / total,
            surplus: -totals.r_surplus / total,
            peri: totals.c_peri / total,
            stacks: totals.c_stacks / total,
        }
    } else {
        CostShares::default()
    };
    Ok(LcohBreakdown {
        years: years.to_vec(),
        totals,
        annual_mass_kg,
        eol_years: eol,
        lcoh_av: total / denominator,
        shares,
        mode,
    })
}

impl LcohBreakdown {
    /// CSV `year,c_ppa,c_storage,r_surplus,c_peri,c_stacks`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["year", "c_ppa", "c_storage", "r_surplus", "c_peri", "c_stacks"])?;
        for (k, y) in self.years.iter().enumerate() {
            w.write_record([
                (k + 1).to_string(),
                fmt_g6(y.c_ppa),
                fmt_g6(y.c_storage),
                fmt_g6(y.r_surplus),
                fmt_g6(y.c_peri),
                fmt_g6(y.c_stacks),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mid_capex() -> EconomicTerms {
        EconomicTerms {
            c_capex: 1252.345,
            ..EconomicTerms::default()
        }
    }

    #[test]
    fn annuity_examples() {
        assert!((annuity_factor(0.07, 20) - 0.094_393).abs() < 1e-6);
        assert!((annuity_factor(0.07, 7) - 0.185_553).abs() < 1e-6);
        assert_relative_eq!(annuity_factor(0.07, 1), 1.07, max_relative = 1e-14);
        assert_eq!(annuity_factor(0.0, 4), 0.25);
    }

    #[test]
    fn peripheral_cost_defaults() {
        let parts = peripheral_parts(&mid_capex(), 300_000.0, 28_032_000.0);
        // 375 703 500 € CAPEX · 0.75 · A(0.07, 20); see the decisions log for
        // the difference to the rounded figure quoted elsewhere.
        let capex_part = 300_000.0 * 1252.345 * 0.75 * 0.07 * 1.07f64.powi(20) / (1.07f64.powi(20) - 1.0);
        assert_relative_eq!(parts[0], capex_part, max_relative = 1e-12);
        assert_relative_eq!(parts[0], 26.5978e6, max_relative = 1e-5);
        assert_relative_eq!(parts[1], 7.035e6, max_relative = 1e-12);
        assert_relative_eq!(parts[2], 1.461_868_8e6, max_relative = 1e-7);
        let no_water = peripheral_cost_year(&mid_capex(), 300_000.0, 0.0);
        assert_relative_eq!(no_water, parts[0] + parts[1], max_relative = 1e-14);
        let free = EconomicTerms { c_capex: 0.0, ..mid_capex() };
        assert_relative_eq!(
            peripheral_cost_year(&free, 300_000.0, 28_032_000.0),
            parts[1] + parts[2],
            max_relative = 1e-14
        );
    }

    #[test]
    fn stack_cost_examples() {
        assert_relative_eq!(stack_cost_year(&mid_capex(), 300_000.0, 7), 17.428e6, max_relative = 1e-4);
        assert_relative_eq!(
            stack_cost_year(&mid_capex(), 300_000.0, 1),
            300_000.0 * 1252.345 * 0.25 * 1.07,
            max_relative = 1e-14
        );
        let low = EconomicTerms { c_capex: 502.43, ..mid_capex() };
        assert_relative_eq!(stack_cost_year(&low, 300_000.0, 5), 9.191e6, max_relative = 1e-3);
    }

    #[test]
    fn lcoh_examples() {
        let one = YearCosts { c_ppa: 28.032e6, ..YearCosts::default() };
        let b = lcoh(&[one], 28_032_000.0, 1, LcohMode::Averaged).unwrap();
        assert_relative_eq!(b.lcoh_av, 1.0, max_relative = 1e-14);
        let two = lcoh(&[one, one], 28_032_000.0, 2, LcohMode::Averaged).unwrap();
        assert_relative_eq!(two.lcoh_av, 1.0, max_relative = 1e-14);
        let literal = lcoh(&[one, one], 28_032_000.0, 2, LcohMode::LiteralSum).unwrap();
        assert_relative_eq!(literal.lcoh_av, 2.0, max_relative = 1e-14);
        assert_eq!(lcoh(&[], 1.0, 0, LcohMode::Averaged), Err(EconomicsError::EmptyLifetime));
        assert!(lcoh(&[one], 1.0, 2, LcohMode::Averaged).is_err());
    }

    #[test]
    fn breakdown_csv_layout() {
        let y = YearCosts { c_ppa: 1.0, c_storage: 2.0, r_surplus: 0.5, c_peri: 3.0, c_stacks: 4.0 };
        let b = lcoh(&[y], 10.0, 1, LcohMode::Averaged).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "year,c_ppa,c_storage,r_surplus,c_peri,c_stacks\n1,1,2,0.5,3,4\n");
    }

    proptest! {
        #[test]
        fn annuity_sanity(r in 1e-4f64..0.3, t in 1u32..60) {
            let a = annuity_factor(r, t);
            prop_assert!(a > r);
            prop_assert!(annuity_factor(r, t + 1) < a);
        }

        #[test]
        fn annuity_tends_to_straight_line(t in 1u32..60) {
            prop_assert!((annuity_factor(1e-9, t) * t as f64 - 1.0).abs() < 1e-6);
        }

        #[test]
        fn shares_sum_to_one(
            costs in prop::collection::vec((0.0f64..1e7, 0.0f64..1e6, 0.0f64..1e5, 1e5f64..1e7, 1e5f64..1e7), 1..20)
        ) {
            let years: Vec<YearCosts> = costs
                .iter()
                .map(|&(c_ppa, c_storage, r_surplus, c_peri, c_stacks)| YearCosts { c_ppa, c_storage, r_surplus, c_peri, c_stacks })
                .collect();
            let b = lcoh(&years, 1e6, years.len() as u32, LcohMode::Averaged).unwrap();
            prop_assert!((b.shares.sum() - 1.0).abs() <= 1e-9);
            prop_assert!(b.lcoh_av >= 0.0);
        }

        #[test]
        fn stack_cost_falls_with_lifetime(capex in 1.0f64..3000.0, t in 1u32..40) {
            let terms = EconomicTerms { c_capex: capex, ..EconomicTerms::default() };
            prop_assert!(stack_cost_year(&terms, 300_000.0, t + 1) < stack_cost_year(&terms, 300_000.0, t));
        }
    }
}
