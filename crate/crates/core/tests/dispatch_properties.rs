mod common;

use h2stack::dispatch::*;
use h2stack::electrolyzer::{build_envelope, ElectrolyzerSpec, PiecewiseEnvelope};
use h2stack::solver::EmbeddedSimplex;
use h2stack::timeseries::*;
use proptest::prelude::*;

const BALANCE_TOL: f64 = 1e-6;
const OBJ_RTOL: f64 = 1e-7;

#[derive(Debug, Clone)]
struct Case {
    horizon: usize,
    spec: ElectrolyzerSpec,
    surcharge: f64,
    ppa: Vec<PpaTerms>,
    demand: DemandSeries,
    storage: StorageTerms,
    grid: GridTerms,
}

impl Case {
    fn envelope(&self, surcharge: f64) -> PiecewiseEnvelope {
        let eps: Vec<f64> = self.spec.bol_points().iter().map(|e| e + surcharge).collect();
        build_envelope(&self.spec, &eps).unwrap()
    }

    fn solve_with(&self, ppa: &[PpaTerms], surcharge: f64) -> Result<DispatchSolution, DispatchError> {
        let problem = build_problem(
            ppa,
            &self.storage,
            &self.grid,
            &self.demand,
            &self.envelope(surcharge),
            self.horizon,
            1.0,
            &DispatchOptions::default(),
        )?;
        solve_dispatch(&problem, &EmbeddedSimplex::default())
    }

    fn solve(&self) -> Result<DispatchSolution, DispatchError> {
        self.solve_with(&self.ppa, self.surcharge)
    }
}

fn case_strategy(max_horizon: usize) -> impl Strategy<Value = Case> {
    (
        2..=max_horizon,
        2usize..=9,
        0.0..0.02f64,
        0.0..4.0f64,
        proptest::sample::subsequence(vec![Source::Onshore, Source::Offshore, Source::Solar], 1..=3),
        any::<u64>(),
        proptest::collection::vec(0.03..0.12f64, 3),
        0.0..4000.0f64,
        any::<bool>(),
        prop_oneof![Just(None), (50.0..5000.0f64).prop_map(Some)],
        0.0..0.9f64,
        any::<bool>(),
    )
        .prop_map(
            |(horizon, j, gain, surcharge, sources, seed, prices, rate, storage_on, cap, sale_frac, buy)| {
                let ppa: Vec<PpaTerms> = sources
                    .iter()
                    .zip(&prices)
                    .enumerate()
                    .map(|(i, (&s, &price))| PpaTerms {
                        price,
                        series: synthetic_capacity_factors(s, horizon, seed.wrapping_add(i as u64)),
                    })
                    .collect();
                let cheapest = ppa.iter().map(|p| p.price).fold(f64::INFINITY, f64::min);
                let demand: Vec<f64> = (0..horizon)
                    .map(|t| rate * (0.75 + 0.25 * ((t as f64) * 0.7).sin()))
                    .collect();
                Case {
                    horizon,
                    spec: ElectrolyzerSpec {
                        j_points: j,
                        partload_gain: gain,
                        ..ElectrolyzerSpec::default()
                    },
                    surcharge,
                    ppa,
                    demand: DemandSeries::new(demand).unwrap(),
                    storage: StorageTerms {
                        enabled: storage_on,
                        max_in: cap,
                        max_out: cap,
                        ..StorageTerms::default()
                    },
                    grid: GridTerms {
                        sale_price: sale_frac * cheapest,
                        purchase_enabled: buy,
                        ..GridTerms::default()
                    },
                }
            },
        )
}

fn check_conservation(case: &Case, sol: &DispatchSolution) {
    assert!(sol.hydrogen_balance_residual(case.demand.values()) <= BALANCE_TOL);
    assert!(sol.power_balance_residual() <= BALANCE_TOL);
    assert!(sol.storage_closure_residual() <= BALANCE_TOL);
    let flows = [&sol.p_ely, &sol.p_surplus, &sol.p_buy, &sol.m_dot_ely, &sol.m_dot_in, &sol.m_dot_out, &sol.m_level];
    assert!(flows.iter().all(|f| f.iter().all(|v| *v >= 0.0)));
    let net = sol.costs.net();
    assert!((net - sol.diagnostics.objective).abs() <= 1e-6 * (1.0 + net.abs()));
}

fn scaled_up(ppa: &[PpaTerms], factor: f64) -> Vec<PpaTerms> {
    ppa.iter()
        .map(|p| PpaTerms {
            price: p.price,
            series: CapacityFactorSeries::new(
                p.source(),
                p.series.values().iter().map(|f| (f * factor).min(1.0)).collect(),
                1.0,
            )
            .unwrap(),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn solved_dispatches_conserve_hydrogen_power_and_storage(case in case_strategy(96)) {
        match case.solve() {
            Ok(sol) => check_conservation(&case, &sol),
            Err(DispatchError::Infeasible) => prop_assume!(false),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn hydrogen_sits_on_the_envelope_whenever_power_flows(case in case_strategy(72)) {
        let case = Case { grid: GridTerms { sale_price: 0.0, ..case.grid.clone() }, ..case };
        let env = case.envelope(case.surcharge);
        match case.solve() {
            Ok(sol) => {
                for t in 0..case.horizon {
                    if sol.p_ely[t] > 0.0 {
                        let gap = env.evaluate(sol.p_ely[t]) - sol.m_dot_ely[t];
                        prop_assert!(gap.abs() <= 1e-6 * (1.0 + sol.m_dot_ely[t]), "hour {t}: gap {gap}");
                    }
                }
            }
            Err(DispatchError::Infeasible) => prop_assume!(false),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn a_more_degraded_envelope_never_costs_less(case in case_strategy(48), extra in 0.0..3.0f64) {
        let fresh = case.solve_with(&case.ppa, case.surcharge);
        let worn = case.solve_with(&case.ppa, case.surcharge + extra);
        match (fresh, worn) {
            (Ok(a), Ok(b)) => {
                let (a, b) = (a.diagnostics.objective, b.diagnostics.objective);
                prop_assert!(b >= a - OBJ_RTOL * (1.0 + a.abs()), "fresh {a} worn {b}");
            }
            // Degradation can only shrink the feasible set.
            (Err(DispatchError::Infeasible), worn) => {
                prop_assert!(matches!(worn, Err(DispatchError::Infeasible)));
                prop_assume!(false);
            }
            (Ok(_), Err(DispatchError::Infeasible)) => prop_assume!(false),
            (a, b) => panic!("{a:?} / {b:?}"),
        }
    }

    #[test]
    fn richer_capacity_factors_never_cost_more(case in case_strategy(48), boost in 1.0..1.5f64) {
        let base = case.solve_with(&case.ppa, case.surcharge);
        let rich = case.solve_with(&scaled_up(&case.ppa, boost), case.surcharge);
        match (base, rich) {
            (Ok(a), Ok(b)) => {
                let (a, b) = (a.diagnostics.objective, b.diagnostics.objective);
                prop_assert!(b <= a + OBJ_RTOL * (1.0 + a.abs()), "base {a} boosted {b}");
            }
            (Err(DispatchError::Infeasible), _) => prop_assume!(false),
            (a, b) => panic!("{a:?} / {b:?}"),
        }
    }
}

#[test]
fn two_week_default_dispatch_conserves_everything() {
    let setup = common::short_setup(336, 5);
    let case = Case {
        horizon: 336,
        spec: setup.electrolyzer.clone(),
        surcharge: 0.0,
        ppa: setup.ppa.clone(),
        demand: setup.demand.clone(),
        storage: setup.storage.clone(),
        grid: setup.grid.clone(),
    };
    let sol = case.solve().unwrap();
    check_conservation(&case, &sol);
    assert!(sol.diagnostics.residuals.gap <= 1e-7);
    // Constant demand: the storage must carry the synthetic weather's gaps.
    assert!(sol.storage_capacity_kg > 0.0);
}
