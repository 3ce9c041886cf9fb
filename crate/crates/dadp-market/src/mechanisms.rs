//! Centralized welfare oracle and comparison mechanisms.
//!
//! Besides the full DADP auction, the crate can clear the same scenario with
//! a centralized optimum (the efficiency oracle), a Kelly variant (identical
//! machinery, weights frozen at uniform), a truthful uniform-price pool, and
//! VCG with Clarke-pivot payments.

use serde::{Deserialize, Serialize};

use crate::atc::{run_dadp, DadpParams, MarketOutcome};
use crate::error::{MarketError, Result};
use crate::model::{cost, value, Scenario};

/// Which clearing rule produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mechanism {
    Oracle,
    Dadp,
    Kel,
    Pool,
    Vcg,
}

impl Mechanism {
    pub fn label(&self) -> &'static str {
        match self {
            Mechanism::Oracle => "ORACLE",
            Mechanism::Dadp => "DADP",
            Mechanism::Kel => "KEL",
            Mechanism::Pool => "POOL",
            Mechanism::Vcg => "VCG",
        }
    }
}

/// Comparison-table row plus the per-player detail behind it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanismReport {
    pub mechanism: Mechanism,
    /// Energy traded (MWh).
    pub energy: f64,
    /// Total production cost ($).
    pub cost: f64,
    /// Total consumption value ($).
    pub value: f64,
    /// Social welfare ($), value - cost.
    pub sw: f64,
    /// Payments collected from buyers minus payments made to sellers ($).
    pub budget_surplus: f64,
    pub demands: Vec<f64>,
    pub supplies: Vec<f64>,
    pub la_payments: Vec<f64>,
    pub esp_revenues: Vec<f64>,
}

impl MechanismReport {
    fn from_allocation(
        mechanism: Mechanism,
        scenario: &Scenario,
        demands: Vec<f64>,
        supplies: Vec<f64>,
        la_payments: Vec<f64>,
        esp_revenues: Vec<f64>,
    ) -> Self {
        let total_value: f64 = scenario
            .las
            .iter()
            .zip(&demands)
            .map(|(la, d)| value(la, *d).unwrap_or(f64::NAN))
            .sum();
        let total_cost: f64 = scenario
            .esps
            .iter()
            .zip(&supplies)
            .map(|(esp, s)| cost(esp, *s))
            .sum();
        let paid: f64 = la_payments.iter().sum();
        let received: f64 = esp_revenues.iter().sum();
        MechanismReport {
            mechanism,
            energy: demands.iter().sum(),
            cost: total_cost,
            value: total_value,
            sw: total_value - total_cost,
            budget_surplus: paid - received,
            demands,
            supplies,
            la_payments,
            esp_revenues,
        }
    }
}

impl From<(&Scenario, &MarketOutcome, Mechanism)> for MechanismReport {
    fn from((scenario, outcome, mechanism): (&Scenario, &MarketOutcome, Mechanism)) -> Self {
        MechanismReport::from_allocation(
            mechanism,
            scenario,
            outcome.demands.clone(),
            outcome.supplies.clone(),
            outcome.la_payments.clone(),
            outcome.esp_revenues.clone(),
        )
    }
}

/// Aggregate demand at a uniform marginal price: each buyer's first-order
/// point clamped to its admissible range.
fn aggregate_demand(scenario: &Scenario, lambda: f64) -> Vec<f64> {
    scenario
        .las
        .iter()
        .map(|la| {
            let (lo, hi) = la.demand_bounds(scenario.market_kind);
            let unconstrained = (la.alpha - lambda) / (2.0 * la.beta);
            let ceiling = hi.unwrap_or(la.satiation());
            unconstrained.clamp(lo, ceiling.max(lo))
        })
        .collect()
}

/// Aggregate supply at a uniform marginal price.
fn aggregate_supply(scenario: &Scenario, lambda: f64) -> Vec<f64> {
    scenario
        .esps
        .iter()
        .map(|esp| ((lambda - esp.n) / (2.0 * esp.m)).clamp(0.0, esp.s_max))
        .collect()
}

/// Find the uniform marginal price at which aggregate demand equals aggregate
/// supply, by bisection on the monotone net-supply curve.
fn clearing_price(scenario: &Scenario) -> Result<f64> {
    let net = |lambda: f64| {
        aggregate_supply(scenario, lambda).iter().sum::<f64>()
            - aggregate_demand(scenario, lambda).iter().sum::<f64>()
    };
    let mut lo = 0.0;
    if net(lo) > 0.0 {
        // Supply already exceeds demand at a zero price; curves cannot cross.
        return Err(MarketError::NoCrossing);
    }
    let mut hi = scenario
        .las
        .iter()
        .map(|la| la.alpha)
        .fold(1.0, f64::max);
    let mut expansions = 0;
    while net(hi) < 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(MarketError::NoCrossing);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if net(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Welfare-maximizing allocation under the energy-balance constraint, solved
/// by equalizing marginals: every interior player sits at the common price
/// `lambda`, bound-constrained players are pinned, and `lambda` is found by
/// bisection on the aggregate net-supply curve.
pub fn centralized_optimum(scenario: &Scenario) -> Result<MechanismReport> {
    scenario.check_feasible()?;
    let lambda = clearing_price(scenario)?;
    let demands = aggregate_demand(scenario, lambda);
    let mut supplies = aggregate_supply(scenario, lambda);
    // Remove the residual bisection gap so both totals agree exactly.
    let d_total: f64 = demands.iter().sum();
    let s_total: f64 = supplies.iter().sum();
    if s_total > 0.0 {
        let scale = d_total / s_total;
        for s in &mut supplies {
            *s *= scale;
        }
    }
    let la_payments = demands.iter().map(|d| lambda * d).collect();
    let esp_revenues = supplies.iter().map(|s| lambda * s).collect();
    Ok(MechanismReport::from_allocation(
        Mechanism::Oracle,
        scenario,
        demands,
        supplies,
        la_payments,
        esp_revenues,
    ))
}

/// Kelly baseline: the identical auction machinery with price weights frozen
/// at uniform, isolating the effect of price discrimination.
pub fn kelly_clearing(scenario: &Scenario, params: &DadpParams) -> Result<MechanismReport> {
    let frozen = DadpParams {
        freeze_weights: true,
        ..params.clone()
    };
    let outcome = run_dadp(scenario, &frozen)?;
    Ok((scenario, &outcome, Mechanism::Kel).into())
}

/// Run the full auction and shape the result as a comparison row.
pub fn dadp_clearing(scenario: &Scenario, params: &DadpParams) -> Result<MechanismReport> {
    let outcome = run_dadp(scenario, params)?;
    Ok((scenario, &outcome, Mechanism::Dadp).into())
}

/// Truthful uniform-price pool: both sides are cleared at the single price
/// where the aggregate truthful curves cross; everyone trades at that price,
/// so the budget nets to zero.
pub fn pool_clearing(scenario: &Scenario) -> Result<MechanismReport> {
    scenario.check_feasible()?;
    let lambda = clearing_price(scenario)?;
    let demands = aggregate_demand(scenario, lambda);
    let mut supplies = aggregate_supply(scenario, lambda);
    let d_total: f64 = demands.iter().sum();
    let s_total: f64 = supplies.iter().sum();
    if s_total > 0.0 {
        let scale = d_total / s_total;
        for s in &mut supplies {
            *s *= scale;
        }
    }
    let la_payments: Vec<f64> = demands.iter().map(|d| lambda * d).collect();
    let esp_revenues: Vec<f64> = supplies.iter().map(|s| lambda * s).collect();
    let mut report = MechanismReport::from_allocation(
        Mechanism::Pool,
        scenario,
        demands,
        supplies,
        la_payments,
        esp_revenues,
    );
    // A single price over equal totals nets to zero by construction; clear
    // the few ulps of summation noise.
    if report.budget_surplus.abs() < 1e-9 * (1.0 + report.energy * lambda) {
        report.budget_surplus = 0.0;
    }
    Ok(report)
}

/// Welfare of the market without one player, used for Clarke pivots. If the
/// residual market is infeasible (caps no longer cover floors), the residual
/// best response pins demand at the floors and production at the caps.
fn residual_welfare(scenario: &Scenario) -> f64 {
    match centralized_optimum(scenario) {
        Ok(report) => report.sw,
        Err(_) => {
            log::warn!(
                "residual market infeasible during pivot computation; using floor/cap welfare"
            );
            let v: f64 = scenario
                .las
                .iter()
                .map(|la| {
                    let (lo, _) = la.demand_bounds(scenario.market_kind);
                    value(la, lo).unwrap_or(0.0)
                })
                .sum();
            let c: f64 = scenario.esps.iter().map(|esp| cost(esp, esp.s_max)).sum();
            v - c
        }
    }
}

/// VCG: the oracle allocation with Clarke-pivot transfers. Each buyer pays
/// the externality its presence imposes on everyone else; each seller is paid
/// the welfare it adds. The budget typically runs a deficit.
pub fn vcg_clearing(scenario: &Scenario) -> Result<MechanismReport> {
    let optimum = centralized_optimum(scenario)?;
    let sw_full = optimum.sw;
    let mut la_payments = Vec::with_capacity(scenario.la_count());
    for i in 0..scenario.la_count() {
        let mut reduced = scenario.clone();
        reduced.las.remove(i);
        let w_without = if reduced.las.is_empty() {
            0.0
        } else {
            residual_welfare(&reduced)
        };
        let others_at_optimum =
            sw_full - value(&scenario.las[i], optimum.demands[i]).unwrap_or(0.0);
        la_payments.push(w_without - others_at_optimum);
    }
    let mut esp_revenues = Vec::with_capacity(scenario.esp_count());
    for j in 0..scenario.esp_count() {
        let mut reduced = scenario.clone();
        reduced.esps.remove(j);
        let w_without = if reduced.esps.is_empty() {
            0.0
        } else {
            residual_welfare(&reduced)
        };
        let others_at_optimum = sw_full + cost(&scenario.esps[j], optimum.supplies[j]);
        esp_revenues.push(others_at_optimum - w_without);
    }
    Ok(MechanismReport::from_allocation(
        Mechanism::Vcg,
        scenario,
        optimum.demands,
        optimum.supplies,
        la_payments,
        esp_revenues,
    ))
}

/// Run every requested mechanism on the same scenario. Failures are reported
/// per mechanism; one failure never aborts the others.
pub fn compare_mechanisms(
    scenario: &Scenario,
    params: &DadpParams,
    mechanisms: &[Mechanism],
) -> Vec<(Mechanism, Result<MechanismReport>)> {
    mechanisms
        .iter()
        .map(|mech| {
            let result = match mech {
                Mechanism::Oracle => centralized_optimum(scenario),
                Mechanism::Dadp => dadp_clearing(scenario, params),
                Mechanism::Kel => kelly_clearing(scenario, params),
                Mechanism::Pool => pool_clearing(scenario),
                Mechanism::Vcg => vcg_clearing(scenario),
            };
            (*mech, result)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EnergyServiceProvider, LoadAggregator, MarketKind};
    use approx::assert_relative_eq;

    fn la(id: &str, alpha: f64, beta: f64) -> LoadAggregator {
        LoadAggregator {
            id: id.into(),
            alpha,
            beta,
            d_min: 0.0,
            thermal: None,
        }
    }

    fn esp(id: &str, m: f64, n: f64, s_max: f64) -> EnergyServiceProvider {
        EnergyServiceProvider {
            id: id.into(),
            m,
            n,
            s_max,
        }
    }

    fn tiny(s_max: f64) -> Scenario {
        Scenario {
            market_kind: MarketKind::Electricity,
            scene_id: "tiny".into(),
            las: vec![la("LA1", 10.0, 1.0)],
            esps: vec![esp("ESP1", 1.0, 2.0, s_max)],
        }
    }

    #[test]
    fn oracle_closed_form_instance() {
        // max (10d - d^2) - (s^2 + 2s) s.t. d = s has optimum at (10-2)/4 = 2.
        let report = centralized_optimum(&tiny(100.0)).unwrap();
        assert_relative_eq!(report.energy, 2.0, epsilon = 1e-9);
        assert_relative_eq!(report.sw, 8.0, epsilon = 1e-9);
        // Grid-search oracle.
        let mut best = f64::NEG_INFINITY;
        let mut d = 0.0;
        while d <= 5.0 {
            best = best.max(10.0 * d - d * d - (d * d + 2.0 * d));
            d += 1e-4;
        }
        assert!((report.sw - best).abs() < 1e-6);
    }

    #[test]
    fn oracle_binding_cap() {
        let report = centralized_optimum(&tiny(1.0)).unwrap();
        assert_relative_eq!(report.energy, 1.0, epsilon = 1e-9);
        // The demand-side marginal price at the cap.
        let lambda = clearing_price(&tiny(1.0)).unwrap();
        assert_relative_eq!(lambda, 8.0, epsilon = 1e-6);
    }

    #[test]
    fn oracle_splits_identical_esps_equally() {
        let scenario = Scenario {
            market_kind: MarketKind::Electricity,
            scene_id: "eq".into(),
            las: vec![la("LA1", 10.0, 1.0), la("LA2", 10.0, 1.0)],
            esps: (0..3)
                .map(|j| esp(&format!("ESP{}", j + 1), 1.0, 0.5, 10.0))
                .collect(),
        };
        let report = centralized_optimum(&scenario).unwrap();
        assert_relative_eq!(report.supplies[0], report.supplies[1], epsilon = 1e-9);
        assert_relative_eq!(report.supplies[1], report.supplies[2], epsilon = 1e-9);
    }

    #[test]
    fn pool_hand_instance() {
        // 10 - 2d = 2s + 2 at d = s gives price 6, quantity 2.
        let report = pool_clearing(&tiny(100.0)).unwrap();
        assert_relative_eq!(report.energy, 2.0, epsilon = 1e-6);
        assert_relative_eq!(report.la_payments[0], 12.0, epsilon = 1e-5);
        assert_eq!(report.budget_surplus, 0.0);
    }

    #[test]
    fn pool_matches_oracle_welfare_when_unconstrained() {
        let scenario = Scenario {
            market_kind: MarketKind::Electricity,
            scene_id: "p".into(),
            las: vec![la("LA1", 10.0, 1.0), la("LA2", 7.0, 0.9)],
            esps: vec![
                esp("ESP1", 0.8, 0.5, 100.0),
                esp("ESP2", 1.0, 0.2, 100.0),
                esp("ESP3", 1.2, 0.0, 100.0),
            ],
        };
        let pool = pool_clearing(&scenario).unwrap();
        let oracle = centralized_optimum(&scenario).unwrap();
        assert_relative_eq!(pool.sw, oracle.sw, max_relative = 1e-9);
    }

    #[test]
    fn vcg_allocation_equals_oracle() {
        let scenario = Scenario {
            market_kind: MarketKind::Electricity,
            scene_id: "v".into(),
            las: vec![la("LA1", 10.0, 1.0), la("LA2", 6.0, 0.7)],
            esps: vec![
                esp("ESP1", 0.8, 0.5, 10.0),
                esp("ESP2", 1.0, 0.2, 10.0),
                esp("ESP3", 1.2, 0.0, 10.0),
            ],
        };
        let vcg = vcg_clearing(&scenario).unwrap();
        let oracle = centralized_optimum(&scenario).unwrap();
        assert_eq!(vcg.demands, oracle.demands);
        assert_eq!(vcg.supplies, oracle.supplies);
        assert_relative_eq!(vcg.sw, oracle.sw, max_relative = 1e-12);
        // A double-auction VCG runs a deficit (or at best breaks even).
        assert!(vcg.budget_surplus <= 1e-9);
    }

    #[test]
    fn vcg_single_la_pays_supply_externality() {
        // With the only buyer removed, trade collapses; the pivot charges the
        // buyer exactly the production cost it induces.
        let scenario = Scenario {
            market_kind: MarketKind::Electricity,
            scene_id: "1x3".into(),
            las: vec![la("LA1", 10.0, 1.0)],
            esps: vec![
                esp("ESP1", 1.0, 0.5, 10.0),
                esp("ESP2", 1.0, 0.5, 10.0),
                esp("ESP3", 1.0, 0.5, 10.0),
            ],
        };
        let vcg = vcg_clearing(&scenario).unwrap();
        assert_relative_eq!(vcg.la_payments[0], vcg.cost, epsilon = 1e-9);
        // Grid-search cross-check of the full-market optimum behind the pivot.
        let mut best = f64::NEG_INFINITY;
        let mut d = 0.0;
        while d <= 8.0 {
            let s = d / 3.0;
            best = best.max(10.0 * d - d * d - 3.0 * (s * s + 0.5 * s));
            d += 1e-4;
        }
        assert!((vcg.sw - best).abs() < 1e-6);
    }

    #[test]
    fn vcg_symmetric_players_pay_symmetrically() {
        let scenario = Scenario {
            market_kind: MarketKind::Electricity,
            scene_id: "sym".into(),
            las: vec![la("LA1", 10.0, 1.0), la("LA2", 10.0, 1.0)],
            esps: (0..3)
                .map(|j| esp(&format!("ESP{}", j + 1), 1.0, 0.5, 10.0))
                .collect(),
        };
        let vcg = vcg_clearing(&scenario).unwrap();
        assert_relative_eq!(vcg.la_payments[0], vcg.la_payments[1], epsilon = 1e-9);
        assert_relative_eq!(vcg.esp_revenues[0], vcg.esp_revenues[1], epsilon = 1e-9);
        assert_relative_eq!(vcg.esp_revenues[1], vcg.esp_revenues[2], epsilon = 1e-9);
    }

    #[test]
    fn kelly_equals_dadp_under_symmetry() {
        let scenario = Scenario {
            market_kind: MarketKind::Electricity,
            scene_id: "sym".into(),
            las: vec![la("LA1", 10.0, 1.0), la("LA2", 10.0, 1.0)],
            esps: (0..3)
                .map(|j| esp(&format!("ESP{}", j + 1), 1.0, 0.5, 10.0))
                .collect(),
        };
        let params = DadpParams::default();
        let kel = kelly_clearing(&scenario, &params).unwrap();
        let dadp = dadp_clearing(&scenario, &params).unwrap();
        assert_relative_eq!(kel.sw, dadp.sw, max_relative = 1e-6);
    }

    #[test]
    fn kelly_trails_dadp_on_heterogeneous_buyers() {
        let scenario = Scenario {
            market_kind: MarketKind::Electricity,
            scene_id: "het".into(),
            las: vec![la("LA1", 12.0, 1.0), la("LA2", 5.0, 1.0)],
            esps: vec![
                esp("ESP1", 0.8, 0.5, 10.0),
                esp("ESP2", 1.0, 0.2, 10.0),
                esp("ESP3", 1.2, 0.0, 10.0),
            ],
        };
        let params = DadpParams::default();
        let kel = kelly_clearing(&scenario, &params).unwrap();
        let dadp = dadp_clearing(&scenario, &params).unwrap();
        let oracle = centralized_optimum(&scenario).unwrap();
        assert!(kel.sw <= dadp.sw + 1e-9, "KEL {} vs DADP {}", kel.sw, dadp.sw);
        assert!(dadp.sw >= 0.99 * oracle.sw, "DADP {} vs oracle {}", dadp.sw, oracle.sw);
    }

    #[test]
    fn comparison_runs_all_mechanisms_independently() {
        let scenario = tiny(100.0); // I = 1: the auction errors, others succeed
        let results = compare_mechanisms(
            &scenario,
            &DadpParams::default(),
            &[
                Mechanism::Oracle,
                Mechanism::Dadp,
                Mechanism::Kel,
                Mechanism::Pool,
                Mechanism::Vcg,
            ],
        );
        assert_eq!(results.len(), 5);
        assert!(results[0].1.is_ok());
        assert!(results[1].1.is_err());
        assert!(results[3].1.is_ok());
        assert!(results[4].1.is_ok());
    }
}
