//! Outer coordination loop and the full auction driver.
//!
//! The trading center runs the whole auction: it announces a trade volume,
//! lets each market side converge through weight-controlled ADMM bidding, and
//! then adjusts the volume until total surplus stops improving while supply
//! and demand stay balanced. The volume search brackets the efficient trade
//! level using only aggregates the trading center legitimately holds (shadow
//! prices, weights, totals), never a player's value or cost coefficients.

use serde::{Deserialize, Serialize};

use crate::admm::{
    demand_admm_solve_with, supply_admm_solve_with, AdmmParams, Bid, DemandAdmmState, Offer,
    SupplyAdmmState,
};
use crate::error::{MarketError, Result};
use crate::flow::{Field, FlowObserver, NullObserver, Role, RoundIdx, Side, TraceRecord};
use crate::model::{cost, value, Scenario};
use crate::weights::{update_demand_weights, update_supply_weights, PriceWeights, StepController};

/// Full parameter set for a DADP run. Field defaults match the documented
/// ledger values; scenario files may override any of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DadpParams {
    pub admm: AdmmParams,
    /// Weight-update step size delta.
    pub delta: f64,
    /// Weight-loop convergence threshold on the L1 weight change.
    pub weight_eps: f64,
    /// Weight-loop round cap per side per outer round.
    pub weight_cap: usize,
    /// Initial penalty multiplier gamma.
    pub gamma0: f64,
    /// Geometric growth factor for gamma, in (2, 3).
    pub beta_growth: f64,
    /// Energy-mismatch tolerance as a fraction of total supply capacity.
    pub eps1_rel: f64,
    /// Relative social-welfare-change tolerance.
    pub eps2: f64,
    /// Outer-loop iteration cap.
    pub outer_cap: usize,
    /// Initial announced trade volume as a fraction of total supply capacity.
    pub initial_supply_fraction: f64,
    /// Freeze weights at uniform (the Kelly baseline).
    pub freeze_weights: bool,
    /// Collect per-iteration trace rows in the outcome.
    pub collect_trace: bool,
}

impl Default for DadpParams {
    fn default() -> Self {
        DadpParams {
            admm: AdmmParams::default(),
            delta: 0.05,
            weight_eps: 1e-4,
            weight_cap: 200,
            gamma0: 0.1,
            beta_growth: 2.5,
            eps1_rel: 1e-3,
            eps2: 1e-4,
            outer_cap: 100,
            initial_supply_fraction: 0.5,
            freeze_weights: false,
            collect_trace: false,
        }
    }
}

/// Outer-loop coordinator state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtcState {
    /// Lagrange multiplier chi on the supply-demand mismatch.
    pub chi: f64,
    /// Penalty multiplier gamma.
    pub gamma: f64,
    /// Geometric growth factor for gamma, in (2, 3).
    pub beta_growth: f64,
    /// Outer iteration counter.
    pub m: usize,
    /// Absolute energy-mismatch tolerance.
    pub eps1: f64,
    /// Relative welfare-change tolerance.
    pub eps2: f64,
    pub estimated_total_supply: f64,
    pub estimated_total_demand: f64,
}

impl AtcState {
    pub fn new(gamma0: f64, beta_growth: f64, eps1: f64, eps2: f64) -> Result<Self> {
        if gamma0 <= 0.0 || beta_growth <= 2.0 || beta_growth >= 3.0 || eps1 <= 0.0 || eps2 <= 0.0
        {
            return Err(MarketError::Domain {
                op: "AtcState::new",
                detail: format!(
                    "requires gamma > 0, beta in (2,3), tolerances > 0; got gamma={gamma0}, beta={beta_growth}, eps1={eps1}, eps2={eps2}"
                ),
            });
        }
        Ok(AtcState {
            chi: 0.0,
            gamma: gamma0,
            beta_growth,
            m: 0,
            eps1,
            eps2,
            estimated_total_supply: 0.0,
            estimated_total_demand: 0.0,
        })
    }
}

/// Convergence test for the outer loop: the energy mismatch must be inside
/// `eps1` and the relative welfare change inside `eps2`. The first outer
/// iterate (no predecessor) never counts as converged. A zero-welfare
/// denominator falls back to the absolute change.
pub fn atc_converged(sw: f64, prev_sw: Option<f64>, mismatch: f64, state: &AtcState) -> bool {
    let Some(prev) = prev_sw else {
        return false;
    };
    if mismatch.abs() > state.eps1 {
        return false;
    }
    let delta = (sw - prev).abs();
    let rel = if sw.abs() > 0.0 { delta / sw.abs() } else { delta };
    rel <= state.eps2
}

/// Multiplier update applied after every non-converged outer round:
/// `chi' = chi + 2 gamma^2 (S - D)`, `gamma' = beta * gamma`.
pub fn update_atc_multipliers(state: &mut AtcState, total_supply: f64, total_demand: f64) {
    let mismatch = total_supply - total_demand;
    state.chi += 2.0 * state.gamma * state.gamma * mismatch;
    state.gamma *= state.beta_growth;
    state.m += 1;
}

/// Record one side's converged total as the opposite side's target. Only the
/// aggregate crosses; per-player quantities never do.
pub fn etc_estimate_exchange(state: &mut AtcState, side: Side, total: f64) {
    match side {
        Side::Demand => state.estimated_total_demand = total,
        Side::Supply => state.estimated_total_supply = total,
    }
}

/// Iteration totals of a full run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationCounts {
    pub outer: usize,
    pub weight_rounds: usize,
    pub inner: usize,
}

/// Converged result of a full auction run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketOutcome {
    pub demands: Vec<f64>,
    pub supplies: Vec<f64>,
    pub bids: Vec<Bid>,
    pub offers: Vec<Offer>,
    pub p: PriceWeights,
    pub q: PriceWeights,
    pub mu: Vec<f64>,
    pub omega: Vec<f64>,
    /// Payment of each load aggregator: `p_i * b_i`.
    pub la_payments: Vec<f64>,
    /// Revenue of each service provider: `q_j * omega_j * s_j`.
    pub esp_revenues: Vec<f64>,
    pub total_demand: f64,
    pub total_supply: f64,
    pub value: f64,
    pub cost: f64,
    pub social_welfare: f64,
    pub iterations: IterationCounts,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRecord>,
}

impl MarketOutcome {
    /// Buyer-side utility `v(d_i) - p_i b_i`.
    pub fn la_utility(&self, scenario: &Scenario, i: usize) -> f64 {
        value(&scenario.las[i], self.demands[i]).unwrap_or(f64::NAN) - self.la_payments[i]
    }

    /// Seller-side utility `q_j omega_j s_j - c(s_j)`.
    pub fn esp_utility(&self, scenario: &Scenario, j: usize) -> f64 {
        self.esp_revenues[j] - cost(&scenario.esps[j], self.supplies[j])
    }

    /// Total collected from buyers minus total paid to sellers.
    pub fn budget_surplus(&self) -> f64 {
        let paid: f64 = self.la_payments.iter().sum();
        let received: f64 = self.esp_revenues.iter().sum();
        paid - received
    }
}

/// Maximum normalized stationarity residuals of the two sides' equilibrium
/// conditions at an outcome, taken over interior players. Returns
/// `(demand_residual, supply_residual)`.
pub fn ne_residuals(scenario: &Scenario, outcome: &MarketOutcome) -> (f64, f64) {
    let t = outcome.total_supply;
    let tol = 1e-7 * t.max(1.0);
    // The condition is checked in product form, `v'(d)(1 - d/T) = mu p`,
    // rather than dividing by the personal weight: a buyer absorbing almost
    // the whole volume has p -> 0 and the quotient form is ill-conditioned.
    let mu_ref = outcome
        .mu
        .iter()
        .zip(&outcome.p.values)
        .map(|(m, p)| (m * p).abs())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut demand_res: f64 = 0.0;
    for (i, la) in scenario.las.iter().enumerate() {
        let d = outcome.demands[i];
        let (lo, hi) = la.demand_bounds(scenario.market_kind);
        let interior = d > lo + tol && hi.map_or(true, |h| d < h - tol) && t - d > tol;
        if interior {
            let stat = la.marginal_value(d) * (1.0 - d / t);
            demand_res =
                demand_res.max((stat - outcome.mu[i] * outcome.p.values[i]).abs() / mu_ref);
        }
    }
    let d_total = outcome.total_demand;
    let k = (scenario.esp_count() as f64 - 2.0) * d_total;
    let nu_ref = outcome
        .omega
        .iter()
        .zip(&outcome.q.values)
        .map(|(o, q)| (o * q).abs())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut supply_res: f64 = 0.0;
    for (j, esp) in scenario.esps.iter().enumerate() {
        let s = outcome.supplies[j];
        if s > tol && s < esp.s_max - tol {
            let stat = esp.marginal_cost(s) * (1.0 + s / k);
            supply_res =
                supply_res.max((stat - outcome.omega[j] * outcome.q.values[j]).abs() / nu_ref);
        }
    }
    (demand_res, supply_res)
}

/// Run the full auction on a validated scenario.
pub fn run_dadp(scenario: &Scenario, params: &DadpParams) -> Result<MarketOutcome> {
    run_dadp_observed(scenario, params, &mut NullObserver)
}

/// Run the full auction, reporting every trading-center/player exchange to the
/// observer.
pub fn run_dadp_observed(
    scenario: &Scenario,
    params: &DadpParams,
    observer: &mut dyn FlowObserver,
) -> Result<MarketOutcome> {
    scenario.validate()?;
    scenario.check_feasible()?;
    let kind = scenario.market_kind;
    let i_count = scenario.la_count();
    let j_count = scenario.esp_count();
    let cap_total = scenario.total_supply_cap();

    // The announced volume must let every buyer stay strictly below satiation
    // (or its thermal ceiling) and must cover the demand floors.
    let reach_total: f64 = scenario
        .las
        .iter()
        .map(|la| {
            let (_, hi) = la.demand_bounds(kind);
            hi.unwrap_or(0.999 * la.satiation())
        })
        .sum();
    let mut t_lo = scenario.total_demand_floor().max(1e-9 * cap_total);
    let mut t_hi = cap_total.min(reach_total);
    if t_lo > t_hi {
        t_lo = t_hi;
    }
    let mut target = (params.initial_supply_fraction * cap_total).clamp(t_lo, t_hi);

    let mut state = AtcState::new(
        params.gamma0,
        params.beta_growth,
        params.eps1_rel * cap_total,
        params.eps2,
    )?;
    let mut p = PriceWeights::uniform(i_count, Side::Demand);
    let mut q = PriceWeights::uniform(j_count, Side::Supply);
    let mut ctl_d = StepController::new(params.delta);
    let mut ctl_s = StepController::new(params.delta);
    let mut warm_d: Option<DemandAdmmState> = None;
    let mut warm_s: Option<SupplyAdmmState> = None;
    let mut counts = IterationCounts::default();
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut prev_sw: Option<f64> = None;

    for m in 0..params.outer_cap {
        counts.outer = m + 1;
        etc_estimate_exchange(&mut state, Side::Supply, target);

        // --- Demand phase: weight-controlled ADBA at the announced volume ---
        for i in 0..i_count {
            observer.message(
                Role::Etc,
                Role::La(i),
                RoundIdx { outer: m, weight: 0, inner: 0 },
                vec![Field::semi_public("total_supply_estimate", Side::Demand, target)],
            );
        }
        let mut demand_res = None;
        for n in 0..params.weight_cap {
            counts.weight_rounds += 1;
            let round = RoundIdx { outer: m, weight: n, inner: 0 };
            for i in 0..i_count {
                observer.message(
                    Role::Etc,
                    Role::La(i),
                    round,
                    vec![Field::private(
                        "p_i",
                        crate::flow::FieldKind::PriceWeight,
                        Role::La(i),
                        Side::Demand,
                        p.values[i],
                    )],
                );
            }
            let res = demand_admm_solve_with(
                &scenario.las,
                kind,
                &p.values,
                target,
                &params.admm,
                warm_d.take(),
                observer,
                round,
                params.collect_trace,
            )?;
            counts.inner += res.iterations;
            if params.collect_trace {
                trace.extend(res.trace.iter().cloned());
            }
            warm_d = Some(res.state.clone());
            if params.freeze_weights {
                demand_res = Some(res);
                break;
            }
            // Relaxation step: the effective move toward the equilibrium
            // profile is delta * target, so the step is capped at 1/target to
            // keep the relaxation factor at most one.
            let step = ctl_d.delta.min(1.0 / target);
            let next = update_demand_weights(&p, &res.demands, target, step);
            ctl_d.observe(&p, &next);
            let moved = next.distance(&p);
            p = next;
            demand_res = Some(res);
            if moved < params.weight_eps {
                break;
            }
        }
        let demand_res = demand_res.expect("weight loop runs at least once");
        let d_total: f64 = demand_res.demands.iter().sum();
        etc_estimate_exchange(&mut state, Side::Demand, d_total);

        // --- Supply phase at the demand side's aggregate ---
        for j in 0..j_count {
            observer.message(
                Role::Etc,
                Role::Esp(j),
                RoundIdx { outer: m, weight: 0, inner: 0 },
                vec![Field::semi_public("total_demand_estimate", Side::Supply, d_total)],
            );
        }
        let mut supply_res = None;
        for n in 0..params.weight_cap {
            counts.weight_rounds += 1;
            let round = RoundIdx { outer: m, weight: n, inner: 0 };
            for j in 0..j_count {
                observer.message(
                    Role::Etc,
                    Role::Esp(j),
                    round,
                    vec![Field::private(
                        "q_j",
                        crate::flow::FieldKind::PriceWeight,
                        Role::Esp(j),
                        Side::Supply,
                        q.values[j],
                    )],
                );
            }
            let res = supply_admm_solve_with(
                &scenario.esps,
                &q.values,
                d_total,
                &params.admm,
                warm_s.take(),
                observer,
                round,
                params.collect_trace,
            )?;
            counts.inner += res.iterations;
            if params.collect_trace {
                trace.extend(res.trace.iter().cloned());
            }
            warm_s = Some(res.state.clone());
            if params.freeze_weights {
                supply_res = Some(res);
                break;
            }
            let step = ctl_s.delta.min(1.0 / d_total);
            let next = update_supply_weights(&q, &res.supplies, d_total, step);
            ctl_s.observe(&q, &next);
            let moved = next.distance(&q);
            q = next;
            supply_res = Some(res);
            if moved < params.weight_eps {
                break;
            }
        }
        let supply_res = supply_res.expect("weight loop runs at least once");
        let s_total: f64 = supply_res.supplies.iter().sum();
        etc_estimate_exchange(&mut state, Side::Supply, s_total);

        // --- Book-keeping and the outer convergence test ---
        let total_value: f64 = scenario
            .las
            .iter()
            .zip(&demand_res.demands)
            .map(|(la, d)| value(la, *d).unwrap_or(f64::NAN))
            .sum();
        let total_cost: f64 = scenario
            .esps
            .iter()
            .zip(&supply_res.supplies)
            .map(|(esp, s)| cost(esp, *s))
            .sum();
        let sw = total_value - total_cost;
        let mismatch = s_total - d_total;
        let sw_rel = prev_sw.map_or(f64::INFINITY, |prev| {
            let delta = (sw - prev).abs();
            if sw.abs() > 0.0 {
                delta / sw.abs()
            } else {
                delta
            }
        });
        let done = atc_converged(sw, prev_sw, mismatch, &state);

        if done || m + 1 == params.outer_cap {
            let la_payments: Vec<f64> = p
                .values
                .iter()
                .zip(&demand_res.bids)
                .map(|(pi, b)| pi * b.amount)
                .collect();
            let esp_revenues: Vec<f64> = q
                .values
                .iter()
                .zip(supply_res.supplies.iter().zip(&supply_res.omega))
                .map(|(qj, (s, om))| qj * om * s)
                .collect();
            let outcome = MarketOutcome {
                demands: demand_res.demands,
                supplies: supply_res.supplies,
                bids: demand_res.bids,
                offers: supply_res.offers,
                p,
                q,
                mu: demand_res.mu,
                omega: supply_res.omega,
                la_payments,
                esp_revenues,
                total_demand: d_total,
                total_supply: s_total,
                value: total_value,
                cost: total_cost,
                social_welfare: sw,
                iterations: counts,
                converged: done,
                trace,
            };
            if done {
                return Ok(outcome);
            }
            return Err(MarketError::NonConvergence {
                loop_name: "atc_outer",
                iterations: params.outer_cap,
                primal: mismatch.abs(),
                dual: sw_rel,
            });
        }

        update_atc_multipliers(&mut state, s_total, d_total);

        // --- Volume search: compare the two sides' implied marginal prices
        // and bisect. All inputs (mu, omega, weights, totals) are held by the
        // trading center already; no coefficient is consulted. ---
        let lambda_d = implied_demand_marginal(&demand_res.demands, &demand_res.mu, &p, target, scenario);
        let lambda_s =
            implied_supply_marginal(&supply_res.supplies, &supply_res.omega, &q, d_total, scenario);
        if lambda_d > lambda_s {
            t_lo = target;
        } else {
            t_hi = target;
        }
        let next_target = 0.5 * (t_lo + t_hi);
        if let Some(st) = warm_d.as_mut() {
            let scale = next_target / target;
            for z in &mut st.z {
                *z *= scale;
            }
        }
        if let Some(st) = warm_s.as_mut() {
            let scale = next_target / d_total.max(1e-300);
            for x in &mut st.x {
                *x *= scale;
            }
        }
        target = next_target;
        prev_sw = Some(sw);
    }
    unreachable!("loop always returns on its last pass");
}

/// Mean marginal valuation implied by the converged demand side:
/// `mu_i p_i T / (T - d_i)` over interior buyers.
fn implied_demand_marginal(
    d: &[f64],
    mu: &[f64],
    p: &PriceWeights,
    t: f64,
    scenario: &Scenario,
) -> f64 {
    let tol = 1e-7 * t.max(1.0);
    let mut acc = 0.0;
    let mut cnt = 0usize;
    for (i, la) in scenario.las.iter().enumerate() {
        let (lo, hi) = la.demand_bounds(scenario.market_kind);
        let interior = d[i] > lo + tol && hi.map_or(true, |h| d[i] < h - tol);
        if interior && t - d[i] > tol {
            acc += mu[i] * p.values[i] * t / (t - d[i]);
            cnt += 1;
        }
    }
    if cnt > 0 {
        acc / cnt as f64
    } else {
        // Every buyer pinned to a bound: treat the side as satiated so the
        // bisection shrinks the volume.
        0.0
    }
}

/// Mean marginal cost implied by the converged supply side:
/// `omega_j q_j K / (K + s_j)` with `K = (J-2) D`, over interior sellers.
fn implied_supply_marginal(
    s: &[f64],
    omega: &[f64],
    q: &PriceWeights,
    d_total: f64,
    scenario: &Scenario,
) -> f64 {
    let k = (scenario.esp_count() as f64 - 2.0) * d_total;
    let tol = 1e-7 * d_total.max(1.0);
    let mut acc = 0.0;
    let mut cnt = 0usize;
    for (j, esp) in scenario.esps.iter().enumerate() {
        if s[j] > tol && s[j] < esp.s_max - tol {
            acc += omega[j] * q.values[j] * k / (k + s[j]);
            cnt += 1;
        }
    }
    if cnt > 0 {
        acc / cnt as f64
    } else {
        // Every seller at a cap: the volume is too ambitious.
        f64::INFINITY
    }
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

    fn small_scenario() -> Scenario {
        Scenario {
            market_kind: MarketKind::Electricity,
            scene_id: "unit".into(),
            las: vec![la("LA1", 10.0, 1.0), la("LA2", 8.0, 1.2)],
            esps: vec![
                esp("ESP1", 0.8, 0.5, 10.0),
                esp("ESP2", 1.0, 0.2, 10.0),
                esp("ESP3", 1.2, 0.0, 10.0),
            ],
        }
    }

    #[test]
    fn atc_state_rejects_bad_parameters() {
        assert!(AtcState::new(0.0, 2.5, 1e-3, 1e-4).is_err());
        assert!(AtcState::new(0.1, 3.5, 1e-3, 1e-4).is_err());
        assert!(AtcState::new(0.1, 2.5, 0.0, 1e-4).is_err());
    }

    #[test]
    fn atc_convergence_rules() {
        let state = AtcState::new(0.1, 2.5, 0.01, 1e-4).unwrap();
        // No predecessor: never converged.
        assert!(!atc_converged(5.0, None, 0.0, &state));
        // Both conditions met.
        assert!(atc_converged(5.0, Some(5.0), 0.0, &state));
        // Mismatch alone fails it.
        assert!(!atc_converged(5.0, Some(5.0), 0.02, &state));
        // Welfare drift alone fails it.
        assert!(!atc_converged(5.0, Some(5.0 * (1.0 - 2e-4)), 0.0, &state));
        // Zero welfare: absolute fallback.
        assert!(atc_converged(0.0, Some(5e-5), 0.0, &state));
    }

    #[test]
    fn multiplier_update_hand_arithmetic() {
        let mut state = AtcState::new(0.1, 2.5, 1e-3, 1e-4).unwrap();
        update_atc_multipliers(&mut state, 3.0, 2.0);
        assert_relative_eq!(state.chi, 0.02, epsilon = 1e-12);
        assert_relative_eq!(state.gamma, 0.25, epsilon = 1e-12);
        assert_eq!(state.m, 1);
        // Zero mismatch leaves chi alone; gamma still grows geometrically.
        update_atc_multipliers(&mut state, 2.0, 2.0);
        update_atc_multipliers(&mut state, 2.0, 2.0);
        assert_relative_eq!(state.chi, 0.02, epsilon = 1e-12);
        assert_relative_eq!(state.gamma, 0.1 * 2.5f64.powi(3), epsilon = 1e-12);
    }

    #[test]
    fn estimate_exchange_stores_aggregates() {
        let mut state = AtcState::new(0.1, 2.5, 1e-3, 1e-4).unwrap();
        etc_estimate_exchange(&mut state, Side::Demand, 10.0);
        assert_relative_eq!(state.estimated_total_demand, 10.0);
        etc_estimate_exchange(&mut state, Side::Supply, 9.5);
        assert_relative_eq!(state.estimated_total_supply, 9.5);
    }

    #[test]
    fn symmetric_scenario_reaches_uniform_fixed_point() {
        let scenario = Scenario {
            market_kind: MarketKind::Electricity,
            scene_id: "sym".into(),
            las: (0..3).map(|i| la(&format!("LA{}", i + 1), 10.0, 1.0)).collect(),
            esps: (0..3)
                .map(|j| esp(&format!("ESP{}", j + 1), 1.0, 0.5, 8.0))
                .collect(),
        };
        let outcome = run_dadp(&scenario, &DadpParams::default()).unwrap();
        assert!(outcome.converged);
        for w in &outcome.p.values {
            assert_relative_eq!(*w, 1.0 / 3.0, epsilon = 1e-9);
        }
        for w in &outcome.q.values {
            assert_relative_eq!(*w, 1.0 / 3.0, epsilon = 1e-9);
        }
        let t = outcome.total_supply;
        for d in &outcome.demands {
            assert_relative_eq!(*d, t / 3.0, epsilon = 1e-4 * t);
        }
        for s in &outcome.supplies {
            assert_relative_eq!(*s, outcome.total_demand / 3.0, epsilon = 1e-4 * t);
        }
    }

    #[test]
    fn heterogeneous_run_converges_and_balances() {
        let outcome = run_dadp(&small_scenario(), &DadpParams::default()).unwrap();
        assert!(outcome.converged);
        assert!((outcome.total_demand - outcome.total_supply).abs() <= 1e-3 * 30.0);
        // Welfare recomputed from primitives matches the stored total.
        let scenario = small_scenario();
        let v: f64 = scenario
            .las
            .iter()
            .zip(&outcome.demands)
            .map(|(la, d)| value(la, *d).unwrap())
            .sum();
        let c: f64 = scenario
            .esps
            .iter()
            .zip(&outcome.supplies)
            .map(|(esp, s)| cost(esp, *s))
            .sum();
        assert_relative_eq!(outcome.social_welfare, v - c, max_relative = 1e-9);
        // Stationarity residuals at the output.
        let (rd, rs) = ne_residuals(&scenario, &outcome);
        assert!(rd < 1e-3, "demand residual {rd}");
        assert!(rs < 1e-3, "supply residual {rs}");
    }

    #[test]
    fn individual_rationality_at_equilibrium() {
        let scenario = small_scenario();
        let outcome = run_dadp(&scenario, &DadpParams::default()).unwrap();
        for i in 0..scenario.la_count() {
            if outcome.demands[i] > scenario.las[i].d_min + 1e-6 {
                assert!(
                    outcome.la_utility(&scenario, i) >= 0.0,
                    "LA{} utility negative",
                    i + 1
                );
            }
        }
        for j in 0..scenario.esp_count() {
            if outcome.supplies[j] > 1e-6 {
                assert!(
                    outcome.esp_utility(&scenario, j) >= 0.0,
                    "ESP{} utility negative",
                    j + 1
                );
            }
        }
    }

    #[test]
    fn discrimination_directions() {
        let scenario = small_scenario();
        let outcome = run_dadp(&scenario, &DadpParams::default()).unwrap();
        let (d_max_idx, _) = outcome
            .demands
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let (p_min_idx, _) = outcome
            .p
            .values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(d_max_idx, p_min_idx);
        let (s_max_idx, _) = outcome
            .supplies
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let (q_max_idx, _) = outcome
            .q
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(s_max_idx, q_max_idx);
    }

    #[test]
    fn determinism() {
        let a = run_dadp(&small_scenario(), &DadpParams::default()).unwrap();
        let b = run_dadp(&small_scenario(), &DadpParams::default()).unwrap();
        assert_eq!(a.demands, b.demands);
        assert_eq!(a.supplies, b.supplies);
        assert_eq!(a.social_welfare.to_bits(), b.social_welfare.to_bits());
    }

    #[test]
    fn infeasible_scenario_is_rejected_before_iterating() {
        let mut scenario = small_scenario();
        for la in &mut scenario.las {
            la.d_min = 100.0;
        }
        for la in &mut scenario.las {
            la.alpha = 1000.0; // keep satiation above the floor
        }
        let err = run_dadp(&scenario, &DadpParams::default()).unwrap_err();
        assert!(matches!(err, MarketError::Infeasible { .. }));
    }
}
