//! ADMM-based distributed bidding (ADBA) for both market sides.
//!
//! Each inner iteration alternates independent player best responses with a
//! trading-center consensus update that projects the responses onto the
//! total-energy hyperplane and refreshes the shadow prices. Bids and offers
//! are reconstructed from the shadow prices, never from private valuations.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::flow::{Field, FieldKind, FlowObserver, NullObserver, Role, RoundIdx, Side, TraceRecord};
use crate::model::{
    modified_cost, modified_value, EnergyServiceProvider, LoadAggregator, MarketKind,
};

/// Inner-loop tuning parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmParams {
    /// Penalty parameter rho.
    pub rho: f64,
    /// Relative primal tolerance.
    pub eps_pri: f64,
    /// Relative dual tolerance.
    pub eps_dual: f64,
    /// Iteration cap.
    pub max_iter: usize,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams {
            rho: 1.0,
            eps_pri: 1e-4,
            eps_dual: 1e-4,
            max_iter: 500,
        }
    }
}

/// Trading-center state for the demand-side consensus loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandAdmmState {
    /// Consensus estimate of each load aggregator's demand.
    pub z: Vec<f64>,
    /// Shadow prices mu.
    pub mu: Vec<f64>,
    pub rho: f64,
    pub k: usize,
}

impl DemandAdmmState {
    /// Uniform start: z spreads the announced supply evenly, mu = 0.
    pub fn uniform(player_count: usize, total_supply: f64, rho: f64) -> Self {
        DemandAdmmState {
            z: vec![total_supply / player_count as f64; player_count],
            mu: vec![0.0; player_count],
            rho,
            k: 0,
        }
    }
}

/// Trading-center state for the supply-side consensus loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplyAdmmState {
    /// Consensus estimate of each provider's supply.
    pub x: Vec<f64>,
    /// Shadow prices omega.
    pub omega: Vec<f64>,
    pub rho: f64,
    pub k: usize,
}

impl SupplyAdmmState {
    pub fn uniform(player_count: usize, total_demand: f64, rho: f64) -> Self {
        SupplyAdmmState {
            x: vec![total_demand / player_count as f64; player_count],
            omega: vec![0.0; player_count],
            rho,
            k: 0,
        }
    }
}

/// A demand-side quote: `b_i = mu_i * d_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub player: String,
    pub amount: f64,
}

/// A supply-side quote: `a_j = omega_j * (total_demand - s_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offer {
    pub player: String,
    pub amount: f64,
}

/// Converged output of one demand-side ADBA run.
#[derive(Debug, Clone)]
pub struct DemandSideResult {
    pub demands: Vec<f64>,
    pub bids: Vec<Bid>,
    pub mu: Vec<f64>,
    pub state: DemandAdmmState,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
}

/// Converged output of one supply-side ADBA run.
#[derive(Debug, Clone)]
pub struct SupplySideResult {
    pub supplies: Vec<f64>,
    pub offers: Vec<Offer>,
    pub omega: Vec<f64>,
    pub state: SupplyAdmmState,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
}

/// Maximize an objective whose derivative is the quadratic `a x^2 + b x + c`
/// over `[lo, hi]`: the argmax is either a boundary or an interior stationary
/// point.
fn argmax_quadratic_derivative(
    a: f64,
    b: f64,
    c: f64,
    lo: f64,
    hi: f64,
    objective: impl Fn(f64) -> f64,
) -> f64 {
    let mut candidates = [lo, hi, f64::NAN, f64::NAN];
    if a.abs() < 1e-300 {
        if b.abs() > 0.0 {
            candidates[2] = -c / b;
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // Numerically stable pair of roots.
            let q = -0.5 * (b + b.signum() * sq);
            candidates[2] = q / a;
            if q.abs() > 0.0 {
                candidates[3] = c / q;
            }
        }
    }
    let mut best = lo;
    let mut best_val = f64::NEG_INFINITY;
    for cand in candidates {
        if !cand.is_finite() || cand < lo || cand > hi {
            continue;
        }
        let v = objective(cand);
        if v > best_val {
            best_val = v;
            best = cand;
        }
    }
    best
}

/// Demand-side best response: argmax over the admissible range of
/// `v_hat(d, p) - mu d - (rho/2)(d - z)^2`.
///
/// The derivative is a quadratic in `d`, so the maximizer is found exactly.
pub fn la_best_response(
    la: &LoadAggregator,
    kind: MarketKind,
    p: f64,
    z_i: f64,
    mu_i: f64,
    rho: f64,
    total_supply: f64,
) -> Result<f64> {
    if p <= 0.0 || total_supply <= 0.0 {
        return Err(MarketError::Domain {
            op: "la_best_response",
            detail: format!("requires p > 0 and total_supply > 0, got p={p}, total={total_supply}"),
        });
    }
    let (floor, cap) = la.demand_bounds(kind);
    let lo = floor.min(total_supply);
    let hi = cap.map_or(total_supply, |c| c.min(total_supply)).max(lo);
    let t = total_supply;
    // d/dd [v_hat - mu d - (rho/2)(d - z)^2] = A d^2 + B d + C
    let a = 2.0 * la.beta / (p * t);
    let b = -(2.0 * la.beta + la.alpha / t) / p - rho;
    let c = la.alpha / p - mu_i + rho * z_i;
    let objective = |d: f64| {
        modified_value(la, d, p, t).expect("preconditions checked") - mu_i * d
            - 0.5 * rho * (d - z_i) * (d - z_i)
    };
    Ok(argmax_quadratic_derivative(a, b, c, lo, hi, objective))
}

/// Supply-side best response: argmax over `[0, min(total_demand, s_max)]` of
/// `-c_hat(s, q) + omega s - (rho/2)(s - x)^2`.
pub fn esp_best_response(
    esp: &EnergyServiceProvider,
    q: f64,
    x_j: f64,
    omega_j: f64,
    rho: f64,
    total_demand: f64,
    j_count: usize,
) -> Result<f64> {
    if j_count <= 2 {
        return Err(MarketError::Domain {
            op: "esp_best_response",
            detail: format!("supply mechanism requires J > 2, got J={j_count}"),
        });
    }
    if q <= 0.0 || total_demand <= 0.0 {
        return Err(MarketError::Domain {
            op: "esp_best_response",
            detail: format!("requires q > 0 and total_demand > 0, got q={q}, total={total_demand}"),
        });
    }
    let lo = 0.0;
    let hi = esp.s_max.min(total_demand);
    let k = (j_count as f64 - 2.0) * total_demand;
    // d/ds [-c_hat + omega s - (rho/2)(s - x)^2] = A s^2 + B s + C
    let a = -2.0 * esp.m / (q * k);
    let b = -(2.0 * esp.m + esp.n / k) / q - rho;
    let c = -esp.n / q + omega_j + rho * x_j;
    let objective = |s: f64| {
        -modified_cost(esp, s, q, total_demand, j_count).expect("preconditions checked")
            + omega_j * s
            - 0.5 * rho * (s - x_j) * (s - x_j)
    };
    Ok(argmax_quadratic_derivative(a, b, c, lo, hi, objective))
}

/// Demand-side consensus update: project `d + mu/rho` onto the hyperplane
/// `sum z = total_supply`, then ascend the shadow prices. Returns the
/// normalized `(primal, dual)` residuals of the step.
pub fn etc_demand_update(
    d: &[f64],
    state: &mut DemandAdmmState,
    total_supply: f64,
) -> (f64, f64) {
    let count = d.len() as f64;
    let rho = state.rho;
    let shift: f64 = d
        .iter()
        .zip(&state.mu)
        .map(|(di, mi)| di + mi / rho)
        .sum();
    let correction = (total_supply - shift) / count;
    let mut primal = 0.0;
    let mut dual = 0.0;
    for i in 0..d.len() {
        let z_new = d[i] + state.mu[i] / rho + correction;
        dual += (state.z[i] - z_new).abs();
        primal += (d[i] - z_new).abs();
        state.mu[i] += rho * (d[i] - z_new);
        state.z[i] = z_new;
    }
    state.k += 1;
    (primal / total_supply, rho * dual / total_supply)
}

/// Supply-side consensus update: project `s - omega/rho` onto
/// `sum x = total_demand`, then update the shadow prices by dual ascent.
///
/// The dual step is `omega' = omega - rho (s - x')`: with the price entering
/// the Lagrangian as `+omega^T (s - x)`, this is the ascent direction that
/// raises the price when the responses fall short of the announced total.
pub fn etc_supply_update(
    s: &[f64],
    state: &mut SupplyAdmmState,
    total_demand: f64,
) -> (f64, f64) {
    let count = s.len() as f64;
    let rho = state.rho;
    let shift: f64 = s
        .iter()
        .zip(&state.omega)
        .map(|(sj, oj)| sj - oj / rho)
        .sum();
    let correction = (total_demand - shift) / count;
    let mut primal = 0.0;
    let mut dual = 0.0;
    for j in 0..s.len() {
        let x_new = s[j] - state.omega[j] / rho + correction;
        dual += (state.x[j] - x_new).abs();
        primal += (s[j] - x_new).abs();
        state.omega[j] -= rho * (s[j] - x_new);
        state.x[j] = x_new;
    }
    state.k += 1;
    (primal / total_demand, rho * dual / total_demand)
}

/// Run the demand-side ADBA loop to convergence.
pub fn demand_admm_solve(
    las: &[LoadAggregator],
    kind: MarketKind,
    weights: &[f64],
    total_supply: f64,
    params: &AdmmParams,
) -> Result<DemandSideResult> {
    demand_admm_solve_with(
        las,
        kind,
        weights,
        total_supply,
        params,
        None,
        &mut NullObserver,
        RoundIdx::default(),
        true,
    )
}

/// Demand-side ADBA with explicit warm start, observer, round coordinates and
/// trace control.
#[allow(clippy::too_many_arguments)]
pub fn demand_admm_solve_with(
    las: &[LoadAggregator],
    kind: MarketKind,
    weights: &[f64],
    total_supply: f64,
    params: &AdmmParams,
    warm: Option<DemandAdmmState>,
    observer: &mut dyn FlowObserver,
    mut round: RoundIdx,
    collect_trace: bool,
) -> Result<DemandSideResult> {
    let count = las.len();
    if count < 2 {
        return Err(MarketError::Domain {
            op: "demand_admm_solve",
            detail: format!("needs I > 1 load aggregators, got {count}"),
        });
    }
    if weights.len() != count || weights.iter().any(|w| *w <= 0.0) {
        return Err(MarketError::Domain {
            op: "demand_admm_solve",
            detail: "one positive weight per load aggregator required".into(),
        });
    }
    let mut state = warm.unwrap_or_else(|| DemandAdmmState::uniform(count, total_supply, params.rho));
    state.rho = params.rho;
    let mut demands = vec![0.0; count];
    let mut trace = Vec::new();
    let mut residuals = (f64::INFINITY, f64::INFINITY);
    for iter in 0..params.max_iter {
        round.inner = iter;
        for (i, la) in las.iter().enumerate() {
            observer.message(
                Role::Etc,
                Role::La(i),
                round,
                vec![
                    Field::private("z_i", FieldKind::ConsensusEstimate, Role::La(i), Side::Demand, state.z[i]),
                    Field::private("mu_i", FieldKind::ShadowPrice, Role::La(i), Side::Demand, state.mu[i]),
                ],
            );
            demands[i] = la_best_response(
                la,
                kind,
                weights[i],
                state.z[i],
                state.mu[i],
                params.rho,
                total_supply,
            )?;
            let bid = state.mu[i] * demands[i];
            observer.message(
                Role::La(i),
                Role::Etc,
                round,
                vec![
                    Field::private("d_i", FieldKind::PlayerQuantity, Role::La(i), Side::Demand, demands[i]),
                    Field::public("b_i", FieldKind::Bid, Side::Demand, bid),
                ],
            );
        }
        residuals = etc_demand_update(&demands, &mut state, total_supply);
        if collect_trace {
            for (i, la) in las.iter().enumerate() {
                trace.push(TraceRecord {
                    phase: Side::Demand,
                    m: round.outer,
                    n: round.weight,
                    k: iter,
                    player_id: la.id.clone(),
                    quantity: demands[i],
                    shadow_price: state.mu[i],
                    weight: weights[i],
                    primal_res: residuals.0,
                    dual_res: residuals.1,
                });
            }
        }
        for rec in trace.iter().rev().take(if collect_trace { count } else { 0 }) {
            observer.trace(rec.clone());
        }
        if residuals.0 < params.eps_pri && residuals.1 < params.eps_dual {
            let bids = las
                .iter()
                .zip(demands.iter().zip(&state.mu))
                .map(|(la, (d, mu))| Bid {
                    player: la.id.clone(),
                    amount: mu * d,
                })
                .collect();
            return Ok(DemandSideResult {
                demands,
                mu: state.mu.clone(),
                bids,
                iterations: iter + 1,
                state,
                trace,
            });
        }
    }
    Err(MarketError::NonConvergence {
        loop_name: "demand_admm",
        iterations: params.max_iter,
        primal: residuals.0,
        dual: residuals.1,
    })
}

/// Run the supply-side ADBA loop to convergence.
pub fn supply_admm_solve(
    esps: &[EnergyServiceProvider],
    weights: &[f64],
    total_demand: f64,
    params: &AdmmParams,
) -> Result<SupplySideResult> {
    supply_admm_solve_with(
        esps,
        weights,
        total_demand,
        params,
        None,
        &mut NullObserver,
        RoundIdx::default(),
        true,
    )
}

/// Supply-side ADBA with explicit warm start, observer, round coordinates and
/// trace control.
#[allow(clippy::too_many_arguments)]
pub fn supply_admm_solve_with(
    esps: &[EnergyServiceProvider],
    weights: &[f64],
    total_demand: f64,
    params: &AdmmParams,
    warm: Option<SupplyAdmmState>,
    observer: &mut dyn FlowObserver,
    mut round: RoundIdx,
    collect_trace: bool,
) -> Result<SupplySideResult> {
    let count = esps.len();
    if count <= 2 {
        return Err(MarketError::Domain {
            op: "supply_admm_solve",
            detail: format!("needs J > 2 service providers, got {count}"),
        });
    }
    if weights.len() != count || weights.iter().any(|w| *w <= 0.0) {
        return Err(MarketError::Domain {
            op: "supply_admm_solve",
            detail: "one positive weight per service provider required".into(),
        });
    }
    let mut state = warm.unwrap_or_else(|| SupplyAdmmState::uniform(count, total_demand, params.rho));
    state.rho = params.rho;
    let mut supplies = vec![0.0; count];
    let mut trace = Vec::new();
    let mut residuals = (f64::INFINITY, f64::INFINITY);
    for iter in 0..params.max_iter {
        round.inner = iter;
        for (j, esp) in esps.iter().enumerate() {
            observer.message(
                Role::Etc,
                Role::Esp(j),
                round,
                vec![
                    Field::private("x_j", FieldKind::ConsensusEstimate, Role::Esp(j), Side::Supply, state.x[j]),
                    Field::private("omega_j", FieldKind::ShadowPrice, Role::Esp(j), Side::Supply, state.omega[j]),
                ],
            );
            supplies[j] = esp_best_response(
                esp,
                weights[j],
                state.x[j],
                state.omega[j],
                params.rho,
                total_demand,
                count,
            )?;
            let offer = state.omega[j] * (total_demand - supplies[j]);
            observer.message(
                Role::Esp(j),
                Role::Etc,
                round,
                vec![
                    Field::private("s_j", FieldKind::PlayerQuantity, Role::Esp(j), Side::Supply, supplies[j]),
                    Field::public("a_j", FieldKind::Offer, Side::Supply, offer),
                ],
            );
        }
        residuals = etc_supply_update(&supplies, &mut state, total_demand);
        if collect_trace {
            for (j, esp) in esps.iter().enumerate() {
                trace.push(TraceRecord {
                    phase: Side::Supply,
                    m: round.outer,
                    n: round.weight,
                    k: iter,
                    player_id: esp.id.clone(),
                    quantity: supplies[j],
                    shadow_price: state.omega[j],
                    weight: weights[j],
                    primal_res: residuals.0,
                    dual_res: residuals.1,
                });
            }
            for rec in trace.iter().rev().take(count) {
                observer.trace(rec.clone());
            }
        }
        if residuals.0 < params.eps_pri && residuals.1 < params.eps_dual {
            let offers = esps
                .iter()
                .zip(supplies.iter().zip(&state.omega))
                .map(|(esp, (s, omega))| Offer {
                    player: esp.id.clone(),
                    amount: omega * (total_demand - s),
                })
                .collect();
            return Ok(SupplySideResult {
                supplies,
                omega: state.omega.clone(),
                offers,
                iterations: iter + 1,
                state,
                trace,
            });
        }
    }
    Err(MarketError::NonConvergence {
        loop_name: "supply_admm",
        iterations: params.max_iter,
        primal: residuals.0,
        dual: residuals.1,
    })
}
