//! Player models, value/cost functions and their price-weighted variants,
//! thermal-comfort demand bounds, and the proportional allocation rules that
//! map one-dimensional quotes to energy quantities.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};

/// Which commodity a scenario clears. Electricity and heat markets clear
/// independently; the heat market derives per-player demand bounds from the
/// thermal envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarketKind {
    Electricity,
    Heat,
}

/// Building thermal model used by heat-market load aggregators.
///
/// `resistance` is the thermal resistance of the shell (deg C per MW),
/// `capacity` the air heat capacity (MWh per deg C). The product
/// `tau = R * C` is the building time constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalEnvelope {
    pub resistance: f64,
    pub capacity: f64,
    pub t_in_min: f64,
    pub t_in_max: f64,
    pub t_in_current: f64,
    pub t_out: f64,
    /// Trading period length in hours.
    pub dt: f64,
}

impl ThermalEnvelope {
    pub fn tau(&self) -> f64 {
        self.resistance * self.capacity
    }

    pub fn validate(&self) -> Result<()> {
        if self.resistance <= 0.0 || self.capacity <= 0.0 || self.dt <= 0.0 {
            return Err(MarketError::InvalidScenario(
                "thermal envelope requires R > 0, C > 0, dt > 0".into(),
            ));
        }
        if !(self.t_in_min <= self.t_in_current && self.t_in_current <= self.t_in_max) {
            return Err(MarketError::InvalidScenario(format!(
                "indoor temperature {} outside comfort band [{}, {}]",
                self.t_in_current, self.t_in_min, self.t_in_max
            )));
        }
        Ok(())
    }
}

/// Demand-side player: concave quadratic value `v(d) = alpha d - beta d^2`
/// with a demand floor and, in the heat market, a thermal envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadAggregator {
    pub id: String,
    /// Linear value coefficient ($/MWh), > 0.
    pub alpha: f64,
    /// Quadratic value coefficient ($/MWh^2), > 0.
    pub beta: f64,
    /// Demand floor (MWh), >= 0.
    #[serde(default)]
    pub d_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<ThermalEnvelope>,
}

/// Supply-side player: convex quadratic cost `c(s) = m s^2 + n s` for s > 0
/// with a supply cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyServiceProvider {
    pub id: String,
    /// Quadratic cost coefficient ($/MWh^2), > 0.
    pub m: f64,
    /// Linear cost coefficient ($/MWh), >= 0.
    #[serde(default)]
    pub n: f64,
    /// Supply cap (MWh), > 0.
    pub s_max: f64,
}

/// One market instance: the commodity, the participating players and a label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub market_kind: MarketKind,
    #[serde(default)]
    pub scene_id: String,
    pub las: Vec<LoadAggregator>,
    pub esps: Vec<EnergyServiceProvider>,
}

impl LoadAggregator {
    /// Satiation demand: the point where the marginal value hits zero.
    pub fn satiation(&self) -> f64 {
        self.alpha / (2.0 * self.beta)
    }

    /// Marginal value v'(d) = alpha - 2 beta d.
    pub fn marginal_value(&self, d: f64) -> f64 {
        self.alpha - 2.0 * self.beta * d
    }

    /// Effective demand bounds for this player in the given market.
    ///
    /// Heat-market players trade inside the thermal comfort band
    /// `[P_min * dt, P_max * dt]`; electricity players only carry the floor.
    pub fn demand_bounds(&self, kind: MarketKind) -> (f64, Option<f64>) {
        match (kind, &self.thermal) {
            (MarketKind::Heat, Some(env)) => {
                let (p_min, p_max) = heat_demand_bounds(env);
                let lo = (p_min * env.dt).max(self.d_min).max(0.0);
                let hi = (p_max * env.dt).max(lo);
                (lo, Some(hi))
            }
            _ => (self.d_min, None),
        }
    }
}

impl EnergyServiceProvider {
    /// Marginal cost c'(s) = 2 m s + n (for s > 0).
    pub fn marginal_cost(&self, s: f64) -> f64 {
        2.0 * self.m * s + self.n
    }
}

impl Scenario {
    pub fn la_count(&self) -> usize {
        self.las.len()
    }

    pub fn esp_count(&self) -> usize {
        self.esps.len()
    }

    /// Sum of effective demand floors.
    pub fn total_demand_floor(&self) -> f64 {
        self.las
            .iter()
            .map(|la| la.demand_bounds(self.market_kind).0)
            .sum()
    }

    /// Sum of supply caps.
    pub fn total_supply_cap(&self) -> f64 {
        self.esps.iter().map(|esp| esp.s_max).sum()
    }

    /// Aggregate satiation: total demand at which every marginal value is zero.
    pub fn total_satiation(&self) -> f64 {
        self.las.iter().map(|la| la.satiation()).sum()
    }

    /// Validate player-count assumptions, coefficient signs and, for heat
    /// markets, the presence and consistency of thermal envelopes.
    pub fn validate(&self) -> Result<()> {
        if self.la_count() < 2 {
            return Err(MarketError::InvalidScenario(format!(
                "demand side needs I > 1 load aggregators, got {}",
                self.la_count()
            )));
        }
        if self.esp_count() <= 2 {
            return Err(MarketError::InvalidScenario(format!(
                "supply side needs J > 2 service providers, got {}",
                self.esp_count()
            )));
        }
        for la in &self.las {
            if la.alpha <= 0.0 || la.beta <= 0.0 {
                return Err(MarketError::InvalidScenario(format!(
                    "{}: value coefficients must satisfy alpha > 0, beta > 0",
                    la.id
                )));
            }
            if la.d_min < 0.0 {
                return Err(MarketError::InvalidScenario(format!(
                    "{}: demand floor must be >= 0",
                    la.id
                )));
            }
            if let Some(env) = &la.thermal {
                env.validate()
                    .map_err(|e| MarketError::InvalidScenario(format!("{}: {e}", la.id)))?;
            }
            if self.market_kind == MarketKind::Heat && la.thermal.is_none() {
                return Err(MarketError::InvalidScenario(format!(
                    "{}: heat scenarios require a thermal envelope",
                    la.id
                )));
            }
            // Marginal value must stay nonnegative over the demand range the
            // player can actually be driven to.
            let (lo, hi) = la.demand_bounds(self.market_kind);
            let reach = hi.unwrap_or(lo);
            if lo >= la.satiation() || reach > la.satiation() + 1e-9 {
                return Err(MarketError::InvalidScenario(format!(
                    "{}: demand range [{lo}, {reach}] exceeds satiation {}",
                    la.id,
                    la.satiation()
                )));
            }
        }
        for esp in &self.esps {
            if esp.m <= 0.0 || esp.n < 0.0 {
                return Err(MarketError::InvalidScenario(format!(
                    "{}: cost coefficients must satisfy m > 0, n >= 0",
                    esp.id
                )));
            }
            if esp.s_max <= 0.0 {
                return Err(MarketError::InvalidScenario(format!(
                    "{}: supply cap must be > 0",
                    esp.id
                )));
            }
        }
        Ok(())
    }

    /// Check that floors can be covered by caps at all.
    pub fn check_feasible(&self) -> Result<()> {
        let floor_total = self.total_demand_floor();
        let cap_total = self.total_supply_cap();
        if floor_total > cap_total {
            return Err(MarketError::Infeasible {
                floor_total,
                cap_total,
            });
        }
        Ok(())
    }
}

/// Value of consuming `d` MWh: `alpha d - beta d^2`.
pub fn value(la: &LoadAggregator, d: f64) -> Result<f64> {
    if d < 0.0 {
        return Err(MarketError::Domain {
            op: "value",
            detail: format!("demand {d} < 0"),
        });
    }
    Ok(la.alpha * d - la.beta * d * d)
}

/// Cost of supplying `s` MWh: `m s^2 + n s` for s > 0, zero otherwise.
pub fn cost(esp: &EnergyServiceProvider, s: f64) -> f64 {
    if s > 0.0 {
        esp.m * s * s + esp.n * s
    } else {
        0.0
    }
}

/// Price-weighted value integral
/// `v_hat(d, p) = (1/p) * int_0^d v'(z) (1 - z / total_supply) dz`,
/// evaluated in closed form for the quadratic value function.
pub fn modified_value(la: &LoadAggregator, d: f64, p: f64, total_supply: f64) -> Result<f64> {
    if p <= 0.0 || total_supply <= 0.0 {
        return Err(MarketError::Domain {
            op: "modified_value",
            detail: format!("requires p > 0 and total_supply > 0, got p={p}, total={total_supply}"),
        });
    }
    let (a, b) = (la.alpha, la.beta);
    Ok((a * d - b * d * d - a * d * d / (2.0 * total_supply)
        + 2.0 * b / 3.0 * d * d * d / total_supply)
        / p)
}

/// Derivative of [`modified_value`] in `d`:
/// `(1/p) v'(d) (1 - d / total_supply)`.
pub fn modified_value_prime(la: &LoadAggregator, d: f64, p: f64, total_supply: f64) -> f64 {
    la.marginal_value(d) * (1.0 - d / total_supply) / p
}

/// Price-weighted cost integral
/// `c_hat(s, q) = (1/q) * int_0^s c'(z) (1 + z / K) dz` with
/// `K = (J - 2) * total_demand`, in closed form.
pub fn modified_cost(
    esp: &EnergyServiceProvider,
    s: f64,
    q: f64,
    total_demand: f64,
    j_count: usize,
) -> Result<f64> {
    if j_count <= 2 {
        return Err(MarketError::Domain {
            op: "modified_cost",
            detail: format!("supply mechanism requires J > 2, got J={j_count}"),
        });
    }
    if q <= 0.0 || total_demand <= 0.0 {
        return Err(MarketError::Domain {
            op: "modified_cost",
            detail: format!("requires q > 0 and total_demand > 0, got q={q}, total={total_demand}"),
        });
    }
    let k = (j_count as f64 - 2.0) * total_demand;
    let (m, n) = (esp.m, esp.n);
    Ok((m * s * s + n * s + 2.0 * m / 3.0 * s * s * s / k + n * s * s / (2.0 * k)) / q)
}

/// Derivative of [`modified_cost`] in `s`: `(1/q) c'(s) (1 + s / K)`.
pub fn modified_cost_prime(
    esp: &EnergyServiceProvider,
    s: f64,
    q: f64,
    total_demand: f64,
    j_count: usize,
) -> f64 {
    let k = (j_count as f64 - 2.0) * total_demand;
    esp.marginal_cost(s) * (1.0 + s / k) / q
}

/// Adjustable heat-demand range `(P_min, P_max)` in MW implied by the comfort
/// band: the heating power that steers the indoor temperature to the band edge
/// over one period.
pub fn heat_demand_bounds(env: &ThermalEnvelope) -> (f64, f64) {
    let decay = (-env.dt / env.tau()).exp();
    let power_to = |t_target: f64| {
        ((t_target - env.t_in_current * decay) / (1.0 - decay) - env.t_out) / env.resistance
    };
    (power_to(env.t_in_min), power_to(env.t_in_max))
}

/// Proportional demand allocation: `d_i = (b_i / sum b) * total_supply`.
pub fn demand_allocation(bids: &[f64], total_supply: f64) -> Result<Vec<f64>> {
    if total_supply <= 0.0 {
        return Err(MarketError::Domain {
            op: "demand_allocation",
            detail: format!("total_supply {total_supply} <= 0"),
        });
    }
    if let Some(b) = bids.iter().find(|b| **b < 0.0) {
        return Err(MarketError::Domain {
            op: "demand_allocation",
            detail: format!("negative bid {b}"),
        });
    }
    let total_bid: f64 = bids.iter().sum();
    if total_bid <= 0.0 {
        return Err(MarketError::DegenerateMarket);
    }
    Ok(bids.iter().map(|b| b / total_bid * total_supply).collect())
}

/// Supply-function allocation: clearing price estimate
/// `omega = sum a / ((J-1) * total_demand)` and
/// `s_j = total_demand - (a_j / sum a) * (J-1) * total_demand`.
///
/// The allocation rule is affine in the own offer, so a sufficiently large
/// offer maps below zero; such entries are clamped to zero and the residual is
/// redistributed proportionally among the remaining positive suppliers.
pub fn supply_allocation(offers: &[f64], total_demand: f64) -> Result<(f64, Vec<f64>)> {
    let j = offers.len();
    if j <= 2 {
        return Err(MarketError::Domain {
            op: "supply_allocation",
            detail: format!("supply mechanism requires J > 2, got J={j}"),
        });
    }
    if total_demand <= 0.0 {
        return Err(MarketError::Domain {
            op: "supply_allocation",
            detail: format!("total_demand {total_demand} <= 0"),
        });
    }
    if let Some((idx, a)) = offers.iter().enumerate().find(|(_, a)| **a <= 0.0) {
        return Err(MarketError::InvalidOffer {
            player: format!("offer[{idx}]"),
            value: *a,
        });
    }
    let total_offer: f64 = offers.iter().sum();
    let omega = total_offer / ((j as f64 - 1.0) * total_demand);
    let mut supplies: Vec<f64> = offers
        .iter()
        .map(|a| total_demand - a / total_offer * (j as f64 - 1.0) * total_demand)
        .collect();
    let deficit: f64 = supplies.iter().filter(|s| **s < 0.0).map(|s| -s).sum();
    if deficit > 0.0 {
        log::warn!(
            "supply_allocation: clamping negative supplies (total {deficit:.6}) and \
             redistributing among positive suppliers"
        );
        for s in supplies.iter_mut() {
            if *s < 0.0 {
                *s = 0.0;
            }
        }
        let positive: f64 = supplies.iter().sum();
        if positive > 0.0 {
            let scale = total_demand / positive;
            for s in supplies.iter_mut() {
                *s *= scale;
            }
        }
    }
    Ok((omega, supplies))
}
