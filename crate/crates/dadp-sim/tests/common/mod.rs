//! Fixtures shared between the harness and acceptance test binaries.
#![allow(dead_code)]

use dadp_market::flow::{Field, FieldKind, InfoClass, Role, Side};
use dadp_market::model::{EnergyServiceProvider, LoadAggregator, MarketKind, Scenario};
use dadp_sim::audit::AuditRule;

pub fn la(id: &str, alpha: f64, beta: f64) -> LoadAggregator {
    LoadAggregator { id: id.into(), alpha, beta, d_min: 0.0, thermal: None }
}

pub fn esp(id: &str, m: f64, n: f64, s_max: f64) -> EnergyServiceProvider {
    EnergyServiceProvider { id: id.into(), m, n, s_max }
}

pub fn small_scenario() -> Scenario {
    Scenario {
        market_kind: MarketKind::Electricity,
        scene_id: "harness".into(),
        las: vec![la("LA1", 10.0, 1.0), la("LA2", 7.0, 0.8)],
        esps: vec![
            esp("ESP1", 0.8, 0.5, 10.0),
            esp("ESP2", 1.0, 0.2, 10.0),
            esp("ESP3", 1.2, 0.0, 10.0),
        ],
    }
}

/// Ten crafted privacy faults: three leaked coefficients, four private fields
/// sent to the wrong player, three per-player quantities crossing market
/// sides. Every information class appears at least once.
pub fn fault_messages() -> Vec<(Vec<Field>, Role, Role, AuditRule)> {
    use AuditRule::*;
    vec![
        (
            vec![Field::private("alpha_1", FieldKind::Coefficient, Role::La(0), Side::Demand, 1.0)],
            Role::La(0),
            Role::Etc,
            CoefficientExposure,
        ),
        (
            vec![Field::private("m_1", FieldKind::Coefficient, Role::Esp(0), Side::Supply, 0.5)],
            Role::Esp(0),
            Role::Etc,
            CoefficientExposure,
        ),
        (
            vec![Field::public("beta_2", FieldKind::Coefficient, Side::Demand, 1.0)],
            Role::Etc,
            Role::La(1),
            CoefficientExposure,
        ),
        (
            vec![Field::private("p_1", FieldKind::PriceWeight, Role::La(0), Side::Demand, 0.4)],
            Role::Etc,
            Role::La(2),
            PrivateLeak,
        ),
        (
            vec![Field::private("mu_1", FieldKind::ShadowPrice, Role::La(0), Side::Demand, 2.0)],
            Role::Etc,
            Role::Esp(0),
            PrivateLeak,
        ),
        (
            vec![Field::private("x_2", FieldKind::ConsensusEstimate, Role::Esp(1), Side::Supply, 1.0)],
            Role::Etc,
            Role::Esp(2),
            PrivateLeak,
        ),
        (
            vec![Field::private("d_1", FieldKind::PlayerQuantity, Role::La(0), Side::Demand, 2.0)],
            Role::Etc,
            Role::La(1),
            PrivateLeak,
        ),
        (
            vec![Field::private("d_3", FieldKind::PlayerQuantity, Role::Esp(0), Side::Demand, 2.0)],
            Role::Etc,
            Role::Esp(0),
            CrossSideQuantity,
        ),
        (
            vec![Field::public("s_2", FieldKind::PlayerQuantity, Side::Supply, 1.5)],
            Role::Etc,
            Role::La(0),
            CrossSideQuantity,
        ),
        (
            vec![Field {
                name: "s_1_estimate".into(),
                kind: FieldKind::PlayerQuantity,
                class: InfoClass::SemiPublic,
                side: Side::Supply,
                value: 1.0,
            }],
            Role::La(0),
            Role::Etc,
            CrossSideQuantity,
        ),
    ]
}
