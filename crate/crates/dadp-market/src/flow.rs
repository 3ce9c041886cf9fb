//! Information-flow instrumentation.
//!
//! Every quantity that moves between the trading center and a player during a
//! run can be reported to a [`FlowObserver`], tagged with its information
//! class. The simulation harness routes these through its message bus and
//! audits them; the solver itself never inspects the observer.

use serde::{Deserialize, Serialize};

/// A participant in the information flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Etc,
    La(usize),
    Esp(usize),
}

impl Role {
    pub fn label(&self) -> String {
        match self {
            Role::Etc => "ETC".into(),
            Role::La(i) => format!("LA{}", i + 1),
            Role::Esp(j) => format!("ESP{}", j + 1),
        }
    }

    pub fn market_side(&self) -> Option<Side> {
        match self {
            Role::Etc => None,
            Role::La(_) => Some(Side::Demand),
            Role::Esp(_) => Some(Side::Supply),
        }
    }
}

/// Demand or supply phase of the auction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Demand,
    Supply,
}

/// What a payload field semantically is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Personal price weight p_i or q_j.
    PriceWeight,
    /// Shadow price mu_i or omega_j.
    ShadowPrice,
    /// Consensus estimate z_i or x_j.
    ConsensusEstimate,
    /// A specific player's demand or supply quantity.
    PlayerQuantity,
    /// A bid b_i (public).
    Bid,
    /// An offer a_j (public).
    Offer,
    /// Estimated total demand or total supply.
    AggregateEstimate,
    /// A value- or cost-function coefficient. Must never appear in a message.
    Coefficient,
}

/// Sensitivity class of a payload field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoClass {
    /// Visible only to the owner and the trading center.
    Private { owner: Role },
    /// Aggregate estimates known to one whole market side.
    SemiPublic,
    /// Mirrored to the public bulletin.
    Public,
}

/// One tagged value inside a message payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub kind: FieldKind,
    pub class: InfoClass,
    pub side: Side,
    pub value: f64,
}

impl Field {
    pub fn private(name: impl Into<String>, kind: FieldKind, owner: Role, side: Side, value: f64) -> Self {
        Field {
            name: name.into(),
            kind,
            class: InfoClass::Private { owner },
            side,
            value,
        }
    }

    pub fn semi_public(name: impl Into<String>, side: Side, value: f64) -> Self {
        Field {
            name: name.into(),
            kind: FieldKind::AggregateEstimate,
            class: InfoClass::SemiPublic,
            side,
            value,
        }
    }

    pub fn public(name: impl Into<String>, kind: FieldKind, side: Side, value: f64) -> Self {
        Field {
            name: name.into(),
            kind,
            class: InfoClass::Public,
            side,
            value,
        }
    }
}

/// Round coordinates: outer ATC iteration `m`, weight round `n`, inner ADMM
/// iteration `k`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundIdx {
    pub outer: usize,
    pub weight: usize,
    pub inner: usize,
}

/// One row of the per-iteration solver trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub phase: Side,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub player_id: String,
    pub quantity: f64,
    pub shadow_price: f64,
    pub weight: f64,
    pub primal_res: f64,
    pub dual_res: f64,
}

/// Receiver for messages and trace rows emitted during a run.
pub trait FlowObserver {
    fn message(&mut self, from: Role, to: Role, round: RoundIdx, fields: Vec<Field>);
    fn trace(&mut self, record: TraceRecord) {
        let _ = record;
    }
}

/// Observer that discards everything.
#[derive(Debug, Default)]
pub struct NullObserver;

impl FlowObserver for NullObserver {
    fn message(&mut self, _from: Role, _to: Role, _round: RoundIdx, _fields: Vec<Field>) {}
}
