//! Privacy auditor: a post-hoc pass over the immutable message log.
//!
//! The auditor checks information flow, not inferential privacy. Three rules
//! are enforced, in order, with at most one violation recorded per field:
//!
//! 1. rule B — a value- or cost-function coefficient appears in any message;
//! 2. rule A — a private-class field owned by player X is delivered to a
//!    receiver other than X or the trading center;
//! 3. rule C — a per-player quantity touches a player on the opposite market
//!    side.

use serde::{Deserialize, Serialize};
use std::fmt;

use dadp_market::flow::{FieldKind, InfoClass, Role, RoundIdx};

use crate::bus::LoggedMessage;

/// Which audit rule a field breached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuditRule {
    /// Private field delivered outside the owner/ETC pair.
    PrivateLeak,
    /// Coefficient transmitted anywhere.
    CoefficientExposure,
    /// Per-player quantity crossed between market sides.
    CrossSideQuantity,
}

impl fmt::Display for AuditRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            AuditRule::PrivateLeak => "private field outside owner/ETC channel",
            AuditRule::CoefficientExposure => "value/cost coefficient in a message",
            AuditRule::CrossSideQuantity => "per-player quantity crossed market sides",
        };
        f.write_str(text)
    }
}

/// One detected breach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    pub message_seq: usize,
    pub field: String,
    pub rule: AuditRule,
    pub round: RoundIdx,
    pub from: Role,
    pub to: Role,
}

impl fmt::Display for AuditViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "message {} ({} -> {}, m={} n={} k={}): field '{}' — {}",
            self.message_seq,
            self.from.label(),
            self.to.label(),
            self.round.outer,
            self.round.weight,
            self.round.inner,
            self.field,
            self.rule
        )
    }
}

/// Scan a complete run log and return every breach, at most one per field.
pub fn audit(log: &[LoggedMessage]) -> Vec<AuditViolation> {
    let mut violations = Vec::new();
    for msg in log {
        for field in &msg.fields {
            let rule = if field.kind == FieldKind::Coefficient {
                Some(AuditRule::CoefficientExposure)
            } else if let InfoClass::Private { owner } = field.class {
                if msg.to != owner && msg.to != Role::Etc {
                    Some(AuditRule::PrivateLeak)
                } else {
                    cross_side_rule(msg, field.kind, field.side)
                }
            } else {
                cross_side_rule(msg, field.kind, field.side)
            };
            if let Some(rule) = rule {
                violations.push(AuditViolation {
                    message_seq: msg.seq,
                    field: field.name.clone(),
                    rule,
                    round: msg.round,
                    from: msg.from,
                    to: msg.to,
                });
            }
        }
    }
    violations
}

fn cross_side_rule(
    msg: &LoggedMessage,
    kind: FieldKind,
    side: dadp_market::flow::Side,
) -> Option<AuditRule> {
    if kind != FieldKind::PlayerQuantity {
        return None;
    }
    for endpoint in [msg.from, msg.to] {
        if let Some(player_side) = endpoint.market_side() {
            if player_side != side {
                return Some(AuditRule::CrossSideQuantity);
            }
        }
    }
    None
}
