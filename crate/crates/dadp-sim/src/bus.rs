//! Message bus connecting the trading center to every player.
//!
//! Channels exist only between the trading center and a single player; player
//! to player traffic is a routing error. Every delivered message lands in an
//! immutable log, and public-class payload fields are mirrored to a bulletin
//! visible to all players.

use serde::{Deserialize, Serialize};

use dadp_market::flow::{Field, FlowObserver, InfoClass, Role, RoundIdx, TraceRecord};

/// One delivered and logged message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedMessage {
    pub seq: usize,
    pub from: Role,
    pub to: Role,
    pub round: RoundIdx,
    pub fields: Vec<Field>,
}

/// Routing failure: the requested channel does not exist.
#[derive(Debug, thiserror::Error)]
#[error("no channel between {from} and {to}: only ETC<->player channels exist")]
pub struct RoutingError {
    pub from: String,
    pub to: String,
}

/// The star-topology bus with its log and public bulletin.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
pub struct Bus {
    pub log: Vec<LoggedMessage>,
    /// Public payload fields in send order.
    pub bulletin: Vec<Field>,
    /// Solver trace rows gathered alongside the message log.
    #[serde(default)]
    pub trace: Vec<TraceRecord>,
}

impl Bus {
    pub fn new() -> Self {
        Bus::default()
    }

    /// A channel exists iff exactly one endpoint is the trading center.
    pub fn channel_exists(from: Role, to: Role) -> bool {
        matches!(
            (from, to),
            (Role::Etc, Role::La(_))
                | (Role::Etc, Role::Esp(_))
                | (Role::La(_), Role::Etc)
                | (Role::Esp(_), Role::Etc)
        )
    }

    /// Deliver a message: append it to the log and mirror its public fields
    /// to the bulletin.
    pub fn route(
        &mut self,
        from: Role,
        to: Role,
        round: RoundIdx,
        fields: Vec<Field>,
    ) -> Result<(), RoutingError> {
        if !Self::channel_exists(from, to) {
            return Err(RoutingError {
                from: from.label(),
                to: to.label(),
            });
        }
        for field in &fields {
            if field.class == InfoClass::Public {
                self.bulletin.push(field.clone());
            }
        }
        self.log.push(LoggedMessage {
            seq: self.log.len(),
            from,
            to,
            round,
            fields,
        });
        Ok(())
    }

    /// Serialize the log as JSON lines (one message per line).
    pub fn log_to_jsonl(&self) -> String {
        let mut out = String::new();
        for msg in &self.log {
            out.push_str(&serde_json::to_string(msg).expect("log serializes"));
            out.push('\n');
        }
        out
    }

    /// Parse a JSON-lines message log.
    pub fn log_from_jsonl(text: &str) -> Result<Vec<LoggedMessage>, serde_json::Error> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect()
    }
}

impl FlowObserver for Bus {
    fn message(&mut self, from: Role, to: Role, round: RoundIdx, fields: Vec<Field>) {
        self.route(from, to, round, fields)
            .expect("solver only uses ETC<->player channels");
    }

    fn trace(&mut self, record: TraceRecord) {
        self.trace.push(record);
    }
}
