use thiserror::Error;

/// Errors surfaced by the market library.
#[derive(Debug, Error)]
pub enum MarketError {
    /// A numeric argument was outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// All bids were zero, so proportional allocation is undefined.
    #[error("degenerate market: all bids are zero")]
    DegenerateMarket,

    /// An offer was nonpositive, which the supply allocation rule forbids.
    #[error("invalid offer from {player}: {value} (offers must be > 0)")]
    InvalidOffer { player: String, value: f64 },

    /// A scenario failed validation.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Total demand floors exceed total supply caps; no feasible clearing exists.
    #[error("infeasible scenario: sum of demand floors {floor_total} exceeds sum of supply caps {cap_total}")]
    Infeasible { floor_total: f64, cap_total: f64 },

    /// An iterative solve hit its iteration cap.
    #[error("{loop_name} did not converge within {iterations} iterations (primal {primal:.3e}, dual {dual:.3e})")]
    NonConvergence {
        loop_name: &'static str,
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    /// Supply and demand curves have no crossing point.
    #[error("degenerate market: supply and demand curves do not cross")]
    NoCrossing,
}

pub type Result<T> = std::result::Result<T, MarketError>;
