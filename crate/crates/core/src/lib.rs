//! Laboratory asset market: a continuous double-auction exchange, the
//! session engine that runs multi-period dividend-paying experiments,
//! simulated traders, and the bubble measures computed from session logs.

pub mod agents;
pub mod analytics;
pub mod exchange;
pub mod session;
