//! Limit order book and continuous double-auction matching for a single
//! asset within one trading period.
//!
//! Orders are matched in price-time priority and every execution happens at
//! the resting order's price. Settlement is immediate: cash and shares move
//! between the two [`TraderAccount`]s as part of the same call that produced
//! the [`Trade`].

mod account;
mod book;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use account::{validate_order, Accounts, Exposure, TraderAccount, Verdict, Violation};
pub use book::{BookSnapshot, DepthEntry, OrderBook, PostOutcome};

/// Money in integer cents.
pub type Cents = i64;

/// Seat identifier of a trader within a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraderId(pub u32);

impl fmt::Display for TraderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderId(pub u64);

impl fmt::Display for OrderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TradeId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Bid => f.write_str("BID"),
            Side::Ask => f.write_str("ASK"),
        }
    }
}

/// A limit order. `quantity` is the quantity still open.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub order_id: OrderId,
    pub trader_id: TraderId,
    pub side: Side,
    pub price: Cents,
    pub quantity: u32,
    pub submitted_seq: u64,
}

impl Order {
    /// Cash (bids) or shares (asks) this order would consume if filled.
    pub fn exposure(&self) -> Exposure {
        match self.side {
            Side::Bid => Exposure {
                cash: self.price * Cents::from(self.quantity),
                shares: 0,
            },
            Side::Ask => Exposure {
                cash: 0,
                shares: i64::from(self.quantity),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub trade_id: TradeId,
    pub period: u32,
    pub price: Cents,
    pub quantity: u32,
    pub buyer_id: TraderId,
    pub seller_id: TraderId,
    pub resting_order_id: OrderId,
    pub aggressor_order_id: OrderId,
    /// Clock time of the execution in milliseconds.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("bid needs {required} cents but only {available} are uncommitted")]
    InsufficientCash { required: Cents, available: Cents },
    #[error("ask needs {required} shares but only {available} are uncommitted")]
    InsufficientShares { required: i64, available: i64 },
    #[error("order would execute against the trader's own resting order {0}")]
    SelfCross(OrderId),
    #[error("price must be a positive integer number of cents")]
    InvalidPrice,
    #[error("quantity must be at least one share")]
    InvalidQuantity,
    #[error("unknown trader {0}")]
    UnknownTrader(TraderId),
    #[error("order {0} not found")]
    NotFound(OrderId),
    #[error("order {0} belongs to another trader")]
    NotOwner(OrderId),
}

impl OrderError {
    /// Short machine-readable reason code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            OrderError::InsufficientCash { .. } => "insufficient_cash",
            OrderError::InsufficientShares { .. } => "insufficient_shares",
            OrderError::SelfCross(_) => "self_cross",
            OrderError::InvalidPrice => "invalid_price",
            OrderError::InvalidQuantity => "invalid_quantity",
            OrderError::UnknownTrader(_) => "unknown_trader",
            OrderError::NotFound(_) => "not_found",
            OrderError::NotOwner(_) => "not_owner",
        }
    }
}
