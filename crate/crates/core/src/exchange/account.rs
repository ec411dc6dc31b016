use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Cents, Order, OrderError, Side, TraderId};

/// Cash and share holdings of one trader. No margin, no short sales.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraderAccount {
    pub trader_id: TraderId,
    pub cash: Cents,
    pub shares: i64,
    pub dividend_income: Cents,
    pub trading_pnl: Cents,
}

impl TraderAccount {
    pub fn new(trader_id: TraderId, cash: Cents, shares: i64) -> Self {
        Self {
            trader_id,
            cash,
            shares,
            dividend_income: 0,
            trading_pnl: 0,
        }
    }
}

/// Resources committed by a trader's resting orders.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exposure {
    pub cash: Cents,
    pub shares: i64,
}

impl std::ops::Add for Exposure {
    type Output = Exposure;

    fn add(self, rhs: Exposure) -> Exposure {
        Exposure {
            cash: self.cash + rhs.cash,
            shares: self.shares + rhs.shares,
        }
    }
}

impl std::iter::Sum for Exposure {
    fn sum<I: Iterator<Item = Exposure>>(iter: I) -> Exposure {
        iter.fold(Exposure::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Cash { required: Cents, available: Cents },
    Shares { required: i64, available: i64 },
}

impl From<Violation> for OrderError {
    fn from(v: Violation) -> Self {
        match v {
            Violation::Cash {
                required,
                available,
            } => OrderError::InsufficientCash {
                required,
                available,
            },
            Violation::Shares {
                required,
                available,
            } => OrderError::InsufficientShares {
                required,
                available,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Violation(Violation),
}

/// Checks `order` against the account net of what the owner's other resting
/// orders already commit.
pub fn validate_order(account: &TraderAccount, resting: Exposure, order: &Order) -> Verdict {
    let need = order.exposure();
    match order.side {
        Side::Bid => {
            let required = need.cash + resting.cash;
            if required > account.cash {
                return Verdict::Violation(Violation::Cash {
                    required,
                    available: account.cash,
                });
            }
        }
        Side::Ask => {
            let required = need.shares + resting.shares;
            if required > account.shares {
                return Verdict::Violation(Violation::Shares {
                    required,
                    available: account.shares,
                });
            }
        }
    }
    Verdict::Valid
}

/// All trader accounts of a session keyed by seat.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Accounts(BTreeMap<TraderId, TraderAccount>);

impl Accounts {
    pub fn with_endowment(n_traders: u32, cash: Cents, shares: i64) -> Self {
        Accounts(
            (1..=n_traders)
                .map(|i| (TraderId(i), TraderAccount::new(TraderId(i), cash, shares)))
                .collect(),
        )
    }

    pub fn get(&self, id: TraderId) -> Option<&TraderAccount> {
        self.0.get(&id)
    }

    pub fn get_mut(&mut self, id: TraderId) -> Option<&mut TraderAccount> {
        self.0.get_mut(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraderAccount> {
        self.0.values()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut TraderAccount> {
        self.0.values_mut()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_cash(&self) -> Cents {
        self.0.values().map(|a| a.cash).sum()
    }

    pub fn total_shares(&self) -> i64 {
        self.0.values().map(|a| a.shares).sum()
    }

    /// Moves `quantity` shares from seller to buyer against `price` per share.
    pub(crate) fn settle(&mut self, buyer: TraderId, seller: TraderId, price: Cents, quantity: u32) {
        let value = price * Cents::from(quantity);
        let q = i64::from(quantity);
        let b = self.0.get_mut(&buyer).expect("buyer account exists");
        b.cash -= value;
        b.shares += q;
        b.trading_pnl -= value;
        debug_assert!(b.cash >= 0, "buyer cash went negative");
        let s = self.0.get_mut(&seller).expect("seller account exists");
        s.cash += value;
        s.shares -= q;
        s.trading_pnl += value;
        debug_assert!(s.shares >= 0, "seller shares went negative");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::OrderId;

    fn order(side: Side, price: Cents, quantity: u32) -> Order {
        Order {
            order_id: OrderId(1),
            trader_id: TraderId(1),
            side,
            price,
            quantity,
            submitted_seq: 1,
        }
    }

    #[test]
    fn bid_within_cash_is_valid() {
        let acct = TraderAccount::new(TraderId(1), 600, 0);
        assert_eq!(
            validate_order(&acct, Exposure::default(), &order(Side::Bid, 100, 1)),
            Verdict::Valid
        );
    }

    #[test]
    fn bid_counts_resting_bids() {
        let acct = TraderAccount::new(TraderId(1), 100, 0);
        let resting = Exposure { cash: 60, shares: 0 };
        assert_eq!(
            validate_order(&acct, resting, &order(Side::Bid, 50, 1)),
            Verdict::Violation(Violation::Cash {
                required: 110,
                available: 100
            })
        );
    }

    #[test]
    fn ask_counts_resting_asks() {
        let acct = TraderAccount::new(TraderId(1), 0, 3);
        let resting = Exposure { cash: 0, shares: 3 };
        assert!(matches!(
            validate_order(&acct, resting, &order(Side::Ask, 50, 1)),
            Verdict::Violation(Violation::Shares { .. })
        ));
    }

    #[test]
    fn exact_budget_is_valid() {
        let acct = TraderAccount::new(TraderId(1), 100, 0);
        let resting = Exposure { cash: 50, shares: 0 };
        assert_eq!(
            validate_order(&acct, resting, &order(Side::Bid, 25, 2)),
            Verdict::Valid
        );
    }
}
