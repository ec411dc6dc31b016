use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::account::{validate_order, Accounts, Exposure, Verdict};
use super::{Cents, Order, OrderError, OrderId, Side, Trade, TradeId, TraderId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PostOutcome {
    Resting {
        order_id: OrderId,
    },
    Executed {
        trades: Vec<Trade>,
        remainder: Option<OrderId>,
    },
}

impl PostOutcome {
    pub fn trades(&self) -> &[Trade] {
        match self {
            PostOutcome::Resting { .. } => &[],
            PostOutcome::Executed { trades, .. } => trades,
        }
    }
}

/// One resting order as shown to a particular viewer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthEntry {
    pub price: Cents,
    pub quantity: u32,
    pub own: bool,
    /// Present only on the viewer's own orders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_id: Option<OrderId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookSnapshot {
    pub best_bid: Option<Cents>,
    pub best_ask: Option<Cents>,
    /// Priority order: best price first, then arrival.
    pub bids: Vec<DepthEntry>,
    pub asks: Vec<DepthEntry>,
}

/// Price-time priority book for one period.
#[derive(Debug, Clone)]
pub struct OrderBook {
    period: u32,
    bids: BTreeMap<Reverse<Cents>, VecDeque<Order>>,
    asks: BTreeMap<Cents, VecDeque<Order>>,
    index: HashMap<OrderId, (Side, Cents)>,
    exposure: HashMap<TraderId, Exposure>,
    next_trade_id: u64,
    rest_remainder: bool,
}

struct Fill {
    resting_order_id: OrderId,
    resting_owner: TraderId,
    price: Cents,
    quantity: u32,
}

impl OrderBook {
    /// `first_trade_id` lets trade ids stay unique across the periods of a
    /// session even though each period gets a fresh book.
    pub fn new(period: u32, first_trade_id: u64) -> Self {
        Self {
            period,
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            index: HashMap::new(),
            exposure: HashMap::new(),
            next_trade_id: first_trade_id,
            rest_remainder: true,
        }
    }

    /// When false, the unfilled part of an aggressive order is dropped
    /// instead of resting.
    pub fn with_rest_remainder(mut self, rest: bool) -> Self {
        self.rest_remainder = rest;
        self
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn next_trade_id(&self) -> u64 {
        self.next_trade_id
    }

    pub fn best_bid(&self) -> Option<Cents> {
        self.bids.keys().next().map(|r| r.0)
    }

    pub fn best_ask(&self) -> Option<Cents> {
        self.asks.keys().next().copied()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Combined commitment of `trader`'s resting orders.
    pub fn exposure_of(&self, trader: TraderId) -> Exposure {
        self.exposure.get(&trader).copied().unwrap_or_default()
    }

    pub fn orders_of(&self, trader: TraderId) -> Vec<Order> {
        self.resting_orders()
            .filter(|o| o.trader_id == trader)
            .cloned()
            .collect()
    }

    /// Bids in priority order followed by asks in priority order.
    pub fn resting_orders(&self) -> impl Iterator<Item = &Order> {
        self.bids
            .values()
            .flat_map(|q| q.iter())
            .chain(self.asks.values().flat_map(|q| q.iter()))
    }

    pub fn post(
        &mut self,
        accounts: &mut Accounts,
        order: Order,
        timestamp: u64,
    ) -> Result<PostOutcome, OrderError> {
        if order.price < 1 {
            return Err(OrderError::InvalidPrice);
        }
        if order.quantity == 0 {
            return Err(OrderError::InvalidQuantity);
        }
        let account = accounts
            .get(order.trader_id)
            .ok_or(OrderError::UnknownTrader(order.trader_id))?;
        if let Verdict::Violation(v) =
            validate_order(account, self.exposure_of(order.trader_id), &order)
        {
            return Err(v.into());
        }

        let fills = self.plan_fills(&order)?;
        if fills.is_empty() {
            let order_id = order.order_id;
            self.insert(order);
            return Ok(PostOutcome::Resting { order_id });
        }

        let mut order = order;
        let mut trades = Vec::with_capacity(fills.len());
        for fill in fills {
            self.reduce_resting(order.side.opposite(), fill.price, fill.resting_order_id, fill.quantity);
            let (buyer_id, seller_id) = match order.side {
                Side::Bid => (order.trader_id, fill.resting_owner),
                Side::Ask => (fill.resting_owner, order.trader_id),
            };
            accounts.settle(buyer_id, seller_id, fill.price, fill.quantity);
            order.quantity -= fill.quantity;
            trades.push(Trade {
                trade_id: TradeId(self.next_trade_id),
                period: self.period,
                price: fill.price,
                quantity: fill.quantity,
                buyer_id,
                seller_id,
                resting_order_id: fill.resting_order_id,
                aggressor_order_id: order.order_id,
                timestamp,
            });
            self.next_trade_id += 1;
        }

        let remainder = if order.quantity > 0 && self.rest_remainder {
            let id = order.order_id;
            self.insert(order);
            Some(id)
        } else {
            None
        };
        Ok(PostOutcome::Executed { trades, remainder })
    }

    pub fn cancel(&mut self, trader: TraderId, order_id: OrderId) -> Result<Order, OrderError> {
        let &(side, price) = self
            .index
            .get(&order_id)
            .ok_or(OrderError::NotFound(order_id))?;
        let queue = match side {
            Side::Bid => self.bids.get(&Reverse(price)),
            Side::Ask => self.asks.get(&price),
        }
        .expect("indexed order has a price level");
        let owner = queue
            .iter()
            .find(|o| o.order_id == order_id)
            .map(|o| o.trader_id)
            .expect("indexed order is queued");
        if owner != trader {
            return Err(OrderError::NotOwner(order_id));
        }
        Ok(self.remove(side, price, order_id))
    }

    /// Expires every resting order.
    pub fn clear(&mut self) -> Vec<Order> {
        let drained: Vec<Order> = self.resting_orders().cloned().collect();
        self.bids.clear();
        self.asks.clear();
        self.index.clear();
        self.exposure.clear();
        drained
    }

    /// Book as seen by `viewer`; other traders' orders carry no owner or id.
    pub fn snapshot(&self, viewer: Option<TraderId>) -> BookSnapshot {
        let entry = |o: &Order| {
            let own = Some(o.trader_id) == viewer;
            DepthEntry {
                price: o.price,
                quantity: o.quantity,
                own,
                order_id: own.then_some(o.order_id),
            }
        };
        BookSnapshot {
            best_bid: self.best_bid(),
            best_ask: self.best_ask(),
            bids: self.bids.values().flat_map(|q| q.iter()).map(entry).collect(),
            asks: self.asks.values().flat_map(|q| q.iter()).map(entry).collect(),
        }
    }

    fn plan_fills(&self, order: &Order) -> Result<Vec<Fill>, OrderError> {
        let crosses = |resting: Cents| match order.side {
            Side::Bid => resting <= order.price,
            Side::Ask => resting >= order.price,
        };
        let opposite: Box<dyn Iterator<Item = &Order>> = match order.side {
            Side::Bid => Box::new(self.asks.values().flat_map(|q| q.iter())),
            Side::Ask => Box::new(self.bids.values().flat_map(|q| q.iter())),
        };
        let mut remaining = order.quantity;
        let mut fills = Vec::new();
        for resting in opposite {
            if remaining == 0 || !crosses(resting.price) {
                break;
            }
            if resting.trader_id == order.trader_id {
                return Err(OrderError::SelfCross(resting.order_id));
            }
            let quantity = remaining.min(resting.quantity);
            fills.push(Fill {
                resting_order_id: resting.order_id,
                resting_owner: resting.trader_id,
                price: resting.price,
                quantity,
            });
            remaining -= quantity;
        }
        Ok(fills)
    }

    fn insert(&mut self, order: Order) {
        self.index.insert(order.order_id, (order.side, order.price));
        let e = self.exposure.entry(order.trader_id).or_default();
        *e = *e + order.exposure();
        match order.side {
            Side::Bid => self.bids.entry(Reverse(order.price)).or_default().push_back(order),
            Side::Ask => self.asks.entry(order.price).or_default().push_back(order),
        }
    }

    fn remove(&mut self, side: Side, price: Cents, order_id: OrderId) -> Order {
        let (queue, removed) = match side {
            Side::Bid => {
                let q = self.bids.get_mut(&Reverse(price)).expect("level exists");
                let pos = q.iter().position(|o| o.order_id == order_id).expect("queued");
                let o = q.remove(pos).expect("position valid");
                (q.is_empty(), o)
            }
            Side::Ask => {
                let q = self.asks.get_mut(&price).expect("level exists");
                let pos = q.iter().position(|o| o.order_id == order_id).expect("queued");
                let o = q.remove(pos).expect("position valid");
                (q.is_empty(), o)
            }
        };
        if queue {
            match side {
                Side::Bid => self.bids.remove(&Reverse(price)),
                Side::Ask => self.asks.remove(&price),
            };
        }
        self.index.remove(&order_id);
        self.release(removed.trader_id, removed.exposure());
        removed
    }

    fn reduce_resting(&mut self, side: Side, price: Cents, order_id: OrderId, quantity: u32) {
        let front = match side {
            Side::Bid => self.bids.get_mut(&Reverse(price)).and_then(|q| q.front_mut()),
            Side::Ask => self.asks.get_mut(&price).and_then(|q| q.front_mut()),
        }
        .expect("filled order sits at the front of its level");
        debug_assert_eq!(front.order_id, order_id);
        if front.quantity > quantity {
            front.quantity -= quantity;
            let owner = front.trader_id;
            let released = Order {
                quantity,
                ..front.clone()
            }
            .exposure();
            self.release(owner, released);
        } else {
            self.remove(side, price, order_id);
        }
    }

    fn release(&mut self, trader: TraderId, amount: Exposure) {
        if let Some(e) = self.exposure.get_mut(&trader) {
            e.cash -= amount.cash;
            e.shares -= amount.shares;
            if e.cash == 0 && e.shares == 0 {
                self.exposure.remove(&trader);
            }
        }
    }
}
