//! Brute-force reference matcher. It keeps resting orders in a flat list
//! and re-sorts candidates on every submission, sharing no code with the
//! exchange so the two can be compared order by order.

use std::collections::BTreeMap;

use bubblelab_core::exchange::{
    Accounts, Order, OrderBook, OrderId, PostOutcome, Side, TraderId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefOrder {
    pub id: u64,
    pub trader: u32,
    pub side: Side,
    pub price: i64,
    pub qty: u32,
}

/// (price, quantity, buyer, seller, resting order id)
pub type RefFill = (i64, u32, u32, u32, u64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefResult {
    Rejected(&'static str),
    Accepted { fills: Vec<RefFill>, rested: bool },
}

#[derive(Debug, Clone)]
pub struct RefMarket {
    pub resting: Vec<RefOrder>,
    pub cash: BTreeMap<u32, i64>,
    pub shares: BTreeMap<u32, i64>,
    pub rest_remainder: bool,
}

impl RefMarket {
    pub fn submit(&mut self, o: RefOrder) -> RefResult {
        if o.price < 1 {
            return RefResult::Rejected("invalid_price");
        }
        if o.qty == 0 {
            return RefResult::Rejected("invalid_quantity");
        }
        let Some(&cash) = self.cash.get(&o.trader) else {
            return RefResult::Rejected("unknown_trader");
        };
        let shares = self.shares[&o.trader];
        let mine = self
            .resting
            .iter()
            .filter(|r| r.trader == o.trader && r.side == o.side);
        match o.side {
            Side::Bid => {
                let committed: i64 = mine.map(|r| r.price * i64::from(r.qty)).sum();
                if committed + o.price * i64::from(o.qty) > cash {
                    return RefResult::Rejected("insufficient_cash");
                }
            }
            Side::Ask => {
                let committed: i64 = mine.map(|r| i64::from(r.qty)).sum();
                if committed + i64::from(o.qty) > shares {
                    return RefResult::Rejected("insufficient_shares");
                }
            }
        }

        // candidates in priority order: best price first, then earliest id
        let mut candidates: Vec<RefOrder> = self
            .resting
            .iter()
            .filter(|r| {
                r.side != o.side
                    && match o.side {
                        Side::Bid => r.price <= o.price,
                        Side::Ask => r.price >= o.price,
                    }
            })
            .cloned()
            .collect();
        candidates.sort_by_key(|r| {
            let key = match o.side {
                Side::Bid => r.price,
                Side::Ask => -r.price,
            };
            (key, r.id)
        });

        let mut remaining = o.qty;
        let mut fills = Vec::new();
        for c in &candidates {
            if remaining == 0 {
                break;
            }
            if c.trader == o.trader {
                return RefResult::Rejected("self_cross");
            }
            let q = remaining.min(c.qty);
            let (buyer, seller) = match o.side {
                Side::Bid => (o.trader, c.trader),
                Side::Ask => (c.trader, o.trader),
            };
            fills.push((c.price, q, buyer, seller, c.id));
            remaining -= q;
        }

        for &(price, q, buyer, seller, resting_id) in &fills {
            let value = price * i64::from(q);
            *self.cash.get_mut(&buyer).unwrap() -= value;
            *self.cash.get_mut(&seller).unwrap() += value;
            *self.shares.get_mut(&buyer).unwrap() += i64::from(q);
            *self.shares.get_mut(&seller).unwrap() -= i64::from(q);
            let r = self.resting.iter_mut().find(|r| r.id == resting_id).unwrap();
            r.qty -= q;
        }
        self.resting.retain(|r| r.qty > 0);

        let rested = remaining > 0 && (fills.is_empty() || self.rest_remainder);
        if rested {
            self.resting.push(RefOrder { qty: remaining, ..o });
        }
        RefResult::Accepted { fills, rested }
    }

    pub fn cancel(&mut self, trader: u32, id: u64) -> Result<(), &'static str> {
        let pos = self
            .resting
            .iter()
            .position(|r| r.id == id)
            .ok_or("not_found")?;
        if self.resting[pos].trader != trader {
            return Err("not_owner");
        }
        self.resting.remove(pos);
        Ok(())
    }
}

fn outcome_of(result: Result<PostOutcome, bubblelab_core::exchange::OrderError>) -> RefResult {
    match result {
        Err(e) => RefResult::Rejected(e.code()),
        Ok(PostOutcome::Resting { .. }) => RefResult::Accepted {
            fills: vec![],
            rested: true,
        },
        Ok(PostOutcome::Executed { trades, remainder }) => RefResult::Accepted {
            fills: trades
                .iter()
                .map(|t| {
                    (
                        t.price,
                        t.quantity,
                        t.buyer_id.0,
                        t.seller_id.0,
                        t.resting_order_id.0,
                    )
                })
                .collect(),
            rested: remainder.is_some(),
        },
    }
}

fn book_state(book: &OrderBook) -> Vec<RefOrder> {
    let mut v: Vec<RefOrder> = book
        .resting_orders()
        .map(|o| RefOrder {
            id: o.order_id.0,
            trader: o.trader_id.0,
            side: o.side,
            price: o.price,
            qty: o.quantity,
        })
        .collect();
    v.sort_by_key(|r| r.id);
    v
}

/// Drives the exchange and the reference with one random sequence of at
/// most `max_orders` orders from at most `max_traders` traders and reports
/// the first divergence.
#[derive(Debug, Default, Clone)]
pub struct Coverage {
    pub fills: usize,
    pub partial_remainders: usize,
    pub rejections: BTreeMap<&'static str, usize>,
}

pub fn check_sequence(seed: u64, max_orders: usize, max_traders: u32) -> Result<Coverage, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_traders = rng.gen_range(2..=max_traders);
    let rest_remainder = rng.gen_bool(0.8);
    let mut accounts = Accounts::with_endowment(n_traders, 0, 0);
    let mut reference = RefMarket {
        resting: vec![],
        cash: BTreeMap::new(),
        shares: BTreeMap::new(),
        rest_remainder,
    };
    for t in 1..=n_traders {
        let cash = rng.gen_range(0..=600);
        let shares = rng.gen_range(0..=4);
        let acct = accounts.get_mut(TraderId(t)).unwrap();
        acct.cash = cash;
        acct.shares = shares;
        reference.cash.insert(t, cash);
        reference.shares.insert(t, shares);
    }
    let mut book = OrderBook::new(1, 1).with_rest_remainder(rest_remainder);
    let n_orders = rng.gen_range(1..=max_orders);
    let mut next_id = 1u64;
    let mut coverage = Coverage::default();

    for step in 0..n_orders {
        let stranger = u32::from(rng.gen_bool(0.02));
        let trader = rng.gen_range(1..=n_traders + stranger);
        if next_id > 1 && rng.gen_bool(0.15) {
            let id = rng.gen_range(1..next_id + 1);
            let ours = book
                .cancel(TraderId(trader), OrderId(id))
                .map(|_| ())
                .map_err(|e| e.code());
            let theirs = reference.cancel(trader, id);
            if ours != theirs {
                return Err(format!("seed {seed} step {step}: cancel {ours:?} vs {theirs:?}"));
            }
        } else {
            let side = if rng.gen_bool(0.5) { Side::Bid } else { Side::Ask };
            let price = if rng.gen_bool(0.02) { 0 } else { rng.gen_range(95..=105) };
            let qty = if rng.gen_bool(0.02) { 0 } else { rng.gen_range(1..=3) };
            let order = Order {
                order_id: OrderId(next_id),
                trader_id: TraderId(trader),
                side,
                price,
                quantity: qty,
                submitted_seq: next_id,
            };
            let ours = outcome_of(book.post(&mut accounts, order, step as u64));
            let theirs = reference.submit(RefOrder {
                id: next_id,
                trader,
                side,
                price,
                qty,
            });
            if ours != theirs {
                return Err(format!("seed {seed} step {step}: post {ours:?} vs {theirs:?}"));
            }
            match &ours {
                RefResult::Accepted { fills, rested } => {
                    next_id += 1;
                    coverage.fills += fills.len();
                    if *rested && !fills.is_empty() {
                        coverage.partial_remainders += 1;
                    }
                }
                RefResult::Rejected(code) => *coverage.rejections.entry(code).or_default() += 1,
            }
        }
        if book_state(&book) != {
            let mut r = reference.resting.clone();
            r.sort_by_key(|o| o.id);
            r
        } {
            return Err(format!("seed {seed} step {step}: book diverged"));
        }
        for t in 1..=n_traders {
            let a = accounts.get(TraderId(t)).unwrap();
            if a.cash != reference.cash[&t] || a.shares != reference.shares[&t] {
                return Err(format!("seed {seed} step {step}: account {t} diverged"));
            }
            if a.cash < 0 || a.shares < 0 {
                return Err(format!("seed {seed} step {step}: account {t} negative"));
            }
        }
    }
    Ok(coverage)
}
