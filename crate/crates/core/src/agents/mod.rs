//! Simulated traders.
//!
//! Three policies, one per candidate explanation of laboratory bubbles:
//!
//! * [`AgentPolicy::Fundamentalist`] prices off the intrinsic value and never
//!   pays more than it.
//! * [`AgentPolicy::Zic`] is a zero-intelligence trader constrained only by its
//!   budget: unbiased noise.
//! * [`AgentPolicy::AnchorSpeculator`] anchors on the last traded price and
//!   adds a resale markup. Speculators all anchor on the same public price, so
//!   their mispricing is shared rather than idiosyncratic. This is a modelling
//!   choice for shared, self-reinforcing mispricing, not a calibrated model of
//!   human traders.

mod roster;
mod sim;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use roster::{Roster, RosterError, PRESETS};
pub use sim::{run_simulation, simulate, SimError, SimulationOptions, DEFAULT_TICKS_PER_PERIOD};

use crate::exchange::{Cents, Order, Side};

/// What an agent may observe: public market state plus its own account.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketView {
    pub period: u32,
    pub seconds_remaining: u64,
    pub intrinsic_value: Cents,
    /// Intrinsic value at the start of period 1.
    pub initial_intrinsic_value: Cents,
    pub best_bid: Option<Cents>,
    pub best_ask: Option<Cents>,
    pub last_trade_price: Option<Cents>,
    pub cash: Cents,
    pub shares: i64,
    pub own_orders: Vec<Order>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgentPolicy {
    Fundamentalist {
        /// Width of the uniform quote noise, cents.
        #[serde(default = "default_sigma")]
        sigma: Cents,
        /// Minimum distance of quotes from the intrinsic value, cents.
        #[serde(default)]
        epsilon: Cents,
        /// Per-decision probability of selling into the best bid to raise
        /// cash, whatever its price.
        #[serde(default = "default_liquidity_prob")]
        liquidity_prob: f64,
    },
    Zic,
    AnchorSpeculator {
        /// Weight on the last trade price versus the intrinsic value.
        lambda: f64,
        /// Resale markup added to the reference price, cents.
        markup: Cents,
        #[serde(default = "default_sigma")]
        sigma: Cents,
    },
}

fn default_sigma() -> Cents {
    10
}

fn default_liquidity_prob() -> f64 {
    0.005
}

impl AgentPolicy {
    pub fn fundamentalist() -> Self {
        AgentPolicy::Fundamentalist {
            sigma: default_sigma(),
            epsilon: 0,
            liquidity_prob: default_liquidity_prob(),
        }
    }

    pub fn speculator(lambda: f64) -> Self {
        AgentPolicy::AnchorSpeculator {
            lambda,
            markup: 5,
            sigma: default_sigma(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AgentPolicy::Fundamentalist { .. } => "FUNDAMENTALIST",
            AgentPolicy::Zic => "ZIC",
            AgentPolicy::AnchorSpeculator { .. } => "ANCHOR_SPECULATOR",
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            AgentPolicy::Fundamentalist {
                sigma,
                epsilon,
                liquidity_prob,
            } => {
                if sigma < 0 || epsilon < 0 {
                    return Err("sigma and epsilon must be non-negative".into());
                }
                if !(0.0..=1.0).contains(&liquidity_prob) {
                    return Err("liquidity_prob must lie in [0, 1]".into());
                }
            }
            AgentPolicy::Zic => {}
            AgentPolicy::AnchorSpeculator {
                lambda,
                markup,
                sigma,
            } => {
                if !(0.0..=1.0).contains(&lambda) {
                    return Err("lambda must lie in [0, 1]".into());
                }
                if markup < 0 || sigma < 0 {
                    return Err("markup and sigma must be non-negative".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderIntent {
    pub side: Side,
    pub price: Cents,
    pub quantity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Hold,
    Order(OrderIntent),
}

impl Decision {
    pub fn intent(&self) -> Option<OrderIntent> {
        match self {
            Decision::Hold => None,
            Decision::Order(i) => Some(*i),
        }
    }
}

fn bid(price: Cents) -> Decision {
    Decision::Order(OrderIntent {
        side: Side::Bid,
        price,
        quantity: 1,
    })
}

fn ask(price: Cents) -> Decision {
    Decision::Order(OrderIntent {
        side: Side::Ask,
        price,
        quantity: 1,
    })
}

/// Picks a side among those the agent can afford; `None` if neither.
fn pick_side<R: Rng + ?Sized>(rng: &mut R, can_bid: bool, can_ask: bool) -> Option<Side> {
    let coin = rng.gen_bool(0.5);
    match (can_bid, can_ask) {
        (true, true) => Some(if coin { Side::Bid } else { Side::Ask }),
        (true, false) => Some(Side::Bid),
        (false, true) => Some(Side::Ask),
        (false, false) => None,
    }
}

/// One decision. Agents hold a single resting order at a time, so the
/// budget checks use the whole account; intents the agent cannot afford
/// degrade to [`Decision::Hold`].
pub fn decide<R: Rng + ?Sized>(policy: &AgentPolicy, view: &MarketView, rng: &mut R) -> Decision {
    let decision = match *policy {
        AgentPolicy::Fundamentalist {
            sigma,
            epsilon,
            liquidity_prob,
        } => fundamentalist(view, sigma, epsilon, liquidity_prob, rng),
        AgentPolicy::Zic => zic(view, rng),
        AgentPolicy::AnchorSpeculator {
            lambda,
            markup,
            sigma,
        } => speculator(view, lambda, markup, sigma, rng),
    };
    match decision {
        Decision::Order(i) if i.price < 1 => Decision::Hold,
        Decision::Order(i) if i.side == Side::Bid && i.price * Cents::from(i.quantity) > view.cash => {
            Decision::Hold
        }
        Decision::Order(i) if i.side == Side::Ask && i64::from(i.quantity) > view.shares => {
            Decision::Hold
        }
        d => d,
    }
}

fn fundamentalist<R: Rng + ?Sized>(
    view: &MarketView,
    sigma: Cents,
    epsilon: Cents,
    liquidity_prob: f64,
    rng: &mut R,
) -> Decision {
    let f = view.intrinsic_value;
    let liquidity_draw: f64 = rng.gen();
    if view.shares > 0 && liquidity_draw < liquidity_prob {
        if let Some(b) = view.best_bid {
            return ask(b);
        }
    }
    if let Some(a) = view.best_ask {
        if a <= f - epsilon && a <= view.cash {
            return bid(a);
        }
    }
    if let Some(b) = view.best_bid {
        if b >= f + epsilon && view.shares > 0 {
            return ask(b);
        }
    }
    let noise = rng.gen_range(0..=sigma);
    let bid_price = f - epsilon - noise;
    let can_bid = bid_price >= 1 && bid_price <= view.cash;
    match pick_side(rng, can_bid, view.shares > 0) {
        Some(Side::Bid) => bid(bid_price),
        Some(Side::Ask) => ask(f + epsilon + noise),
        None => Decision::Hold,
    }
}

fn zic<R: Rng + ?Sized>(view: &MarketView, rng: &mut R) -> Decision {
    let ceiling = 2 * view.initial_intrinsic_value;
    if ceiling < 1 {
        return Decision::Hold;
    }
    let bid_ceiling = ceiling.min(view.cash);
    match pick_side(rng, bid_ceiling >= 1, view.shares > 0) {
        Some(Side::Bid) => bid(rng.gen_range(1..=bid_ceiling)),
        Some(Side::Ask) => ask(rng.gen_range(1..=ceiling)),
        None => Decision::Hold,
    }
}

fn speculator<R: Rng + ?Sized>(
    view: &MarketView,
    lambda: f64,
    markup: Cents,
    sigma: Cents,
    rng: &mut R,
) -> Decision {
    let f = view.intrinsic_value as f64;
    let anchor = view.last_trade_price.map_or(f, |p| p as f64);
    let reference = lambda * anchor + (1.0 - lambda) * f;
    let target = reference.round() as Cents + markup;
    let noise = rng.gen_range(-sigma..=sigma);
    let price = (target + noise).max(1);
    match pick_side(rng, price <= view.cash, view.shares > 0) {
        Some(Side::Bid) => bid(price),
        Some(Side::Ask) => ask(price),
        None => Decision::Hold,
    }
}
