use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{decide, AgentPolicy, Decision, MarketView, Roster};
use crate::exchange::{Cents, TraderId};
use crate::session::{
    intrinsic_schedule, AssessmentResponse, DeclaredPrices, EventLog, ItemGroup,
    QuestionnaireRecord, Session, SessionError, SessionConfig, LIKERT_MAX, LIKERT_MIN,
};

pub const DEFAULT_TICKS_PER_PERIOD: u32 = 40;

const ITEMS_PER_GROUP: usize = 3;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("roster has {roster} seats but the session has {traders} traders")]
    RosterSizeMismatch { roster: usize, traders: u32 },
    #[error("seat {seat}: {message}")]
    InvalidPolicy { seat: usize, message: String },
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationOptions {
    /// Decision rounds per period; every agent gets one turn per round.
    pub ticks_per_period: u32,
    /// Whether agents fill in the pre-trade questionnaires.
    pub questionnaires: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            ticks_per_period: DEFAULT_TICKS_PER_PERIOD,
            questionnaires: true,
        }
    }
}

/// Runs a full session with the default options and returns its log.
pub fn run_simulation(
    config: &SessionConfig,
    roster: &Roster,
    seed: u64,
) -> Result<EventLog, SimError> {
    simulate(config, roster, seed, SimulationOptions::default()).map(Session::into_log)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs a session on a virtual clock. The session's dividend seed is
/// replaced by `seed`, so the result is a pure function of
/// `(config, roster, seed, options)`.
pub fn simulate(
    config: &SessionConfig,
    roster: &Roster,
    seed: u64,
    options: SimulationOptions,
) -> Result<Session, SimError> {
    if roster.len() != config.n_traders as usize {
        return Err(SimError::RosterSizeMismatch {
            roster: roster.len(),
            traders: config.n_traders,
        });
    }
    for (i, p) in roster.seats.iter().enumerate() {
        p.validate().map_err(|message| SimError::InvalidPolicy {
            seat: i + 1,
            message,
        })?;
    }
    let config = SessionConfig {
        rng_seed: seed,
        ..config.clone()
    };
    let mut agent_rngs: Vec<ChaCha8Rng> = (0..roster.len())
        .map(|i| stream_rng(seed, 1 + i as u64))
        .collect();
    let mut turn_rng = stream_rng(seed, 0);

    let mut session = Session::new(config.clone(), 0)?;
    let schedule = intrinsic_schedule(&config);
    if options.questionnaires {
        let mut rng = stream_rng(seed, u64::MAX);
        for (i, policy) in roster.seats.iter().enumerate() {
            for q in questionnaire_answers(TraderId(i as u32 + 1), policy, &schedule, &mut rng) {
                session.record_questionnaire(0, q)?;
            }
        }
    }

    let period_ms = config.period_millis();
    let ticks = options.ticks_per_period.max(1);
    let mut last_trade: Option<Cents> = None;
    let mut order: Vec<usize> = (0..roster.len()).collect();
    for t in 1..=config.n_periods {
        let start = u64::from(t - 1) * period_ms;
        session.start_period(start)?;
        for k in 0..ticks {
            let now = start + u64::from(k) * period_ms / u64::from(ticks);
            order.shuffle(&mut turn_rng);
            for &i in &order {
                let trader = TraderId(i as u32 + 1);
                let view = view_for(&session, trader, now, last_trade);
                let Decision::Order(intent) = decide(&roster.seats[i], &view, &mut agent_rngs[i]) else {
                    continue;
                };
                for o in &view.own_orders {
                    session.cancel_order(now, trader, o.order_id)?;
                }
                if let Ok(outcome) =
                    session.post_order(now, trader, intent.side, intent.price, intent.quantity)
                {
                    if let Some(tr) = outcome.trades().last() {
                        last_trade = Some(tr.price);
                    }
                }
            }
        }
        session.end_period(start + period_ms)?;
    }
    session.finish(u64::from(config.n_periods) * period_ms)?;
    Ok(session)
}

fn view_for(session: &Session, trader: TraderId, now: u64, last_trade: Option<Cents>) -> MarketView {
    let config = session.config();
    let t = session.period();
    let schedule_value = |p| crate::session::intrinsic_value(config, p).unwrap_or(0);
    let acct = session.account(trader).expect("seat has an account");
    let book = session.book();
    MarketView {
        period: t,
        seconds_remaining: session.period_deadline().saturating_sub(now) / 1000,
        intrinsic_value: schedule_value(t),
        initial_intrinsic_value: schedule_value(1),
        best_bid: book.best_bid(),
        best_ask: book.best_ask(),
        last_trade_price: last_trade,
        cash: acct.cash,
        shares: acct.shares,
        own_orders: book.orders_of(trader),
    }
}

/// Pre-trade answers. Every agent declares the value schedule with a few
/// cents of noise. Assessment ratings share one latent confidence level per
/// agent across both item groups, so self and others are rated alike.
fn questionnaire_answers<R: Rng>(
    trader: TraderId,
    policy: &AgentPolicy,
    schedule: &[Cents],
    rng: &mut R,
) -> Vec<QuestionnaireRecord> {
    let noise: Cents = match policy {
        AgentPolicy::Fundamentalist { .. } => 2,
        AgentPolicy::Zic => 10,
        AgentPolicy::AnchorSpeculator { .. } => 5,
    };
    let declared = schedule
        .iter()
        .map(|&f| (f + rng.gen_range(-noise..=noise)).max(0))
        .collect();
    let mut out = vec![QuestionnaireRecord::DeclaredPrices(DeclaredPrices {
        trader_id: trader,
        declared_value_per_period: declared,
    })];
    let latent: i32 = rng.gen_range(2..=6);
    for (group, prefix) in [
        (ItemGroup::SelfPrecision, "self"),
        (ItemGroup::OthersPrecision, "others"),
    ] {
        for item in 1..=ITEMS_PER_GROUP {
            let rating = (latent + rng.gen_range(-1..=1))
                .clamp(i32::from(LIKERT_MIN), i32::from(LIKERT_MAX)) as u8;
            out.push(QuestionnaireRecord::Assessment(AssessmentResponse {
                trader_id: trader,
                item_id: format!("{prefix}-{item}"),
                item_group: group,
                rating,
            }));
        }
    }
    out
}
