use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{draw_dividend, intrinsic_value, max_present_value, SessionConfig};
use super::event::{DividendCredit, EventKind, EventLog, TraderSummary};
use super::questionnaire::QuestionnaireRecord;
use super::SessionError;
use crate::exchange::{
    Accounts, BookSnapshot, Cents, Order, OrderBook, OrderId, PostOutcome, Side, Trade,
    TraderAccount, TraderId,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionPhase {
    PreTrade,
    Trading,
    BetweenPeriods,
    Ended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PeriodPhase {
    Trading,
    Settled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodState {
    pub period: u32,
    pub phase: PeriodPhase,
    pub clock_remaining: u64,
    pub dividend_realized: Option<Cents>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodResult {
    pub period: u32,
    pub trades: Vec<Trade>,
    pub dividend: Cents,
    pub summaries: Vec<TraderSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payout {
    pub trader_id: TraderId,
    pub cash: Cents,
    pub showup_fee: Cents,
    pub total: Cents,
}

/// Cash paid out at the end: holdings in cash plus the show-up fee. Shares
/// are worthless after the last dividend.
pub fn payout_for(account: &TraderAccount, config: &SessionConfig) -> Cents {
    account.cash + config.showup_fee
}

/// A market command with the trader it comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Command {
    Post {
        trader_id: TraderId,
        side: Side,
        price: Cents,
        quantity: u32,
    },
    Cancel {
        trader_id: TraderId,
        order_id: OrderId,
    },
}

/// A command stamped with its offset from the start of its period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedCommand {
    pub at_ms: u64,
    #[serde(flatten)]
    pub command: Command,
}

/// Single-writer sequencer for one session. Every mutation goes through a
/// method taking the current clock reading and is appended to the log.
#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    accounts: Accounts,
    log: EventLog,
    phase: SessionPhase,
    period: u32,
    book: OrderBook,
    period_start: u64,
    period_trades: Vec<Trade>,
    next_order_id: u64,
    next_trade_id: u64,
    dividend_rng: ChaCha8Rng,
    last_dividend: Option<Cents>,
    aborted: Option<String>,
}

impl Session {
    pub fn new(config: SessionConfig, now: u64) -> Result<Self, SessionError> {
        config.validate()?;
        let accounts = Accounts::with_endowment(
            config.n_traders,
            config.endowment_cash,
            config.endowment_shares,
        );
        let mut log = EventLog::new();
        log.append(
            now,
            &config.session_id,
            0,
            EventKind::SessionStart {
                config: config.clone(),
            },
        );
        Ok(Self {
            dividend_rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            book: OrderBook::new(0, 1),
            config,
            accounts,
            log,
            phase: SessionPhase::PreTrade,
            period: 0,
            period_start: now,
            period_trades: Vec::new(),
            next_order_id: 1,
            next_trade_id: 1,
            last_dividend: None,
            aborted: None,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn accounts(&self) -> &Accounts {
        &self.accounts
    }

    pub fn account(&self, trader: TraderId) -> Option<&TraderAccount> {
        self.accounts.get(trader)
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn into_log(self) -> EventLog {
        self.log
    }

    pub fn phase(&self) -> SessionPhase {
        self.phase
    }

    /// Index of the current (or most recently settled) period; 0 before the
    /// first period starts.
    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn period_start(&self) -> u64 {
        self.period_start
    }

    pub fn period_deadline(&self) -> u64 {
        self.period_start + self.config.period_millis()
    }

    pub fn aborted(&self) -> Option<&str> {
        self.aborted.as_deref()
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn snapshot(&self, viewer: Option<TraderId>) -> BookSnapshot {
        self.book.snapshot(viewer)
    }

    pub fn period_state(&self, now: u64) -> PeriodState {
        match self.phase {
            SessionPhase::Trading => PeriodState {
                period: self.period,
                phase: PeriodPhase::Trading,
                clock_remaining: self.period_deadline().saturating_sub(now) / 1000,
                dividend_realized: None,
            },
            _ => PeriodState {
                period: self.period,
                phase: PeriodPhase::Settled,
                clock_remaining: 0,
                dividend_realized: self.last_dividend,
            },
        }
    }

    fn require(&self, expected: &'static str, ok: bool) -> Result<(), SessionError> {
        if ok {
            Ok(())
        } else {
            Err(SessionError::WrongPhase {
                expected,
                actual: self.phase,
            })
        }
    }

    fn append(&mut self, now: u64, period: u32, kind: EventKind) -> u64 {
        self.log.append(now, &self.config.session_id, period, kind)
    }

    pub fn record_questionnaire(
        &mut self,
        now: u64,
        record: QuestionnaireRecord,
    ) -> Result<u64, SessionError> {
        self.require("PRE_TRADE", self.phase == SessionPhase::PreTrade)?;
        if self.accounts.get(record.trader_id()).is_none() {
            return Err(SessionError::UnknownTrader(record.trader_id()));
        }
        record
            .check(self.config.n_periods)
            .map_err(SessionError::InvalidQuestionnaire)?;
        Ok(self.append(now, 0, EventKind::QuestionnaireResponse { response: record }))
    }

    pub fn start_period(&mut self, now: u64) -> Result<PeriodState, SessionError> {
        self.require(
            "PRE_TRADE or BETWEEN_PERIODS",
            matches!(
                self.phase,
                SessionPhase::PreTrade | SessionPhase::BetweenPeriods
            ),
        )?;
        let t = self.period + 1;
        let intrinsic = intrinsic_value(&self.config, t)?;
        let max_pv = max_present_value(&self.config, t)?;
        self.period = t;
        self.phase = SessionPhase::Trading;
        self.period_start = now;
        self.period_trades.clear();
        self.last_dividend = None;
        self.book =
            OrderBook::new(t, self.next_trade_id).with_rest_remainder(self.config.rest_partial_fills);
        self.append(
            now,
            t,
            EventKind::PeriodStart {
                intrinsic_value: intrinsic,
                max_present_value: max_pv,
                period_seconds: self.config.period_seconds,
            },
        );
        Ok(self.period_state(now))
    }

    fn require_open_period(&self, now: u64) -> Result<(), SessionError> {
        self.require("TRADING", self.phase == SessionPhase::Trading)?;
        if now >= self.period_deadline() {
            return Err(SessionError::PeriodExpired);
        }
        Ok(())
    }

    pub fn post_order(
        &mut self,
        now: u64,
        trader_id: TraderId,
        side: Side,
        price: Cents,
        quantity: u32,
    ) -> Result<PostOutcome, SessionError> {
        self.require_open_period(now)?;
        let order = Order {
            order_id: OrderId(self.next_order_id),
            trader_id,
            side,
            price,
            quantity,
            submitted_seq: self.next_order_id,
        };
        let outcome = self.book.post(&mut self.accounts, order.clone(), now)?;
        self.next_order_id += 1;
        self.next_trade_id = self.book.next_trade_id();
        let t = self.period;
        self.append(now, t, EventKind::OrderPosted { order });
        for trade in outcome.trades() {
            self.append(now, t, EventKind::Trade { trade: trade.clone() });
        }
        self.period_trades.extend_from_slice(outcome.trades());
        Ok(outcome)
    }

    pub fn cancel_order(
        &mut self,
        now: u64,
        trader_id: TraderId,
        order_id: OrderId,
    ) -> Result<Order, SessionError> {
        self.require_open_period(now)?;
        let order = self.book.cancel(trader_id, order_id)?;
        let t = self.period;
        self.append(now, t, EventKind::OrderCancelled { order_id, trader_id });
        Ok(order)
    }

    pub fn apply(&mut self, now: u64, command: &Command) -> Result<Vec<Trade>, SessionError> {
        match *command {
            Command::Post {
                trader_id,
                side,
                price,
                quantity,
            } => self
                .post_order(now, trader_id, side, price, quantity)
                .map(|o| o.trades().to_vec()),
            Command::Cancel {
                trader_id,
                order_id,
            } => self.cancel_order(now, trader_id, order_id).map(|_| Vec::new()),
        }
    }

    /// Closes the current period: expires the book, draws the dividend,
    /// credits it on shares held at the close and logs the summaries.
    pub fn end_period(&mut self, now: u64) -> Result<PeriodResult, SessionError> {
        self.require("TRADING", self.phase == SessionPhase::Trading)?;
        let t = self.period;
        self.book.clear();
        let per_share = draw_dividend(&mut self.dividend_rng, &self.config);
        let mut credits = Vec::with_capacity(self.accounts.len());
        for acct in self.accounts.iter_mut() {
            let amount = per_share * acct.shares;
            acct.cash += amount;
            acct.dividend_income += amount;
            credits.push(DividendCredit {
                trader_id: acct.trader_id,
                shares: acct.shares,
                amount,
            });
        }
        self.append(now, t, EventKind::Dividend { per_share, credits: credits.clone() });

        let summaries: Vec<TraderSummary> = self
            .accounts
            .iter()
            .zip(&credits)
            .map(|(acct, credit)| {
                let id = acct.trader_id;
                let mut s = TraderSummary {
                    trader_id: id,
                    trades: 0,
                    shares_bought: 0,
                    shares_sold: 0,
                    dividend_income: credit.amount,
                    cash: acct.cash,
                    shares: acct.shares,
                };
                for tr in &self.period_trades {
                    if tr.buyer_id == id {
                        s.trades += 1;
                        s.shares_bought += tr.quantity;
                    }
                    if tr.seller_id == id {
                        s.trades += 1;
                        s.shares_sold += tr.quantity;
                    }
                }
                s
            })
            .collect();
        self.append(now, t, EventKind::PeriodEnd { summaries: summaries.clone() });

        self.phase = SessionPhase::BetweenPeriods;
        self.last_dividend = Some(per_share);
        Ok(PeriodResult {
            period: t,
            trades: std::mem::take(&mut self.period_trades),
            dividend: per_share,
            summaries,
        })
    }

    /// Runs period `t` in process: opens it at `start`, applies `commands`
    /// at their offsets and closes it at the period deadline. Commands the
    /// market rejects leave no trace, exactly as for a live client.
    pub fn run_period<'a>(
        &mut self,
        t: u32,
        start: u64,
        commands: impl IntoIterator<Item = &'a TimedCommand>,
    ) -> Result<PeriodResult, SessionError> {
        if t != self.period + 1 {
            return Err(SessionError::PeriodOutOfRange(super::PeriodOutOfRange {
                period: t,
                n_periods: self.config.n_periods,
            }));
        }
        self.start_period(start)?;
        for cmd in commands {
            let _ = self.apply(start + cmd.at_ms, &cmd.command);
        }
        let deadline = self.period_deadline();
        self.end_period(deadline)
    }

    /// Pays everyone out and ends the session. Requires all periods settled.
    pub fn finish(&mut self, now: u64) -> Result<Vec<Payout>, SessionError> {
        self.require(
            "BETWEEN_PERIODS after the last period",
            self.phase == SessionPhase::BetweenPeriods && self.period == self.config.n_periods,
        )?;
        let payouts: Vec<Payout> = self
            .accounts
            .iter()
            .map(|a| Payout {
                trader_id: a.trader_id,
                cash: a.cash,
                showup_fee: self.config.showup_fee,
                total: payout_for(a, &self.config),
            })
            .collect();
        for p in &payouts {
            self.append(
                now,
                0,
                EventKind::Payout {
                    trader_id: p.trader_id,
                    cash: p.cash,
                    showup_fee: p.showup_fee,
                    total: p.total,
                },
            );
        }
        self.append(now, 0, EventKind::SessionEnd { aborted: None });
        self.phase = SessionPhase::Ended;
        Ok(payouts)
    }

    pub fn abort(&mut self, now: u64, reason: &str) {
        if self.phase == SessionPhase::Ended {
            return;
        }
        self.book.clear();
        self.append(
            now,
            0,
            EventKind::SessionEnd {
                aborted: Some(reason.to_string()),
            },
        );
        self.phase = SessionPhase::Ended;
        self.aborted = Some(reason.to_string());
    }

    pub fn final_payout(&self, trader: TraderId) -> Result<Cents, SessionError> {
        if self.phase != SessionPhase::Ended || self.aborted.is_some() {
            return Err(SessionError::SessionNotEnded);
        }
        let acct = self
            .accounts
            .get(trader)
            .ok_or(SessionError::UnknownTrader(trader))?;
        Ok(payout_for(acct, &self.config))
    }
}
