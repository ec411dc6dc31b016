//! Translation of new log records into the messages each seat receives.
//! Every broadcast a client sees is derived here from exactly one record
//! (book updates from the last book-changing record of a batch).

use bubblelab_core::exchange::{Cents, Side, TraderId};
use bubblelab_core::session::{
    intrinsic_value, max_present_value, EventKind, EventRecord, Session, SessionPhase,
};

use crate::protocol::{codes, OwnFill, ServerMessage};

pub fn fan_out(session: &Session, records: &[EventRecord]) -> Vec<(TraderId, ServerMessage)> {
    let config = session.config();
    let seats: Vec<TraderId> = (1..=config.n_traders).map(TraderId).collect();
    let mut out = Vec::new();
    let mut dividend: Cents = 0;
    let mut book_seq = None;

    for rec in records {
        match &rec.kind {
            EventKind::PeriodStart {
                intrinsic_value,
                max_present_value,
                period_seconds,
            } => {
                for &s in &seats {
                    out.push((
                        s,
                        ServerMessage::PeriodStart {
                            seq: rec.seq,
                            period: rec.period,
                            n_periods: config.n_periods,
                            period_seconds: *period_seconds,
                            server_time: rec.wall_time,
                            deadline: rec.wall_time + period_seconds * 1000,
                            intrinsic_value: *intrinsic_value,
                            max_present_value: *max_present_value,
                        },
                    ));
                }
            }
            EventKind::OrderPosted { .. } | EventKind::OrderCancelled { .. } => {
                book_seq = Some(rec.seq);
            }
            EventKind::Trade { trade } => {
                book_seq = Some(rec.seq);
                let value = trade.price * Cents::from(trade.quantity);
                let q = i64::from(trade.quantity);
                for &s in &seats {
                    let fill = if s == trade.buyer_id {
                        Some(OwnFill {
                            side: Side::Bid,
                            cash_delta: -value,
                            shares_delta: q,
                        })
                    } else if s == trade.seller_id {
                        Some(OwnFill {
                            side: Side::Ask,
                            cash_delta: value,
                            shares_delta: -q,
                        })
                    } else {
                        None
                    };
                    if fill.is_none() && !config.broadcast_trades {
                        continue;
                    }
                    out.push((
                        s,
                        ServerMessage::TradeNotice {
                            seq: rec.seq,
                            period: trade.period,
                            trade_id: trade.trade_id,
                            price_cents: trade.price,
                            quantity: trade.quantity,
                            server_time: trade.timestamp,
                            fill,
                        },
                    ));
                }
            }
            EventKind::Dividend { per_share, .. } => dividend = *per_share,
            EventKind::PeriodEnd { summaries } => {
                let next_period = (rec.period < config.n_periods).then_some(rec.period + 1);
                for s in summaries {
                    out.push((
                        s.trader_id,
                        ServerMessage::PeriodSummary {
                            seq: rec.seq,
                            period: rec.period,
                            dividend_per_share: dividend,
                            trades: s.trades,
                            shares_bought: s.shares_bought,
                            shares_sold: s.shares_sold,
                            dividend_income: s.dividend_income,
                            cash: s.cash,
                            shares: s.shares,
                            next_period,
                        },
                    ));
                }
            }
            EventKind::Payout {
                trader_id,
                cash,
                showup_fee,
                total,
            } => out.push((
                *trader_id,
                ServerMessage::FinalPayout {
                    seq: rec.seq,
                    cash: *cash,
                    showup_fee: *showup_fee,
                    total: *total,
                },
            )),
            EventKind::SessionEnd {
                aborted: Some(reason),
            } => {
                for &s in &seats {
                    out.push((s, ServerMessage::error(codes::SESSION_ABORTED, reason.clone())));
                }
            }
            EventKind::SessionStart { .. }
            | EventKind::QuestionnaireResponse { .. }
            | EventKind::SessionEnd { aborted: None } => {}
        }
    }

    if let Some(seq) = book_seq {
        if session.phase() == SessionPhase::Trading {
            for &s in &seats {
                out.push((s, book_update(session, s, seq)));
            }
        }
    }
    out
}

pub fn book_update(session: &Session, viewer: TraderId, seq: u64) -> ServerMessage {
    ServerMessage::BookUpdate {
        seq,
        period: session.period(),
        book: session.snapshot(Some(viewer)),
    }
}

/// Reference values for the current period, if one has started.
pub fn period_values(session: &Session) -> (Option<Cents>, Option<Cents>) {
    let t = session.period();
    (
        intrinsic_value(session.config(), t).ok(),
        max_present_value(session.config(), t).ok(),
    )
}
