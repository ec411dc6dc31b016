//! Rebuilds a session from its log alone and checks that doing so
//! regenerates the same log.

use thiserror::Error;

use super::engine::{Session, SessionPhase};
use super::event::{EventKind, EventLog, EventRecord};
use crate::exchange::Accounts;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ReplayError {
    #[error("log is empty")]
    Empty,
    #[error("first record must be SESSION_START")]
    MissingStart,
    #[error("record {seq}: {message}")]
    Rejected { seq: u64, message: String },
    #[error("record {seq}: replay produced {produced}")]
    Mismatch { seq: u64, produced: String },
    #[error("replay produced {produced} records, log has {logged}")]
    Length { produced: usize, logged: usize },
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub session: Session,
}

impl ReplayOutcome {
    pub fn accounts(&self) -> &Accounts {
        self.session.accounts()
    }

    pub fn log(&self) -> &EventLog {
        self.session.log()
    }
}

/// Re-drives a fresh [`Session`] with the commands found in `records` and
/// requires the regenerated log to equal the input record for record.
pub fn replay(records: &[EventRecord]) -> Result<ReplayOutcome, ReplayError> {
    let first = records.first().ok_or(ReplayError::Empty)?;
    let EventKind::SessionStart { config } = &first.kind else {
        return Err(ReplayError::MissingStart);
    };
    let rejected = |seq: u64, e: &dyn std::fmt::Display| ReplayError::Rejected {
        seq,
        message: e.to_string(),
    };
    let mut session = Session::new(config.clone(), first.wall_time).map_err(|e| rejected(first.seq, &e))?;

    for rec in &records[1..] {
        let now = rec.wall_time;
        let result = match &rec.kind {
            EventKind::SessionStart { .. } => {
                return Err(rejected(rec.seq, &"duplicate SESSION_START"));
            }
            EventKind::QuestionnaireResponse { response } => session
                .record_questionnaire(now, response.clone())
                .map(|_| ()),
            EventKind::PeriodStart { .. } => session.start_period(now).map(|_| ()),
            EventKind::OrderPosted { order } => session
                .post_order(now, order.trader_id, order.side, order.price, order.quantity)
                .map(|_| ()),
            EventKind::OrderCancelled {
                order_id,
                trader_id,
            } => session.cancel_order(now, *trader_id, *order_id).map(|_| ()),
            EventKind::Dividend { .. } => session.end_period(now).map(|_| ()),
            EventKind::Payout { .. } if session.phase() != SessionPhase::Ended => {
                session.finish(now).map(|_| ())
            }
            EventKind::SessionEnd {
                aborted: Some(reason),
            } => {
                session.abort(now, reason);
                Ok(())
            }
            // produced as a side effect of an earlier record
            EventKind::Trade { .. }
            | EventKind::PeriodEnd { .. }
            | EventKind::Payout { .. }
            | EventKind::SessionEnd { aborted: None } => Ok(()),
        };
        result.map_err(|e| rejected(rec.seq, &e))?;

        if let Some(produced) = session.log().records().get(rec.seq as usize - 1) {
            if produced != rec {
                return Err(ReplayError::Mismatch {
                    seq: rec.seq,
                    produced: serde_json::to_string(produced).unwrap_or_default(),
                });
            }
        }
    }

    let produced = session.log().len();
    if produced != records.len() {
        return Err(ReplayError::Length {
            produced,
            logged: records.len(),
        });
    }
    if session.log().records() != records {
        let seq = session
            .log()
            .records()
            .iter()
            .zip(records)
            .find(|(a, b)| a != b)
            .map_or(0, |(a, _)| a.seq);
        return Err(ReplayError::Mismatch {
            seq,
            produced: "a different record".into(),
        });
    }
    Ok(ReplayOutcome { session })
}
