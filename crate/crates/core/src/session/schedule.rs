use serde::{Deserialize, Serialize};

use super::config::SessionConfig;
use super::engine::{Command, Session, TimedCommand};
use super::event::{EventKind, EventRecord};
use super::questionnaire::QuestionnaireRecord;
use super::SessionError;

/// A complete, clock-stamped command script for one session: questionnaire
/// submissions at time zero, then per-period commands at offsets into each
/// period. Periods run back to back starting at time zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub questionnaires: Vec<QuestionnaireRecord>,
    pub periods: Vec<Vec<TimedCommand>>,
}

impl Schedule {
    /// Extracts the accepted commands of a logged session.
    pub fn from_log(records: &[EventRecord]) -> Schedule {
        let mut schedule = Schedule::default();
        let mut period_start = 0;
        for rec in records {
            match &rec.kind {
                EventKind::QuestionnaireResponse { response } => {
                    schedule.questionnaires.push(response.clone())
                }
                EventKind::PeriodStart { .. } => {
                    period_start = rec.wall_time;
                    schedule.periods.push(Vec::new());
                }
                EventKind::OrderPosted { order } => {
                    if let Some(p) = schedule.periods.last_mut() {
                        p.push(TimedCommand {
                            at_ms: rec.wall_time - period_start,
                            command: Command::Post {
                                trader_id: order.trader_id,
                                side: order.side,
                                price: order.price,
                                quantity: order.quantity,
                            },
                        });
                    }
                }
                EventKind::OrderCancelled {
                    order_id,
                    trader_id,
                } => {
                    if let Some(p) = schedule.periods.last_mut() {
                        p.push(TimedCommand {
                            at_ms: rec.wall_time - period_start,
                            command: Command::Cancel {
                                trader_id: *trader_id,
                                order_id: *order_id,
                            },
                        });
                    }
                }
                _ => {}
            }
        }
        schedule
    }
}

/// Runs `schedule` in process on a virtual clock starting at zero.
pub fn run_schedule(config: &SessionConfig, schedule: &Schedule) -> Result<Session, SessionError> {
    let mut session = Session::new(config.clone(), 0)?;
    for q in &schedule.questionnaires {
        session.record_questionnaire(0, q.clone())?;
    }
    let period_ms = config.period_millis();
    let empty = Vec::new();
    for t in 1..=config.n_periods {
        let commands = schedule.periods.get(t as usize - 1).unwrap_or(&empty);
        session.run_period(t, u64::from(t - 1) * period_ms, commands)?;
    }
    session.finish(u64::from(config.n_periods) * period_ms)?;
    Ok(session)
}
