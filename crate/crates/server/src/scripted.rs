//! Drives a complete live session over loopback with one scripted client
//! per seat, on a virtual clock.

use std::collections::BTreeMap;

use bubblelab_core::exchange::TraderId;
use bubblelab_core::session::{Command, EventLog, Schedule, SessionConfig};
use thiserror::Error;

use crate::client::{Client, ClientError};
use crate::clock::VirtualClock;
use crate::protocol::{ClientMessage, QuestionnaireAnswer, ServerMessage};
use crate::server::{ServeError, Server, ServerOptions};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error(transparent)]
    Serve(#[from] ServeError),
    #[error("trader {trader}: {source}")]
    Client {
        trader: TraderId,
        source: ClientError,
    },
    #[error("expected seat {expected}, server assigned {actual}")]
    SeatOrder { expected: TraderId, actual: TraderId },
    #[error("server task failed: {0}")]
    Join(String),
    #[error("server ended the session early: {0}")]
    Aborted(String),
}

pub struct ScriptedRun {
    pub log: EventLog,
    /// Every message each seat received, in arrival order.
    pub received: BTreeMap<TraderId, Vec<ServerMessage>>,
}

struct Bot {
    trader: TraderId,
    client: Client,
    received: Vec<ServerMessage>,
}

impl Bot {
    async fn send(&mut self, msg: &ClientMessage) -> Result<(), ScriptError> {
        let trader = self.trader;
        self.client
            .send(msg)
            .await
            .map_err(|source| ScriptError::Client { trader, source })
    }

    async fn wait_for(
        &mut self,
        pred: impl FnMut(&ServerMessage) -> bool,
    ) -> Result<ServerMessage, ScriptError> {
        let trader = self.trader;
        let (skipped, m) = self
            .client
            .recv_until(pred)
            .await
            .map_err(|source| ScriptError::Client { trader, source })?;
        self.received.extend(skipped);
        self.received.push(m.clone());
        Ok(m)
    }
}

/// Plays `schedule` through a real server: seats join in order, submit
/// their questionnaires, and send each command at its scheduled time. The
/// schedule's offsets are relative to each period's start; periods run back
/// to back from time zero, as with an in-process run of the same schedule.
pub async fn run_scripted_session(
    config: &SessionConfig,
    schedule: &Schedule,
) -> Result<ScriptedRun, ScriptError> {
    let clock = VirtualClock::new(0);
    let options = ServerOptions {
        clock: clock.clock(),
        require_questionnaires: !schedule.questionnaires.is_empty(),
        summary_pause_ms: 0,
        ..ServerOptions::default()
    };
    let server = Server::bind(config.clone(), "127.0.0.1:0", options).await?;
    let addr = server
        .local_addr()
        .map_err(|e| ScriptError::Join(e.to_string()))?;
    let handle = tokio::spawn(server.run());

    let mut bots = Vec::new();
    for i in 1..=config.n_traders {
        let expected = TraderId(i);
        let (client, actual, _) = Client::join(addr, None)
            .await
            .map_err(|source| ScriptError::Client {
                trader: expected,
                source,
            })?;
        if actual != expected {
            return Err(ScriptError::SeatOrder { expected, actual });
        }
        bots.push(Bot {
            trader: actual,
            client,
            received: Vec::new(),
        });
    }

    // consecutive forms of one trader go out as one submission
    let mut runs: Vec<(TraderId, Vec<QuestionnaireAnswer>)> = Vec::new();
    for q in &schedule.questionnaires {
        match runs.last_mut() {
            Some((t, forms)) if *t == q.trader_id() => forms.push(QuestionnaireAnswer::from_record(q)),
            _ => runs.push((q.trader_id(), vec![QuestionnaireAnswer::from_record(q)])),
        }
    }
    for (trader, responses) in runs {
        let bot = &mut bots[trader.0 as usize - 1];
        bot.send(&ClientMessage::SubmitQuestionnaire { responses }).await?;
        bot.wait_for(|m| {
            matches!(m, ServerMessage::SessionInfo(i) if i.questionnaire_submitted)
                || matches!(m, ServerMessage::Error { .. })
        })
        .await?;
    }

    let period_ms = config.period_millis();
    let empty = Vec::new();
    let mut next_ref = 0u64;
    for t in 1..=config.n_periods {
        for bot in bots.iter_mut() {
            bot.wait_for(|m| matches!(m, ServerMessage::PeriodStart { period, .. } if *period == t))
                .await?;
        }
        let start = u64::from(t - 1) * period_ms;
        for cmd in schedule.periods.get(t as usize - 1).unwrap_or(&empty) {
            clock.set(start + cmd.at_ms);
            next_ref += 1;
            let (trader, msg) = match &cmd.command {
                Command::Post {
                    trader_id,
                    side,
                    price,
                    quantity,
                } => (
                    *trader_id,
                    ClientMessage::PostOrder {
                        side: *side,
                        price_cents: *price,
                        quantity: *quantity,
                        client_ref: Some(next_ref),
                    },
                ),
                Command::Cancel {
                    trader_id,
                    order_id,
                } => (
                    *trader_id,
                    ClientMessage::CancelOrder {
                        order_id: *order_id,
                        client_ref: Some(next_ref),
                    },
                ),
            };
            let bot = &mut bots[trader.0 as usize - 1];
            bot.send(&msg).await?;
            let r = Some(next_ref);
            bot.wait_for(|m| match m {
                ServerMessage::OrderAck { client_ref, .. }
                | ServerMessage::OrderReject { client_ref, .. } => *client_ref == r,
                _ => false,
            })
            .await?;
        }
        clock.set(u64::from(t) * period_ms);
        for bot in bots.iter_mut() {
            bot.wait_for(|m| matches!(m, ServerMessage::PeriodSummary { period, .. } if *period == t))
                .await?;
        }
    }
    for bot in bots.iter_mut() {
        bot.wait_for(|m| matches!(m, ServerMessage::FinalPayout { .. })).await?;
    }

    let outcome = handle.await.map_err(|e| ScriptError::Join(e.to_string()))?;
    if let Some(reason) = outcome.aborted {
        return Err(ScriptError::Aborted(reason));
    }
    let mut received = BTreeMap::new();
    for mut bot in bots {
        let rest = bot.client.drain().await.unwrap_or_default();
        bot.received.extend(rest);
        received.insert(bot.trader, bot.received);
    }
    Ok(ScriptedRun {
        log: outcome.log,
        received,
    })
}
