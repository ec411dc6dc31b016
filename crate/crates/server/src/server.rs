use std::collections::HashMap;
use std::net::SocketAddr;
use std::time::Duration;

use bubblelab_core::exchange::{PostOutcome, TraderId};
use bubblelab_core::session::{EventLog, Session, SessionConfig, SessionError, SessionPhase};
use thiserror::Error;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream, ToSocketAddrs};
use tokio::sync::mpsc;
use tokio::task::{JoinHandle, JoinSet};
use tracing::{debug, info, warn};

use crate::clock::ServerClock;
use crate::codec::{decode_client, encode, DecodeErrorKind, Frame, FrameBuffer};
use crate::fanout::{book_update, fan_out, period_values};
use crate::protocol::{
    codes, AckStatus, ClientMessage, QuestionnaireAnswer, ServerMessage, ServerPhase, SessionInfo,
};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("expected {expected} seat tokens, got {actual}")]
    SeatTokens { expected: u32, actual: usize },
}

#[derive(Debug, Clone)]
pub struct ServerOptions {
    pub clock: ServerClock,
    /// One join token per seat; random tokens are issued when absent.
    pub seat_tokens: Option<Vec<String>>,
    /// Hold period 1 until every seat has submitted a questionnaire.
    pub require_questionnaires: bool,
    /// Pause between a period's end and the next period's start, during
    /// which clients show the period summary.
    pub summary_pause_ms: u64,
    /// How long a seat may stay disconnected after the lobby before the
    /// session is aborted.
    pub disconnect_grace_ms: u64,
}

impl Default for ServerOptions {
    fn default() -> Self {
        Self {
            clock: ServerClock::System,
            seat_tokens: None,
            require_questionnaires: true,
            summary_pause_ms: 10_000,
            disconnect_grace_ms: 60_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServeOutcome {
    pub log: EventLog,
    pub aborted: Option<String>,
}

pub struct Server {
    listener: TcpListener,
    config: SessionConfig,
    options: ServerOptions,
    tokens: Vec<String>,
}

impl Server {
    pub async fn bind(
        config: SessionConfig,
        addr: impl ToSocketAddrs + std::fmt::Display,
        options: ServerOptions,
    ) -> Result<Server, ServeError> {
        config
            .validate()
            .map_err(|e| ServeError::Config(e.to_string()))?;
        let tokens = match &options.seat_tokens {
            Some(t) if t.len() == config.n_traders as usize => t.clone(),
            Some(t) => {
                return Err(ServeError::SeatTokens {
                    expected: config.n_traders,
                    actual: t.len(),
                })
            }
            None => (0..config.n_traders)
                .map(|_| format!("{:016x}", rand::random::<u64>()))
                .collect(),
        };
        let label = addr.to_string();
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|source| ServeError::Bind {
                addr: label,
                source,
            })?;
        Ok(Server {
            listener,
            config,
            options,
            tokens,
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn seat_tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Runs the session to its end (normal or aborted) and returns its log.
    pub async fn run(self) -> ServeOutcome {
        let (tx, rx) = mpsc::unbounded_channel();
        let accept = tokio::spawn(accept_loop(self.listener, tx));
        let now = self.options.clock.now();
        let session = Session::new(self.config, now).expect("config validated at bind");
        let seats = self
            .tokens
            .into_iter()
            .map(|token| Seat {
                token,
                conn: None,
                claimed: false,
                submitted: false,
                away_since: None,
            })
            .collect();
        let mut seq = Sequencer {
            session,
            options: self.options,
            seats,
            conns: HashMap::new(),
            stage: Stage::Lobby,
        };
        info!(session_id = %seq.session.config().session_id, "session open");
        seq.run(rx).await;
        accept.abort();
        seq.shutdown().await;
        ServeOutcome {
            aborted: seq.session.aborted().map(str::to_string),
            log: seq.session.into_log(),
        }
    }
}

type ConnId = u64;

enum Out {
    Msg(ServerMessage),
    Close,
}

enum Inbound {
    Connected {
        conn: ConnId,
        out: mpsc::UnboundedSender<Out>,
        writer: JoinHandle<()>,
    },
    Message {
        conn: ConnId,
        msg: ClientMessage,
    },
    Closed {
        conn: ConnId,
    },
}

async fn accept_loop(listener: TcpListener, tx: mpsc::UnboundedSender<Inbound>) {
    let mut readers = JoinSet::new();
    let mut next: ConnId = 1;
    loop {
        tokio::select! {
            accepted = listener.accept() => match accepted {
                Ok((stream, peer)) => {
                    debug!(%peer, conn = next, "accepted");
                    readers.spawn(connection(next, stream, tx.clone()));
                    next += 1;
                }
                Err(e) => warn!("accept failed: {e}"),
            },
            Some(_) = readers.join_next(), if !readers.is_empty() => {}
        }
    }
}

/// Reads frames from one client. Decode failures are answered directly;
/// everything else goes to the sequencer.
async fn connection(conn: ConnId, stream: TcpStream, tx: mpsc::UnboundedSender<Inbound>) {
    let _ = stream.set_nodelay(true);
    let (mut rd, mut wr) = stream.into_split();
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<Out>();
    let writer = tokio::spawn(async move {
        while let Some(item) = out_rx.recv().await {
            match item {
                Out::Msg(m) => {
                    if wr.write_all(&encode(&m)).await.is_err() {
                        break;
                    }
                }
                Out::Close => break,
            }
        }
        let _ = wr.shutdown().await;
    });
    let reply = out_tx.clone();
    if tx
        .send(Inbound::Connected {
            conn,
            out: out_tx,
            writer,
        })
        .is_err()
    {
        return;
    }

    let mut frames = FrameBuffer::new();
    let mut chunk = vec![0u8; 8192];
    loop {
        let n = match rd.read(&mut chunk).await {
            Ok(0) | Err(_) => break,
            Ok(n) => n,
        };
        frames.extend(&chunk[..n]);
        while let Some(frame) = frames.next_frame() {
            let line = match frame {
                Frame::Line(line) => line,
                Frame::TooLong => {
                    let _ = reply.send(Out::Msg(ServerMessage::error(
                        codes::FRAME_TOO_LONG,
                        "frame exceeds the maximum length",
                    )));
                    continue;
                }
            };
            match decode_client(&line) {
                Ok(msg) => {
                    if tx.send(Inbound::Message { conn, msg }).is_err() {
                        return;
                    }
                }
                Err(e) => {
                    let msg = match e.kind {
                        DecodeErrorKind::InvalidPrice => ServerMessage::OrderReject {
                            client_ref: None,
                            order_id: None,
                            reason: codes::INVALID_PRICE.to_string(),
                            message: e.message.clone(),
                        },
                        DecodeErrorKind::UnknownType => ServerMessage::Error {
                            code: codes::PROTOCOL_VIOLATION.to_string(),
                            message: e.message.clone(),
                            offset: Some(e.offset),
                        },
                        _ => ServerMessage::Error {
                            code: codes::MALFORMED.to_string(),
                            message: e.message.clone(),
                            offset: Some(e.offset),
                        },
                    };
                    let _ = reply.send(Out::Msg(msg));
                }
            }
        }
    }
    if let Some(e) = frames.finish() {
        debug!(conn, "connection closed mid-frame: {e}");
    }
    let _ = tx.send(Inbound::Closed { conn });
}

struct Seat {
    token: String,
    conn: Option<ConnId>,
    claimed: bool,
    submitted: bool,
    away_since: Option<u64>,
}

struct Conn {
    out: mpsc::UnboundedSender<Out>,
    writer: JoinHandle<()>,
    seat: Option<TraderId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Lobby,
    Questionnaire,
    Trading,
    Between { next_start: u64 },
    Ended,
}

struct Sequencer {
    session: Session,
    options: ServerOptions,
    seats: Vec<Seat>,
    conns: HashMap<ConnId, Conn>,
    stage: Stage,
}

impl Sequencer {
    async fn run(&mut self, mut rx: mpsc::UnboundedReceiver<Inbound>) {
        let clock = self.options.clock.clone();
        while self.stage != Stage::Ended {
            let wake = self.next_wake();
            tokio::select! {
                biased;
                ev = rx.recv() => match ev {
                    Some(ev) => self.on_inbound(ev, clock.now()),
                    None => {
                        let now = clock.now();
                        self.abort(now, "listener stopped");
                    }
                },
                _ = async {
                    match wake {
                        Some(t) => clock.sleep_until(t).await,
                        None => std::future::pending().await,
                    }
                } => self.on_timer(clock.now()),
            }
        }
    }

    async fn shutdown(&mut self) {
        let writers: Vec<JoinHandle<()>> = self
            .conns
            .drain()
            .map(|(_, c)| {
                let _ = c.out.send(Out::Close);
                c.writer
            })
            .collect();
        for w in writers {
            let _ = tokio::time::timeout(Duration::from_secs(5), w).await;
        }
    }

    fn next_wake(&self) -> Option<u64> {
        let stage = match self.stage {
            Stage::Trading => Some(self.session.period_deadline()),
            Stage::Between { next_start } => Some(next_start),
            _ => None,
        };
        let away = self
            .seats
            .iter()
            .filter_map(|s| s.away_since)
            .map(|t| t + self.options.disconnect_grace_ms)
            .min();
        match (stage, away) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn send(&self, conn: ConnId, msg: ServerMessage) {
        if let Some(c) = self.conns.get(&conn) {
            let _ = c.out.send(Out::Msg(msg));
        }
    }

    fn send_to_seat(&self, trader: TraderId, msg: ServerMessage) {
        if let Some(conn) = self.seat(trader).and_then(|s| s.conn) {
            self.send(conn, msg);
        }
    }

    fn seat(&self, trader: TraderId) -> Option<&Seat> {
        self.seats.get((trader.0 as usize).checked_sub(1)?)
    }

    fn seat_mut(&mut self, trader: TraderId) -> &mut Seat {
        &mut self.seats[trader.0 as usize - 1]
    }

    /// Delivers everything logged after `after`.
    fn publish_since(&self, after: u64) {
        for (to, msg) in fan_out(&self.session, self.session.log().since(after)) {
            self.send_to_seat(to, msg);
        }
    }

    fn on_inbound(&mut self, ev: Inbound, now: u64) {
        match ev {
            Inbound::Connected { conn, out, writer } => {
                self.conns.insert(
                    conn,
                    Conn {
                        out,
                        writer,
                        seat: None,
                    },
                );
            }
            Inbound::Closed { conn } => {
                let Some(c) = self.conns.remove(&conn) else {
                    return;
                };
                let _ = c.out.send(Out::Close);
                if let Some(t) = c.seat {
                    info!(trader = %t, "seat disconnected");
                    let lobby = self.stage == Stage::Lobby;
                    let seat = self.seat_mut(t);
                    seat.conn = None;
                    if !lobby {
                        seat.away_since = Some(now);
                    }
                }
            }
            Inbound::Message { conn, msg } => self.on_message(conn, msg, now),
        }
    }

    fn on_message(&mut self, conn: ConnId, msg: ClientMessage, now: u64) {
        let seat = self.conns.get(&conn).and_then(|c| c.seat);
        let trader = match (&msg, seat) {
            (ClientMessage::Hello { token }, None) => {
                let token = token.clone();
                return self.on_hello(conn, token, now);
            }
            (ClientMessage::Hello { .. }, Some(_)) => {
                return self.send(conn, ServerMessage::error(codes::ALREADY_JOINED, "this connection already holds a seat"));
            }
            (_, None) => {
                return self.send(conn, ServerMessage::error(codes::NOT_JOINED, "send HELLO first"));
            }
            (_, Some(t)) => t,
        };
        match msg {
            ClientMessage::Hello { .. } => unreachable!("handled above"),
            ClientMessage::Ping => self.send(conn, ServerMessage::SessionInfo(self.info(trader, now))),
            ClientMessage::SubmitQuestionnaire { responses } => {
                self.on_questionnaire(conn, trader, responses, now)
            }
            ClientMessage::PostOrder {
                side,
                price_cents,
                quantity,
                client_ref,
            } => {
                let before = self.session.log().last_seq();
                match self.session.post_order(now, trader, side, price_cents, quantity) {
                    Ok(outcome) => {
                        let (order_id, status, filled) = match &outcome {
                            PostOutcome::Resting { order_id } => (*order_id, AckStatus::Resting, 0),
                            PostOutcome::Executed { trades, remainder } => {
                                let filled: u32 = trades.iter().map(|t| t.quantity).sum();
                                let status = if remainder.is_some() {
                                    AckStatus::Partial
                                } else {
                                    AckStatus::Filled
                                };
                                (trades[0].aggressor_order_id, status, filled)
                            }
                        };
                        let resting = match status {
                            AckStatus::Resting | AckStatus::Partial => quantity - filled,
                            _ => 0,
                        };
                        self.send(
                            conn,
                            ServerMessage::OrderAck {
                                client_ref,
                                seq: before + 1,
                                order_id,
                                status,
                                filled_quantity: filled,
                                resting_quantity: resting,
                            },
                        );
                        self.publish_since(before);
                    }
                    Err(e) => self.reject(conn, client_ref, None, &e),
                }
            }
            ClientMessage::CancelOrder {
                order_id,
                client_ref,
            } => {
                let before = self.session.log().last_seq();
                match self.session.cancel_order(now, trader, order_id) {
                    Ok(order) => {
                        self.send(
                            conn,
                            ServerMessage::OrderAck {
                                client_ref,
                                seq: before + 1,
                                order_id,
                                status: AckStatus::Cancelled,
                                filled_quantity: 0,
                                resting_quantity: order.quantity,
                            },
                        );
                        self.publish_since(before);
                    }
                    Err(e) => self.reject(conn, client_ref, Some(order_id), &e),
                }
            }
        }
    }

    fn reject(
        &self,
        conn: ConnId,
        client_ref: Option<u64>,
        order_id: Option<bubblelab_core::exchange::OrderId>,
        e: &SessionError,
    ) {
        self.send(
            conn,
            ServerMessage::OrderReject {
                client_ref,
                order_id,
                reason: e.code().to_string(),
                message: e.to_string(),
            },
        );
    }

    fn on_hello(&mut self, conn: ConnId, token: Option<String>, now: u64) {
        let index = match &token {
            Some(tok) => match self.seats.iter().position(|s| &s.token == tok) {
                None => {
                    return self.send(conn, ServerMessage::error(codes::INVALID_TOKEN, "no seat has this token"));
                }
                Some(i) if self.seats[i].conn.is_some() => {
                    return self.send(conn, ServerMessage::error(codes::SEAT_IN_USE, "seat is connected elsewhere"));
                }
                Some(i) => i,
            },
            None => match self.seats.iter().position(|s| !s.claimed) {
                Some(i) => i,
                None => {
                    self.send(conn, ServerMessage::error(codes::SEAT_EXHAUSTED, "all seats are taken"));
                    if let Some(c) = self.conns.remove(&conn) {
                        let _ = c.out.send(Out::Close);
                    }
                    return;
                }
            },
        };
        let trader = TraderId(index as u32 + 1);
        let seat = &mut self.seats[index];
        seat.claimed = true;
        seat.conn = Some(conn);
        seat.away_since = None;
        let token = seat.token.clone();
        if let Some(c) = self.conns.get_mut(&conn) {
            c.seat = Some(trader);
        }
        info!(trader = %trader, "seat joined");
        self.send(
            conn,
            ServerMessage::Welcome {
                trader_id: trader,
                token,
                session_id: self.session.config().session_id.clone(),
            },
        );
        self.send(conn, ServerMessage::SessionInfo(self.info(trader, now)));
        if self.stage == Stage::Trading {
            self.send(conn, book_update(&self.session, trader, self.session.log().last_seq()));
        }
        self.advance(now);
    }

    fn on_questionnaire(
        &mut self,
        conn: ConnId,
        trader: TraderId,
        responses: Vec<QuestionnaireAnswer>,
        now: u64,
    ) {
        if !matches!(self.stage, Stage::Lobby | Stage::Questionnaire) {
            return self.send(conn, ServerMessage::error(codes::WRONG_PHASE, "questionnaires are closed"));
        }
        let n_periods = self.session.config().n_periods;
        let records: Vec<_> = responses.into_iter().map(|r| r.into_record(trader)).collect();
        if records.is_empty() {
            return self.send(conn, ServerMessage::error(codes::INVALID_QUESTIONNAIRE, "no responses"));
        }
        if let Some(err) = records.iter().find_map(|r| r.check(n_periods).err()) {
            return self.send(conn, ServerMessage::error(codes::INVALID_QUESTIONNAIRE, err));
        }
        for r in records {
            self.session
                .record_questionnaire(now, r)
                .expect("pre-trade phase and validated record");
        }
        self.seat_mut(trader).submitted = true;
        self.send(conn, ServerMessage::SessionInfo(self.info(trader, now)));
        self.advance(now);
    }

    /// Moves through the pre-trade stages once their conditions hold.
    fn advance(&mut self, now: u64) {
        if self.stage == Stage::Lobby && self.seats.iter().all(|s| s.conn.is_some()) {
            self.stage = Stage::Questionnaire;
            info!("all seats joined");
            if self.options.require_questionnaires {
                for i in 0..self.seats.len() {
                    let t = TraderId(i as u32 + 1);
                    self.send_to_seat(t, ServerMessage::SessionInfo(self.info(t, now)));
                }
            }
        }
        if self.stage == Stage::Questionnaire
            && (!self.options.require_questionnaires || self.seats.iter().all(|s| s.submitted))
        {
            self.start_period(now);
        }
    }

    fn start_period(&mut self, now: u64) {
        let before = self.session.log().last_seq();
        self.session.start_period(now).expect("sequencer starts periods in order");
        self.stage = Stage::Trading;
        info!(period = self.session.period(), "period started");
        self.publish_since(before);
    }

    fn on_timer(&mut self, now: u64) {
        let grace = self.options.disconnect_grace_ms;
        if let Some(i) = self
            .seats
            .iter()
            .position(|s| s.away_since.is_some_and(|t| t + grace <= now))
        {
            let reason = format!("trader {} disconnected", i + 1);
            return self.abort(now, &reason);
        }
        match self.stage {
            Stage::Trading if now >= self.session.period_deadline() => {
                let deadline = self.session.period_deadline();
                let before = self.session.log().last_seq();
                self.session.end_period(deadline).expect("trading period ends");
                let t = self.session.period();
                info!(period = t, "period ended");
                if t < self.session.config().n_periods {
                    self.publish_since(before);
                    if self.options.summary_pause_ms == 0 {
                        self.start_period(deadline);
                    } else {
                        self.stage = Stage::Between {
                            next_start: deadline + self.options.summary_pause_ms,
                        };
                    }
                } else {
                    self.session.finish(deadline).expect("last period settled");
                    self.publish_since(before);
                    self.stage = Stage::Ended;
                    info!("session finished");
                }
            }
            Stage::Between { next_start } if now >= next_start => self.start_period(next_start),
            _ => {}
        }
    }

    fn abort(&mut self, now: u64, reason: &str) {
        warn!("session aborted: {reason}");
        let before = self.session.log().last_seq();
        self.session.abort(now, reason);
        self.publish_since(before);
        self.stage = Stage::Ended;
    }

    fn info(&self, trader: TraderId, now: u64) -> SessionInfo {
        let config = self.session.config();
        let account = self.session.account(trader).expect("seat has an account");
        let phase = match self.stage {
            Stage::Lobby => ServerPhase::Lobby,
            Stage::Questionnaire => ServerPhase::Questionnaire,
            Stage::Trading => ServerPhase::Trading,
            Stage::Between { .. } => ServerPhase::BetweenPeriods,
            Stage::Ended => ServerPhase::Ended,
        };
        let trading = self.session.phase() == SessionPhase::Trading;
        let (intrinsic_value, max_present_value) = period_values(&self.session);
        SessionInfo {
            session_id: config.session_id.clone(),
            trader_id: trader,
            phase,
            period: self.session.period(),
            n_periods: config.n_periods,
            n_traders: config.n_traders,
            period_seconds: config.period_seconds,
            server_time: now,
            deadline: trading.then(|| self.session.period_deadline()),
            dividend_value: config.dividend_value,
            dividend_prob: config.dividend_prob,
            showup_fee: config.showup_fee,
            intrinsic_value,
            max_present_value,
            cash: account.cash,
            shares: account.shares,
            own_orders: self.session.book().orders_of(trader),
            questionnaire_submitted: self.seat(trader).is_some_and(|s| s.submitted),
            seats_joined: self.seats.iter().filter(|s| s.conn.is_some()).count() as u32,
            seq: self.session.log().last_seq(),
        }
    }
}
