//! Append-only event log. One JSON object per line; this is the exchange
//! format between live sessions, simulations and analytics.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::SessionConfig;
use super::questionnaire::QuestionnaireRecord;
use crate::exchange::{Cents, Order, OrderId, Trade, TraderId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    /// Milliseconds on the session clock (wall clock live, virtual in
    /// simulation).
    pub wall_time: u64,
    pub session_id: String,
    /// Zero outside trading periods.
    pub period: u32,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    SessionStart {
        config: SessionConfig,
    },
    PeriodStart {
        intrinsic_value: Cents,
        max_present_value: Cents,
        period_seconds: u64,
    },
    OrderPosted {
        order: Order,
    },
    OrderCancelled {
        order_id: OrderId,
        trader_id: TraderId,
    },
    Trade {
        trade: Trade,
    },
    Dividend {
        per_share: Cents,
        credits: Vec<DividendCredit>,
    },
    PeriodEnd {
        summaries: Vec<TraderSummary>,
    },
    QuestionnaireResponse {
        response: QuestionnaireRecord,
    },
    Payout {
        trader_id: TraderId,
        cash: Cents,
        showup_fee: Cents,
        total: Cents,
    },
    SessionEnd {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        aborted: Option<String>,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SessionStart { .. } => "SESSION_START",
            EventKind::PeriodStart { .. } => "PERIOD_START",
            EventKind::OrderPosted { .. } => "ORDER_POSTED",
            EventKind::OrderCancelled { .. } => "ORDER_CANCELLED",
            EventKind::Trade { .. } => "TRADE",
            EventKind::Dividend { .. } => "DIVIDEND",
            EventKind::PeriodEnd { .. } => "PERIOD_END",
            EventKind::QuestionnaireResponse { .. } => "QUESTIONNAIRE_RESPONSE",
            EventKind::Payout { .. } => "PAYOUT",
            EventKind::SessionEnd { .. } => "SESSION_END",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DividendCredit {
    pub trader_id: TraderId,
    pub shares: i64,
    pub amount: Cents,
}

/// Per-trader content of the end-of-period summary screen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraderSummary {
    pub trader_id: TraderId,
    pub trades: u32,
    pub shares_bought: u32,
    pub shares_sold: u32,
    pub dividend_income: Cents,
    pub cash: Cents,
    pub shares: i64,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    records: Vec<EventRecord>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<EventRecord>) -> Self {
        Self { records }
    }

    pub fn append(&mut self, wall_time: u64, session_id: &str, period: u32, kind: EventKind) -> u64 {
        let seq = self.records.last().map_or(1, |r| r.seq + 1);
        self.records.push(EventRecord {
            seq,
            wall_time,
            session_id: session_id.to_string(),
            period,
            kind,
        });
        seq
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    /// Records with `seq > after`.
    pub fn since(&self, after: u64) -> &[EventRecord] {
        let start = self.records.partition_point(|r| r.seq <= after);
        &self.records[start..]
    }

    pub fn last_seq(&self) -> u64 {
        self.records.last().map_or(0, |r| r.seq)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Parses JSON lines, skipping blank lines.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, LogError> {
        let mut records = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(&line).map_err(|e| LogError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(record);
        }
        Ok(Self { records })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, LogError> {
        let file = std::fs::File::open(path)?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_jsonl(std::io::BufWriter::new(file))
    }
}
