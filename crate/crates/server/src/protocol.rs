//! Message types carried over the wire. Every frame is one JSON object
//! whose `type` field names the message.

use bubblelab_core::exchange::{BookSnapshot, Cents, Order, OrderId, Side, TradeId, TraderId};
use bubblelab_core::session::{
    AssessmentResponse, DeclaredPrices, ItemGroup, QuestionnaireRecord,
};
use serde::{Deserialize, Serialize};

/// Client → server. There is deliberately no free-text message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClientMessage {
    /// Claims a seat. Without a token the next free seat is assigned; with
    /// one, the client (re)joins the seat that token belongs to.
    Hello {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        token: Option<String>,
    },
    SubmitQuestionnaire {
        responses: Vec<QuestionnaireAnswer>,
    },
    PostOrder {
        side: Side,
        price_cents: Cents,
        quantity: u32,
        /// Echoed back on the matching ORDER_ACK / ORDER_REJECT.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_ref: Option<u64>,
    },
    CancelOrder {
        order_id: OrderId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_ref: Option<u64>,
    },
    /// Asks for a fresh SESSION_INFO.
    Ping,
}

pub const CLIENT_MESSAGE_TYPES: [&str; 5] = [
    "HELLO",
    "SUBMIT_QUESTIONNAIRE",
    "POST_ORDER",
    "CANCEL_ORDER",
    "PING",
];

/// One questionnaire form as submitted by a client. The seat is implied by
/// the connection, so forms carry no trader id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QuestionnaireAnswer {
    DeclaredPrices {
        declared_value_per_period: Vec<Cents>,
    },
    Assessment {
        item_id: String,
        item_group: ItemGroup,
        rating: u8,
    },
}

impl QuestionnaireAnswer {
    pub fn into_record(self, trader_id: TraderId) -> QuestionnaireRecord {
        match self {
            QuestionnaireAnswer::DeclaredPrices {
                declared_value_per_period,
            } => QuestionnaireRecord::DeclaredPrices(DeclaredPrices {
                trader_id,
                declared_value_per_period,
            }),
            QuestionnaireAnswer::Assessment {
                item_id,
                item_group,
                rating,
            } => QuestionnaireRecord::Assessment(AssessmentResponse {
                trader_id,
                item_id,
                item_group,
                rating,
            }),
        }
    }

    pub fn from_record(record: &QuestionnaireRecord) -> Self {
        match record {
            QuestionnaireRecord::DeclaredPrices(d) => QuestionnaireAnswer::DeclaredPrices {
                declared_value_per_period: d.declared_value_per_period.clone(),
            },
            QuestionnaireRecord::Assessment(a) => QuestionnaireAnswer::Assessment {
                item_id: a.item_id.clone(),
                item_group: a.item_group,
                rating: a.rating,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ServerPhase {
    /// Waiting for every seat to be claimed.
    Lobby,
    Questionnaire,
    Trading,
    BetweenPeriods,
    Ended,
}

/// Full state snapshot for one seat; enough to rebuild a client after a
/// reconnect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub trader_id: TraderId,
    pub phase: ServerPhase,
    /// Current (or last finished) period; 0 before trading.
    pub period: u32,
    pub n_periods: u32,
    pub n_traders: u32,
    pub period_seconds: u64,
    pub server_time: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<u64>,
    pub dividend_value: Cents,
    pub dividend_prob: f64,
    pub showup_fee: Cents,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsic_value: Option<Cents>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_present_value: Option<Cents>,
    pub cash: Cents,
    pub shares: i64,
    pub own_orders: Vec<Order>,
    pub questionnaire_submitted: bool,
    pub seats_joined: u32,
    /// Seq of the last log record reflected in this snapshot.
    pub seq: u64,
}

/// The recipient's side of an execution: what changed in their account.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnFill {
    pub side: Side,
    pub cash_delta: Cents,
    pub shares_delta: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AckStatus {
    /// Nothing executed; the whole order rests.
    Resting,
    /// Part executed and the remainder rests.
    Partial,
    /// Executed in full, or executed in part with the remainder dropped.
    Filled,
    Cancelled,
}

/// Server → client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ServerMessage {
    Welcome {
        trader_id: TraderId,
        /// Present this on a later HELLO to reclaim the seat.
        token: String,
        session_id: String,
    },
    SessionInfo(SessionInfo),
    PeriodStart {
        seq: u64,
        period: u32,
        n_periods: u32,
        period_seconds: u64,
        server_time: u64,
        deadline: u64,
        intrinsic_value: Cents,
        max_present_value: Cents,
    },
    /// Book as seen by the recipient: other traders' orders are shown by
    /// price and quantity only.
    BookUpdate {
        seq: u64,
        period: u32,
        book: BookSnapshot,
    },
    /// An execution. Neither party is named; `fill` is present only in the
    /// copies sent to the buyer and the seller.
    TradeNotice {
        seq: u64,
        period: u32,
        trade_id: TradeId,
        price_cents: Cents,
        quantity: u32,
        server_time: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fill: Option<OwnFill>,
    },
    OrderAck {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_ref: Option<u64>,
        seq: u64,
        order_id: OrderId,
        status: AckStatus,
        filled_quantity: u32,
        resting_quantity: u32,
    },
    OrderReject {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_ref: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order_id: Option<OrderId>,
        reason: String,
        message: String,
    },
    PeriodSummary {
        seq: u64,
        period: u32,
        dividend_per_share: Cents,
        trades: u32,
        shares_bought: u32,
        shares_sold: u32,
        dividend_income: Cents,
        cash: Cents,
        shares: i64,
        /// The last period's summary has none.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        next_period: Option<u32>,
    },
    FinalPayout {
        seq: u64,
        cash: Cents,
        showup_fee: Cents,
        total: Cents,
    },
    Error {
        code: String,
        message: String,
        /// Byte offset into the offending frame, for decode errors.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<usize>,
    },
}

impl ServerMessage {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        ServerMessage::Error {
            code: code.to_string(),
            message: message.into(),
            offset: None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            ServerMessage::Welcome { .. } => "WELCOME",
            ServerMessage::SessionInfo(_) => "SESSION_INFO",
            ServerMessage::PeriodStart { .. } => "PERIOD_START",
            ServerMessage::BookUpdate { .. } => "BOOK_UPDATE",
            ServerMessage::TradeNotice { .. } => "TRADE_NOTICE",
            ServerMessage::OrderAck { .. } => "ORDER_ACK",
            ServerMessage::OrderReject { .. } => "ORDER_REJECT",
            ServerMessage::PeriodSummary { .. } => "PERIOD_SUMMARY",
            ServerMessage::FinalPayout { .. } => "FINAL_PAYOUT",
            ServerMessage::Error { .. } => "ERROR",
        }
    }
}

/// Error codes sent in ERROR frames.
pub mod codes {
    pub const MALFORMED: &str = "malformed";
    pub const PROTOCOL_VIOLATION: &str = "protocol_violation";
    pub const FRAME_TOO_LONG: &str = "frame_too_long";
    pub const SEAT_EXHAUSTED: &str = "seat_exhausted";
    pub const SEAT_IN_USE: &str = "seat_in_use";
    pub const INVALID_TOKEN: &str = "invalid_token";
    pub const NOT_JOINED: &str = "not_joined";
    pub const ALREADY_JOINED: &str = "already_joined";
    pub const WRONG_PHASE: &str = "wrong_phase";
    pub const INVALID_QUESTIONNAIRE: &str = "invalid_questionnaire";
    pub const SESSION_ABORTED: &str = "session_aborted";
    pub const INVALID_PRICE: &str = "invalid_price";
}
