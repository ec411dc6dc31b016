//! Session lifecycle: periods, dividends, questionnaires, payouts and the
//! event log that records all of it.

mod config;
mod engine;
mod event;
pub mod export;
mod questionnaire;
mod replay;
mod schedule;

use thiserror::Error;

pub use config::{
    draw_dividend, intrinsic_schedule, intrinsic_value, max_present_value, ConfigError,
    PeriodOutOfRange, SessionConfig,
};
pub use engine::{
    payout_for, Command, PeriodPhase, PeriodResult, PeriodState, Payout, Session, SessionPhase,
    TimedCommand,
};
pub use event::{DividendCredit, EventKind, EventLog, EventRecord, LogError, TraderSummary};
pub use questionnaire::{
    AssessmentResponse, DeclaredPrices, ItemGroup, QuestionnaireRecord, LIKERT_MAX, LIKERT_MIN,
};
pub use replay::{replay, ReplayError, ReplayOutcome};
pub use schedule::{run_schedule, Schedule};

use crate::exchange::{OrderError, TraderId};

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("operation requires phase {expected}, session is {actual:?}")]
    WrongPhase {
        expected: &'static str,
        actual: SessionPhase,
    },
    #[error("the trading period has expired")]
    PeriodExpired,
    #[error(transparent)]
    PeriodOutOfRange(#[from] PeriodOutOfRange),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("invalid questionnaire: {0}")]
    InvalidQuestionnaire(String),
    #[error("unknown trader {0}")]
    UnknownTrader(TraderId),
    #[error("session has not ended")]
    SessionNotEnded,
    #[error("{0}")]
    Config(String),
}

impl From<ConfigError> for SessionError {
    fn from(e: ConfigError) -> Self {
        SessionError::Config(e.to_string())
    }
}

impl SessionError {
    /// Short reason code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::WrongPhase { .. } | SessionError::PeriodExpired => "wrong_phase",
            SessionError::PeriodOutOfRange(_) => "period_out_of_range",
            SessionError::Order(e) => e.code(),
            SessionError::InvalidQuestionnaire(_) => "invalid_questionnaire",
            SessionError::UnknownTrader(_) => "unknown_trader",
            SessionError::SessionNotEnded => "session_not_ended",
            SessionError::Config(_) => "invalid_config",
        }
    }
}
