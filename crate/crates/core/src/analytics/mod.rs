//! Bubble measures computed from a session's event log.

mod batch;
mod decompose;
mod figures;
mod measures;
mod overconfidence;
mod report;
pub mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use batch::{BatchSummary, SeedSummary};
pub use decompose::{
    components, decompose_period, trader_mean_prices, Components, DecompositionBasis,
    PeriodDecomposition,
};
pub use figures::{export_figure_data, figure1_csv, figure2_csv};
pub use measures::{amplitude, napd, period_series, PeriodRow, PeriodSeries};
pub use overconfidence::{overconfidence_index, Overconfidence};
pub use report::{build_report, compute_report, DecompositionRow, MetricsReport, SessionData};
pub use stats::{cronbach_alpha, haessel_r2, spearman};

use crate::exchange::TraderId;
use crate::session::{ItemGroup, ReplayError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {min} observations, got {len}")]
    TooShort { len: usize, min: usize },
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("total-score variance is zero")]
    DegenerateVariance,
    #[error("period {period}: {traders} trader(s) traded, need at least 2")]
    InsufficientTraders { period: u32, traders: usize },
    #[error("no trades")]
    NoTrades,
    #[error("only {periods} period(s) with trades, need at least 2")]
    InsufficientPeriods { periods: usize },
    #[error("trade in period {0} is outside the value schedule")]
    PeriodOutOfSchedule(u32),
    #[error("no assessment responses")]
    NoResponses,
    #[error("trader {0} has no {1:?} items")]
    MissingGroup(TraderId, ItemGroup),
    #[error("log failed replay validation: {0}")]
    CorruptLog(#[from] ReplayError),
}

/// A computed value, or an explicit marker saying why it does not exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Value(T),
    Undefined { undefined: String },
}

pub type Measure = Outcome<f64>;

impl<T> Outcome<T> {
    pub fn undefined(reason: impl Into<String>) -> Self {
        Outcome::Undefined {
            undefined: reason.into(),
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, Outcome::Value(_))
    }

    pub fn as_ref(&self) -> Option<&T> {
        match self {
            Outcome::Value(v) => Some(v),
            Outcome::Undefined { .. } => None,
        }
    }
}

impl<T: Copy> Outcome<T> {
    pub fn value(&self) -> Option<T> {
        self.as_ref().copied()
    }
}

impl<T> From<Result<T, AnalyticsError>> for Outcome<T> {
    fn from(r: Result<T, AnalyticsError>) -> Self {
        match r {
            Ok(v) => Outcome::Value(v),
            Err(e) => Outcome::undefined(e.to_string()),
        }
    }
}
