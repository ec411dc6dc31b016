use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exchange::Cents;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid session config: {0}")]
    Invalid(String),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
}

/// Market parameters of one experimental session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub session_id: String,
    pub n_traders: u32,
    pub n_periods: u32,
    pub period_seconds: u64,
    /// Dividend per share in cents when it is paid.
    pub dividend_value: Cents,
    /// Probability that the dividend is paid at the end of a period.
    pub dividend_prob: f64,
    pub endowment_shares: i64,
    pub endowment_cash: Cents,
    pub showup_fee: Cents,
    pub rng_seed: u64,
    /// Whether the unfilled part of an aggressive order rests in the book.
    pub rest_partial_fills: bool,
    /// Whether every trader is told about every (anonymous) trade, or only
    /// the two parties.
    pub broadcast_trades: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            session_id: "session".to_string(),
            n_traders: 6,
            n_periods: 10,
            period_seconds: 120,
            dividend_value: 20,
            dividend_prob: 0.5,
            endowment_shares: 3,
            endowment_cash: 600,
            showup_fee: 500,
            rng_seed: 0,
            rest_partial_fills: true,
            broadcast_trades: true,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.n_traders < 2 {
            return fail("n_traders must be at least 2");
        }
        if self.n_periods < 1 {
            return fail("n_periods must be at least 1");
        }
        if self.period_seconds < 1 {
            return fail("period_seconds must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.dividend_prob) {
            return fail("dividend_prob must lie in [0, 1]");
        }
        if self.dividend_value < 0 {
            return fail("dividend_value must be non-negative");
        }
        if self.endowment_cash < 0 || self.endowment_shares < 0 || self.showup_fee < 0 {
            return fail("endowments and show-up fee must be non-negative");
        }
        Ok(())
    }

    pub fn period_millis(&self) -> u64 {
        self.period_seconds * 1000
    }

    /// Reads a TOML file, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: SessionConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn check_period(&self, t: u32) -> Result<u64, PeriodOutOfRange> {
        if t == 0 || t > self.n_periods {
            return Err(PeriodOutOfRange {
                period: t,
                n_periods: self.n_periods,
            });
        }
        Ok(u64::from(self.n_periods - t + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("period {period} outside 1..={n_periods}")]
pub struct PeriodOutOfRange {
    pub period: u32,
    pub n_periods: u32,
}

/// Expected value of the remaining dividend stream at the start of period
/// `t`: p·d·(T − t + 1), rounded half-up to whole cents.
pub fn intrinsic_value(config: &SessionConfig, t: u32) -> Result<Cents, PeriodOutOfRange> {
    let remaining = i128::from(config.check_period(t)?);
    let (num, den) = decimal_ratio(config.dividend_prob);
    let exact_num = num * i128::from(config.dividend_value) * remaining;
    // floor((2n + d) / 2d) rounds n/d half-up for non-negative n
    Ok(((2 * exact_num + den) / (2 * den)) as Cents)
}

/// Sum of the largest possible remaining dividends: d·(T − t + 1).
pub fn max_present_value(config: &SessionConfig, t: u32) -> Result<Cents, PeriodOutOfRange> {
    let remaining = config.check_period(t)? as Cents;
    Ok(config.dividend_value * remaining)
}

/// The full intrinsic-value schedule for periods 1..=T.
pub fn intrinsic_schedule(config: &SessionConfig) -> Vec<Cents> {
    (1..=config.n_periods)
        .map(|t| intrinsic_value(config, t).expect("t in range"))
        .collect()
}

/// One dividend draw: `d` with probability `p`, else zero. Always consumes
/// exactly one `u64` from the generator.
pub fn draw_dividend<R: Rng + ?Sized>(rng: &mut R, config: &SessionConfig) -> Cents {
    let u: f64 = rng.gen();
    if u < config.dividend_prob {
        config.dividend_value
    } else {
        0
    }
}

/// Exact rational value of the shortest decimal that round-trips to `p`.
fn decimal_ratio(p: f64) -> (i128, i128) {
    let text = format!("{p}");
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    let den = 10i128.pow(frac_part.len() as u32);
    let int: i128 = int_part.parse().expect("finite probability");
    let frac: i128 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().expect("decimal digits")
    };
    (int * den + frac, den)
}
