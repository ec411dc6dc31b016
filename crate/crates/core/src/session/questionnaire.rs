use serde::{Deserialize, Serialize};

use crate::exchange::{Cents, TraderId};

/// Inclusive bounds of the assessment rating scale.
pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 7;

/// Pre-trade price questionnaire: one declared asset value per period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredPrices {
    pub trader_id: TraderId,
    pub declared_value_per_period: Vec<Cents>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ItemGroup {
    SelfPrecision,
    OthersPrecision,
}

/// One Likert item from the assessment questionnaire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentResponse {
    pub trader_id: TraderId,
    pub item_id: String,
    pub item_group: ItemGroup,
    pub rating: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QuestionnaireRecord {
    DeclaredPrices(DeclaredPrices),
    Assessment(AssessmentResponse),
}

impl QuestionnaireRecord {
    pub fn trader_id(&self) -> TraderId {
        match self {
            QuestionnaireRecord::DeclaredPrices(d) => d.trader_id,
            QuestionnaireRecord::Assessment(a) => a.trader_id,
        }
    }

    /// Checks the record against a session of `n_periods` periods.
    pub fn check(&self, n_periods: u32) -> Result<(), String> {
        match self {
            QuestionnaireRecord::DeclaredPrices(d) => {
                if d.declared_value_per_period.len() != n_periods as usize {
                    return Err(format!(
                        "expected {} declared values, got {}",
                        n_periods,
                        d.declared_value_per_period.len()
                    ));
                }
                if d.declared_value_per_period.iter().any(|&v| v < 0) {
                    return Err("declared values must be non-negative".into());
                }
            }
            QuestionnaireRecord::Assessment(a) => {
                if !(LIKERT_MIN..=LIKERT_MAX).contains(&a.rating) {
                    return Err(format!(
                        "rating {} outside {}..={}",
                        a.rating, LIKERT_MIN, LIKERT_MAX
                    ));
                }
            }
        }
        Ok(())
    }
}
