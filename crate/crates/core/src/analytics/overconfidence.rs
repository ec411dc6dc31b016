use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::sign_test_p_value;
use super::AnalyticsError;
use crate::exchange::TraderId;
use crate::session::{AssessmentResponse, ItemGroup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overconfidence {
    /// mean(self-precision ratings) − mean(others-precision ratings).
    pub per_trader: BTreeMap<TraderId, f64>,
    pub pooled: f64,
    pub positive: usize,
    pub negative: usize,
    pub ties: usize,
    /// Two-sided exact sign test of positive vs negative indices.
    pub sign_test_p: f64,
}

/// Zero means a trader rates their own precision exactly like others'.
pub fn overconfidence_index(
    responses: &[AssessmentResponse],
) -> Result<Overconfidence, AnalyticsError> {
    if responses.is_empty() {
        return Err(AnalyticsError::NoResponses);
    }
    let mut sums: BTreeMap<TraderId, [(f64, usize); 2]> = BTreeMap::new();
    for r in responses {
        let slot = match r.item_group {
            ItemGroup::SelfPrecision => 0,
            ItemGroup::OthersPrecision => 1,
        };
        let e = &mut sums.entry(r.trader_id).or_default()[slot];
        e.0 += f64::from(r.rating);
        e.1 += 1;
    }
    let mut per_trader = BTreeMap::new();
    for (id, [own, others]) in sums {
        if own.1 == 0 {
            return Err(AnalyticsError::MissingGroup(id, ItemGroup::SelfPrecision));
        }
        if others.1 == 0 {
            return Err(AnalyticsError::MissingGroup(id, ItemGroup::OthersPrecision));
        }
        per_trader.insert(id, own.0 / own.1 as f64 - others.0 / others.1 as f64);
    }
    let pooled = per_trader.values().sum::<f64>() / per_trader.len() as f64;
    let positive = per_trader.values().filter(|&&v| v > 0.0).count();
    let negative = per_trader.values().filter(|&&v| v < 0.0).count();
    Ok(Overconfidence {
        ties: per_trader.len() - positive - negative,
        sign_test_p: sign_test_p_value(positive, negative),
        per_trader,
        pooled,
        positive,
        negative,
    })
}
