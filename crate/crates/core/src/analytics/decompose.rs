//! Splits the mean squared discrepancy between market prices and the
//! fundamental into a dispersion part (prices scattered around their own
//! mean) and a common part (the mean itself missing the fundamental).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Measure};
use crate::exchange::{Cents, Trade, TraderId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionBasis {
    /// One observation per trader: the volume-weighted mean price of all of
    /// that trader's trades in the period, buys and sells pooled.
    #[default]
    PerTrader,
    /// One observation per traded share.
    PerTrade,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub mean_price: f64,
    pub dispersion: f64,
    pub common: f64,
    pub msd: f64,
}

impl Components {
    /// common / msd, undefined when there is no discrepancy at all.
    pub fn common_share(&self) -> Measure {
        if self.msd > 0.0 {
            Measure::Value((self.common / self.msd).clamp(0.0, 1.0))
        } else {
            Measure::undefined("no discrepancy from the fundamental")
        }
    }
}

/// Weighted decomposition of `values` around the fundamental `f`.
/// The three terms are computed independently; they satisfy
/// msd = dispersion + common up to rounding.
pub fn components(values: &[f64], weights: &[f64], f: f64) -> Components {
    let total: f64 = weights.iter().sum();
    let mean_price = values.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / total;
    let dispersion = values
        .iter()
        .zip(weights)
        .map(|(x, w)| w * (x - mean_price).powi(2))
        .sum::<f64>()
        / total;
    let msd = values
        .iter()
        .zip(weights)
        .map(|(x, w)| w * (x - f).powi(2))
        .sum::<f64>()
        / total;
    Components {
        mean_price,
        dispersion,
        common: (mean_price - f).powi(2),
        msd,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodDecomposition {
    pub period: u32,
    pub intrinsic_value: Cents,
    /// Observations entering the decomposition (traders or shares).
    pub observations: usize,
    /// x_{i,t}: per-trader mean prices (empty for the per-trade basis).
    pub trader_prices: BTreeMap<TraderId, f64>,
    pub components: Components,
    pub common_share: Measure,
}

/// Volume-weighted mean price per trader over `trades`, pooling both sides.
pub fn trader_mean_prices(trades: &[Trade]) -> BTreeMap<TraderId, f64> {
    let mut acc: BTreeMap<TraderId, (f64, f64)> = BTreeMap::new();
    for t in trades {
        let q = f64::from(t.quantity);
        for id in [t.buyer_id, t.seller_id] {
            let e = acc.entry(id).or_default();
            e.0 += t.price as f64 * q;
            e.1 += q;
        }
    }
    acc.into_iter().map(|(id, (v, q))| (id, v / q)).collect()
}

/// Decomposes one period. Traders without trades are left out.
pub fn decompose_period(
    period: u32,
    trades: &[Trade],
    intrinsic_value: Cents,
    basis: DecompositionBasis,
) -> Result<PeriodDecomposition, AnalyticsError> {
    let f = intrinsic_value as f64;
    let (trader_prices, comps, n) = match basis {
        DecompositionBasis::PerTrader => {
            let prices = trader_mean_prices(trades);
            if prices.len() < 2 {
                return Err(AnalyticsError::InsufficientTraders {
                    period,
                    traders: prices.len(),
                });
            }
            let xs: Vec<f64> = prices.values().copied().collect();
            let ws = vec![1.0; xs.len()];
            let n = xs.len();
            (prices, components(&xs, &ws, f), n)
        }
        DecompositionBasis::PerTrade => {
            if trades.is_empty() {
                return Err(AnalyticsError::InsufficientTraders { period, traders: 0 });
            }
            let xs: Vec<f64> = trades.iter().map(|t| t.price as f64).collect();
            let ws: Vec<f64> = trades.iter().map(|t| f64::from(t.quantity)).collect();
            let n = trades.iter().map(|t| t.quantity as usize).sum();
            (BTreeMap::new(), components(&xs, &ws, f), n)
        }
    };
    Ok(PeriodDecomposition {
        period,
        intrinsic_value,
        observations: n,
        trader_prices,
        common_share: comps.common_share(),
        components: comps,
    })
}
