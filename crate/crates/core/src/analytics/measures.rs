use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Measure};
use crate::exchange::{Cents, Trade};
use crate::session::DeclaredPrices;

/// Per-period price and value series (Figure-1 data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRow {
    pub period: u32,
    /// Volume-weighted mean trade price; undefined without trades.
    pub mean_price: Measure,
    pub trade_count: u32,
    pub volume: u32,
    pub intrinsic_value: Cents,
    pub max_present_value: Cents,
    /// Mean declared value across respondents of the price questionnaire.
    pub mean_declared: Measure,
}

impl PeriodRow {
    pub fn deviation(&self) -> Option<f64> {
        self.mean_price.value().map(|p| p - self.intrinsic_value as f64)
    }
}

pub type PeriodSeries = Vec<PeriodRow>;

pub fn period_series(
    intrinsic: &[Cents],
    max_pv: &[Cents],
    trades: &[Trade],
    declared: &[DeclaredPrices],
) -> PeriodSeries {
    (1..=intrinsic.len() as u32)
        .map(|t| {
            let idx = t as usize - 1;
            let (mut value, mut volume, mut count) = (0.0, 0u32, 0u32);
            for tr in trades.iter().filter(|tr| tr.period == t) {
                value += tr.price as f64 * f64::from(tr.quantity);
                volume += tr.quantity;
                count += 1;
            }
            let mean_price = if volume > 0 {
                Measure::Value(value / f64::from(volume))
            } else {
                Measure::undefined("no trades")
            };
            let decl: Vec<f64> = declared
                .iter()
                .filter_map(|d| d.declared_value_per_period.get(idx))
                .map(|&v| v as f64)
                .collect();
            let mean_declared = if decl.is_empty() {
                Measure::undefined("no declared values")
            } else {
                Measure::Value(decl.iter().sum::<f64>() / decl.len() as f64)
            };
            PeriodRow {
                period: t,
                mean_price,
                trade_count: count,
                volume,
                intrinsic_value: intrinsic[idx],
                max_present_value: max_pv[idx],
                mean_declared,
            }
        })
        .collect()
}

/// Normalized average price deviation: the volume-weighted mean absolute
/// gap between trade prices and their period's fundamental, divided by the
/// mean fundamental over all periods.
pub fn napd(trades: &[Trade], intrinsic: &[Cents]) -> Result<f64, AnalyticsError> {
    let volume: u64 = trades.iter().map(|t| u64::from(t.quantity)).sum();
    if volume == 0 {
        return Err(AnalyticsError::NoTrades);
    }
    let mut abs_dev: i64 = 0;
    for t in trades {
        let f = *intrinsic
            .get(t.period as usize - 1)
            .ok_or(AnalyticsError::PeriodOutOfSchedule(t.period))?;
        abs_dev += i64::from(t.quantity) * (t.price - f).abs();
    }
    let mean_f = intrinsic.iter().sum::<Cents>() as f64 / intrinsic.len() as f64;
    if mean_f <= 0.0 {
        return Err(AnalyticsError::DegenerateSeries);
    }
    Ok(abs_dev as f64 / (volume as f64 * mean_f))
}

/// Range of per-period mean deviations from the fundamental, relative to
/// the first period's fundamental.
pub fn amplitude(series: &[PeriodRow]) -> Result<f64, AnalyticsError> {
    let devs: Vec<f64> = series.iter().filter_map(PeriodRow::deviation).collect();
    if devs.len() < 2 {
        return Err(AnalyticsError::InsufficientPeriods {
            periods: devs.len(),
        });
    }
    let f1 = series.first().map_or(0, |r| r.intrinsic_value) as f64;
    if f1 <= 0.0 {
        return Err(AnalyticsError::DegenerateSeries);
    }
    let max = devs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = devs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((max - min) / f1)
}
