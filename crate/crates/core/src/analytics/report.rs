use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::decompose::{decompose_period, DecompositionBasis};
use super::measures::{amplitude, napd, period_series, PeriodSeries};
use super::overconfidence::{overconfidence_index, Overconfidence};
use super::stats::{cronbach_alpha, haessel_r2, spearman};
use super::{AnalyticsError, Measure, Outcome};
use crate::exchange::{Cents, Trade, TraderId};
use crate::session::{
    intrinsic_schedule, max_present_value, replay, AssessmentResponse, DeclaredPrices, EventKind,
    EventRecord, ItemGroup, QuestionnaireRecord, SessionConfig,
};

/// The inputs every measure is computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionData {
    pub config: SessionConfig,
    pub trades: Vec<Trade>,
    pub questionnaires: Vec<QuestionnaireRecord>,
}

impl SessionData {
    pub fn from_log(records: &[EventRecord]) -> Option<SessionData> {
        let config = records.iter().find_map(|r| match &r.kind {
            EventKind::SessionStart { config } => Some(config.clone()),
            _ => None,
        })?;
        let mut trades = Vec::new();
        let mut questionnaires = Vec::new();
        for r in records {
            match &r.kind {
                EventKind::Trade { trade } => trades.push(trade.clone()),
                EventKind::QuestionnaireResponse { response } => {
                    questionnaires.push(response.clone())
                }
                _ => {}
            }
        }
        Some(SessionData {
            config,
            trades,
            questionnaires,
        })
    }

    /// Latest price questionnaire per trader.
    pub fn declared(&self) -> Vec<DeclaredPrices> {
        let mut latest: BTreeMap<TraderId, DeclaredPrices> = BTreeMap::new();
        for q in &self.questionnaires {
            if let QuestionnaireRecord::DeclaredPrices(d) = q {
                latest.insert(d.trader_id, d.clone());
            }
        }
        latest.into_values().collect()
    }

    /// Latest rating per (trader, item).
    pub fn assessments(&self) -> Vec<AssessmentResponse> {
        let mut latest: BTreeMap<(TraderId, String), AssessmentResponse> = BTreeMap::new();
        for q in &self.questionnaires {
            if let QuestionnaireRecord::Assessment(a) = q {
                latest.insert((a.trader_id, a.item_id.clone()), a.clone());
            }
        }
        latest.into_values().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub period: u32,
    pub intrinsic_value: Cents,
    pub observations: usize,
    pub trader_prices: BTreeMap<TraderId, f64>,
    pub mean_price: Measure,
    pub dispersion: Measure,
    pub common: Measure,
    pub msd: Measure,
    pub common_share: Measure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub session_id: String,
    pub basis: DecompositionBasis,
    pub series: PeriodSeries,
    pub haessel_r2_trading: Measure,
    pub haessel_r2_declared: Measure,
    /// Whether declared values fit the fundamentals better than trade prices.
    pub declared_fits_better: Outcome<bool>,
    pub napd: Measure,
    pub amplitude: Measure,
    pub decomposition: Vec<DecompositionRow>,
    pub mean_common_share: Measure,
    /// Spearman correlation of the common share with the period index.
    pub common_share_trend: Measure,
    pub grand_mean_declared: Measure,
    pub cronbach_alpha: BTreeMap<ItemGroup, Measure>,
    pub overconfidence: Outcome<Overconfidence>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn periods_above_max_pv(&self) -> Vec<u32> {
        self.series
            .iter()
            .filter(|r| r.mean_price.value().is_some_and(|p| p > r.max_present_value as f64))
            .map(|r| r.period)
            .collect()
    }

    pub fn summary_table(&self) -> String {
        fn fmt(m: &Measure) -> String {
            match m {
                Outcome::Value(v) => format!("{v:.4}"),
                Outcome::Undefined { .. } => "undefined".to_string(),
            }
        }
        let mut out = String::new();
        let _ = writeln!(out, "session {}", self.session_id);
        let _ = writeln!(
            out,
            "{:>6} {:>10} {:>7} {:>9} {:>7} {:>10} {:>10} {:>12}",
            "period", "mean_price", "trades", "intrinsic", "max_pv", "declared", "common", "common_share"
        );
        for (row, dec) in self.series.iter().zip(&self.decomposition) {
            let _ = writeln!(
                out,
                "{:>6} {:>10} {:>7} {:>9} {:>7} {:>10} {:>10} {:>12}",
                row.period,
                fmt(&row.mean_price),
                row.trade_count,
                row.intrinsic_value,
                row.max_present_value,
                fmt(&row.mean_declared),
                fmt(&dec.common),
                fmt(&dec.common_share),
            );
        }
        let lines = [
            ("haessel_r2_trading", fmt(&self.haessel_r2_trading)),
            ("haessel_r2_declared", fmt(&self.haessel_r2_declared)),
            (
                "declared_fits_better",
                self.declared_fits_better
                    .value()
                    .map_or("undefined".to_string(), |b| b.to_string()),
            ),
            ("napd", fmt(&self.napd)),
            ("amplitude", fmt(&self.amplitude)),
            ("mean_common_share", fmt(&self.mean_common_share)),
            ("common_share_trend", fmt(&self.common_share_trend)),
            ("grand_mean_declared", fmt(&self.grand_mean_declared)),
        ];
        for (k, v) in lines {
            let _ = writeln!(out, "{k:<22} {v}");
        }
        for (g, a) in &self.cronbach_alpha {
            let _ = writeln!(out, "{:<22} {}", format!("cronbach_alpha[{g:?}]"), fmt(a));
        }
        let oc = self
            .overconfidence
            .as_ref()
            .map_or("undefined".to_string(), |o| format!("{:.4} (sign test p={:.4})", o.pooled, o.sign_test_p));
        let _ = writeln!(out, "{:<22} {}", "overconfidence", oc);
        out
    }
}

/// Validates the log by replay, then computes every measure.
pub fn build_report(
    records: &[EventRecord],
    basis: DecompositionBasis,
) -> Result<MetricsReport, AnalyticsError> {
    replay(records)?;
    let data = SessionData::from_log(records).expect("replayed log starts with SESSION_START");
    Ok(compute_report(&data, basis))
}

fn cronbach_for(group: ItemGroup, responses: &[AssessmentResponse]) -> Measure {
    let items: BTreeSet<&str> = responses
        .iter()
        .filter(|r| r.item_group == group)
        .map(|r| r.item_id.as_str())
        .collect();
    let mut by_trader: BTreeMap<TraderId, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in responses.iter().filter(|r| r.item_group == group) {
        by_trader
            .entry(r.trader_id)
            .or_default()
            .insert(r.item_id.as_str(), f64::from(r.rating));
    }
    // only respondents who answered every item of the group
    let matrix: Vec<Vec<f64>> = by_trader
        .values()
        .filter(|m| m.len() == items.len())
        .map(|m| items.iter().map(|i| m[i]).collect())
        .collect();
    cronbach_alpha(&matrix).into()
}

/// Pure computation of every measure from already-validated inputs.
pub fn compute_report(data: &SessionData, basis: DecompositionBasis) -> MetricsReport {
    let config = &data.config;
    let intrinsic = intrinsic_schedule(config);
    let max_pv: Vec<Cents> = (1..=config.n_periods)
        .map(|t| max_present_value(config, t).expect("t in range"))
        .collect();
    let declared = data.declared();
    let series = period_series(&intrinsic, &max_pv, &data.trades, &declared);

    let traded: Vec<(f64, f64)> = series
        .iter()
        .filter_map(|r| r.mean_price.value().map(|p| (p, r.intrinsic_value as f64)))
        .collect();
    let haessel_r2_trading: Measure = if traded.is_empty() {
        Measure::undefined("no trades")
    } else {
        let (p, f): (Vec<f64>, Vec<f64>) = traded.into_iter().unzip();
        haessel_r2(&p, &f).into()
    };

    let haessel_r2_declared: Measure = if declared.is_empty() {
        Measure::undefined("no price questionnaire responses")
    } else {
        let d: Vec<f64> = series.iter().filter_map(|r| r.mean_declared.value()).collect();
        let f: Vec<f64> = intrinsic.iter().map(|&v| v as f64).collect();
        haessel_r2(&d, &f).into()
    };
    let declared_fits_better = match (haessel_r2_declared.value(), haessel_r2_trading.value()) {
        (Some(d), Some(t)) => Outcome::Value(d > t),
        _ => Outcome::undefined("needs both fits"),
    };
    let grand_mean_declared = {
        let all: Vec<f64> = declared
            .iter()
            .flat_map(|d| d.declared_value_per_period.iter().map(|&v| v as f64))
            .collect();
        if all.is_empty() {
            Measure::undefined("no price questionnaire responses")
        } else {
            Measure::Value(all.iter().sum::<f64>() / all.len() as f64)
        }
    };

    let decomposition: Vec<DecompositionRow> = (1..=config.n_periods)
        .map(|t| {
            let period_trades: Vec<Trade> = data
                .trades
                .iter()
                .filter(|tr| tr.period == t)
                .cloned()
                .collect();
            let f = intrinsic[t as usize - 1];
            match decompose_period(t, &period_trades, f, basis) {
                Ok(d) => DecompositionRow {
                    period: t,
                    intrinsic_value: f,
                    observations: d.observations,
                    trader_prices: d.trader_prices,
                    mean_price: Measure::Value(d.components.mean_price),
                    dispersion: Measure::Value(d.components.dispersion),
                    common: Measure::Value(d.components.common),
                    msd: Measure::Value(d.components.msd),
                    common_share: d.common_share,
                },
                Err(e) => {
                    let why = e.to_string();
                    DecompositionRow {
                        period: t,
                        intrinsic_value: f,
                        observations: 0,
                        trader_prices: BTreeMap::new(),
                        mean_price: Measure::undefined(why.clone()),
                        dispersion: Measure::undefined(why.clone()),
                        common: Measure::undefined(why.clone()),
                        msd: Measure::undefined(why.clone()),
                        common_share: Measure::undefined(why),
                    }
                }
            }
        })
        .collect();

    let shares: Vec<(f64, f64)> = decomposition
        .iter()
        .filter_map(|d| d.common_share.value().map(|s| (f64::from(d.period), s)))
        .collect();
    let mean_common_share = if shares.is_empty() {
        Measure::undefined("no period with a defined common share")
    } else {
        Measure::Value(shares.iter().map(|s| s.1).sum::<f64>() / shares.len() as f64)
    };
    let common_share_trend: Measure = {
        let (t, s): (Vec<f64>, Vec<f64>) = shares.into_iter().unzip();
        spearman(&t, &s).into()
    };

    let assessments = data.assessments();
    let cronbach = [ItemGroup::SelfPrecision, ItemGroup::OthersPrecision]
        .into_iter()
        .map(|g| (g, cronbach_for(g, &assessments)))
        .collect();

    MetricsReport {
        session_id: config.session_id.clone(),
        basis,
        haessel_r2_trading,
        haessel_r2_declared,
        declared_fits_better,
        napd: napd(&data.trades, &intrinsic).into(),
        amplitude: amplitude(&series).into(),
        series,
        decomposition,
        mean_common_share,
        common_share_trend,
        grand_mean_declared,
        cronbach_alpha: cronbach,
        overconfidence: overconfidence_index(&assessments).into(),
    }
}
