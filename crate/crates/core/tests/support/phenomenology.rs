//! Batch statistics over seeded simulated sessions.

use bubblelab_core::agents::{run_simulation, Roster};
use bubblelab_core::analytics::{build_report, DecompositionBasis, MetricsReport};
use bubblelab_core::session::SessionConfig;

pub struct Batch {
    pub reports: Vec<MetricsReport>,
}

pub fn run_batch(preset: &str, seeds: std::ops::Range<u64>) -> Batch {
    let config = SessionConfig::default();
    let roster = Roster::preset(preset, config.n_traders).unwrap();
    let reports = seeds
        .map(|seed| {
            let log = run_simulation(&config, &roster, seed).unwrap();
            build_report(log.records(), DecompositionBasis::PerTrader).unwrap()
        })
        .collect();
    Batch { reports }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

impl Batch {
    /// Mean of the per-session mean common shares (sessions where defined).
    pub fn mean_common_share(&self) -> f64 {
        let v: Vec<f64> = self.reports.iter().filter_map(|r| r.mean_common_share.value()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    pub fn min_r2(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.haessel_r2_trading.value().unwrap_or(f64::NEG_INFINITY))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn fraction_above_max_pv(&self) -> f64 {
        let n = self.reports.iter().filter(|r| !r.periods_above_max_pv().is_empty()).count();
        n as f64 / self.reports.len() as f64
    }

    pub fn median_trend(&self) -> f64 {
        median(self.reports.iter().filter_map(|r| r.common_share_trend.value()).collect())
    }
}
