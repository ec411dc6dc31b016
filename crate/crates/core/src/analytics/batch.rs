use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::report::MetricsReport;
use super::Measure;

/// One line per seed of a simulation batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub haessel_r2_trading: Measure,
    pub mean_common_share: Measure,
    pub common_share_trend: Measure,
    pub napd: Measure,
    pub amplitude: Measure,
    pub periods_above_max_pv: Vec<u32>,
}

/// Cross-seed aggregates. Means and medians skip seeds where the measure
/// is undefined; `*_defined` counts the seeds that contributed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub seeds: Vec<SeedSummary>,
    pub mean_haessel_r2_trading: Measure,
    pub min_haessel_r2_trading: Measure,
    pub mean_common_share: Measure,
    pub common_share_defined: usize,
    pub median_common_share_trend: Measure,
    pub mean_napd: Measure,
    pub mean_amplitude: Measure,
    /// Fraction of seeds with at least one period priced above the
    /// maximum present value.
    pub share_of_seeds_above_max_pv: f64,
}

fn values(ms: impl Iterator<Item = Measure>) -> Vec<f64> {
    ms.filter_map(|m| m.value()).collect()
}

fn mean_of(xs: &[f64]) -> Measure {
    if xs.is_empty() {
        Measure::undefined("no seed defines this measure")
    } else {
        Measure::Value(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

fn median_of(xs: &[f64]) -> Measure {
    if xs.is_empty() {
        return Measure::undefined("no seed defines this measure");
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Measure::Value(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

impl BatchSummary {
    pub fn from_reports(reports: &[(u64, MetricsReport)]) -> BatchSummary {
        let seeds: Vec<SeedSummary> = reports
            .iter()
            .map(|(seed, r)| SeedSummary {
                seed: *seed,
                haessel_r2_trading: r.haessel_r2_trading.clone(),
                mean_common_share: r.mean_common_share.clone(),
                common_share_trend: r.common_share_trend.clone(),
                napd: r.napd.clone(),
                amplitude: r.amplitude.clone(),
                periods_above_max_pv: r.periods_above_max_pv(),
            })
            .collect();
        let r2 = values(seeds.iter().map(|s| s.haessel_r2_trading.clone()));
        let share = values(seeds.iter().map(|s| s.mean_common_share.clone()));
        let trend = values(seeds.iter().map(|s| s.common_share_trend.clone()));
        let above = seeds.iter().filter(|s| !s.periods_above_max_pv.is_empty()).count();
        BatchSummary {
            mean_haessel_r2_trading: mean_of(&r2),
            min_haessel_r2_trading: if r2.is_empty() {
                Measure::undefined("no seed defines this measure")
            } else {
                Measure::Value(r2.iter().copied().fold(f64::INFINITY, f64::min))
            },
            mean_common_share: mean_of(&share),
            common_share_defined: share.len(),
            median_common_share_trend: median_of(&trend),
            mean_napd: mean_of(&values(seeds.iter().map(|s| s.napd.clone()))),
            mean_amplitude: mean_of(&values(seeds.iter().map(|s| s.amplitude.clone()))),
            share_of_seeds_above_max_pv: if seeds.is_empty() {
                0.0
            } else {
                above as f64 / seeds.len() as f64
            },
            seeds,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn table(&self) -> String {
        let f = |m: &Measure| m.value().map_or("undefined".to_string(), |v| format!("{v:.4}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>6} {:>10} {:>12} {:>10} {:>8} {:>10} above_max_pv",
            "seed", "r2_trading", "common_share", "trend", "napd", "amplitude"
        );
        for s in &self.seeds {
            let _ = writeln!(
                out,
                "{:>6} {:>10} {:>12} {:>10} {:>8} {:>10} {:?}",
                s.seed,
                f(&s.haessel_r2_trading),
                f(&s.mean_common_share),
                f(&s.common_share_trend),
                f(&s.napd),
                f(&s.amplitude),
                s.periods_above_max_pv
            );
        }
        let _ = writeln!(out, "mean haessel_r2_trading    {}", f(&self.mean_haessel_r2_trading));
        let _ = writeln!(out, "min haessel_r2_trading     {}", f(&self.min_haessel_r2_trading));
        let _ = writeln!(
            out,
            "mean common_share          {} ({} seeds)",
            f(&self.mean_common_share),
            self.common_share_defined
        );
        let _ = writeln!(out, "median common_share_trend  {}", f(&self.median_common_share_trend));
        let _ = writeln!(out, "seeds above max PV         {:.2}", self.share_of_seeds_above_max_pv);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians_and_means() {
        assert_eq!(median_of(&[3.0, 1.0, 2.0]), Measure::Value(2.0));
        assert_eq!(median_of(&[4.0, 1.0, 2.0, 3.0]), Measure::Value(2.5));
        assert!(!median_of(&[]).is_defined());
        assert_eq!(mean_of(&[1.0, 2.0]), Measure::Value(1.5));
    }
}
