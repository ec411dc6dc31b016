//! Metric properties, written as plain checks so both proptest and the
//! acceptance report can drive them.

use bubblelab_core::analytics::{
    amplitude, components, cronbach_alpha, haessel_r2, napd, period_series,
};
use bubblelab_core::exchange::{OrderId, Trade, TradeId, TraderId};

/// msd = dispersion + common, relative to msd (absolute below 1e-12).
pub fn decomposition_identity(values: &[f64], weights: &[f64], f: f64) -> Result<(), String> {
    let c = components(values, weights, f);
    let gap = (c.msd - (c.dispersion + c.common)).abs();
    if gap <= 1e-9 * c.msd.abs() || gap <= 1e-12 {
        Ok(())
    } else {
        Err(format!("msd {} vs {} + {}", c.msd, c.dispersion, c.common))
    }
}

/// R² is unchanged when the observed series is replaced by a + b·x, b ≠ 0.
pub fn haessel_affine_invariant(observed: &[f64], reference: &[f64], a: f64, b: f64) -> Result<(), String> {
    let base = haessel_r2(observed, reference);
    let moved: Vec<f64> = observed.iter().map(|x| a + b * x).collect();
    let shifted = haessel_r2(&moved, reference);
    match (base, shifted) {
        (Ok(x), Ok(y)) if (x - y).abs() <= 1e-9 => Ok(()),
        (Err(_), Err(_)) => Ok(()),
        (x, y) => Err(format!("{x:?} vs {y:?} (a={a}, b={b})")),
    }
}

/// Duplicating one item k times gives α = 1 whenever the item varies.
pub fn cronbach_duplicated(item: &[f64], k: usize) -> Result<(), String> {
    let rows: Vec<Vec<f64>> = item.iter().map(|&x| vec![x; k]).collect();
    let varies = item.iter().any(|&x| x != item[0]);
    match cronbach_alpha(&rows) {
        Ok(a) if varies && (a - 1.0).abs() <= 1e-12 => Ok(()),
        Err(_) if !varies => Ok(()),
        other => Err(format!("{other:?} for {item:?}")),
    }
}

pub fn trade(period: u32, price: i64, quantity: u32) -> Trade {
    Trade {
        trade_id: TradeId(0),
        period,
        price,
        quantity,
        buyer_id: TraderId(1),
        seller_id: TraderId(2),
        resting_order_id: OrderId(1),
        aggressor_order_id: OrderId(2),
        timestamp: 0,
    }
}

/// `offsets[i]` = (period, price − f_period, quantity) for each trade.
/// napd is zero iff every trade sits on the fundamental. Amplitude is zero
/// when every period mean sits on it, and otherwise zero only when all
/// period means deviate by the same amount.
pub fn zero_iff_on_fundamental(intrinsic: &[i64], offsets: &[(u32, i64, u32)]) -> Result<(), String> {
    let trades: Vec<Trade> = offsets
        .iter()
        .map(|&(t, d, q)| trade(t, intrinsic[t as usize - 1] + d, q))
        .collect();
    let on_f = offsets.iter().all(|&(_, d, _)| d == 0);
    let n = napd(&trades, intrinsic).map_err(|e| e.to_string())?;
    if (n == 0.0) != on_f {
        return Err(format!("napd {n} with on-fundamental = {on_f}"));
    }
    let series = period_series(intrinsic, intrinsic, &trades, &[]);
    let devs: Vec<f64> = series.iter().filter_map(|r| r.deviation()).collect();
    if let Ok(a) = amplitude(&series) {
        let means_on_f = devs.iter().all(|d| d.abs() < 1e-9);
        let constant = devs.iter().all(|d| (d - devs[0]).abs() < 1e-9);
        if means_on_f && a.abs() > 1e-12 {
            return Err(format!("amplitude {a} with every mean on the fundamental"));
        }
        if (a.abs() <= 1e-12) != constant {
            return Err(format!("amplitude {a} with deviations {devs:?}"));
        }
    } else if devs.len() >= 2 {
        return Err("amplitude undefined with two traded periods".into());
    }
    Ok(())
}
