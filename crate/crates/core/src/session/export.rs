//! Trade export as CSV.

use std::io::Write;

use super::event::{EventKind, EventRecord};

pub const TRADE_CSV_HEADER: [&str; 8] = [
    "session_id",
    "period",
    "trade_seq",
    "price_cents",
    "quantity",
    "buyer_id",
    "seller_id",
    "seconds_into_period",
];

/// Writes one row per TRADE record. `trade_seq` is the event-log sequence
/// number of the trade.
pub fn write_trades_csv<W: Write>(records: &[EventRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRADE_CSV_HEADER)?;
    let mut period_start = 0;
    for rec in records {
        match &rec.kind {
            EventKind::PeriodStart { .. } => period_start = rec.wall_time,
            EventKind::Trade { trade } => {
                let secs = (trade.timestamp.saturating_sub(period_start)) as f64 / 1000.0;
                w.write_record([
                    rec.session_id.clone(),
                    trade.period.to_string(),
                    rec.seq.to_string(),
                    trade.price.to_string(),
                    trade.quantity.to_string(),
                    trade.buyer_id.to_string(),
                    trade.seller_id.to_string(),
                    format!("{secs:.3}"),
                ])?;
            }
            _ => {}
        }
    }
    w.flush()?;
    Ok(())
}
