//! Money and share conservation over a finished session log.

use bubblelab_core::session::{EventKind, EventLog, SessionConfig};

/// Σ shares is constant and Σ payouts = Σ cash endowments + Σ dividends
/// paid + N × show-up fee, in exact integer arithmetic.
pub fn check_conservation(log: &EventLog, config: &SessionConfig) -> Result<(), String> {
    let n = i64::from(config.n_traders);
    let total_shares = n * config.endowment_shares;
    let mut dividends = 0;
    let mut payouts = 0;
    for rec in log.records() {
        match &rec.kind {
            EventKind::Dividend { credits, .. } => {
                let shares: i64 = credits.iter().map(|c| c.shares).sum();
                if shares != total_shares {
                    return Err(format!("seq {}: dividend on {shares} shares, expected {total_shares}", rec.seq));
                }
                dividends += credits.iter().map(|c| c.amount).sum::<i64>();
            }
            EventKind::PeriodEnd { summaries } => {
                let shares: i64 = summaries.iter().map(|s| s.shares).sum();
                if shares != total_shares {
                    return Err(format!("seq {}: {shares} shares held, expected {total_shares}", rec.seq));
                }
                if summaries.iter().any(|s| s.cash < 0 || s.shares < 0) {
                    return Err(format!("seq {}: negative holdings", rec.seq));
                }
            }
            EventKind::Payout { total, .. } => payouts += total,
            _ => {}
        }
    }
    let expected = n * config.endowment_cash + dividends + n * config.showup_fee;
    if payouts != expected {
        return Err(format!("payouts {payouts} != endowments + dividends + fees {expected}"));
    }
    Ok(())
}
