//! The golden session corpus: how each log is produced, and where its
//! frozen log, report and final accounts live.

use std::path::PathBuf;

use bubblelab_core::agents::{simulate, Roster, SimulationOptions};
use bubblelab_core::exchange::{Side, TraderId};
use bubblelab_core::session::{
    AssessmentResponse, DeclaredPrices, ItemGroup, QuestionnaireRecord, Session, SessionConfig,
};

pub const GOLDEN_SEED: u64 = 7;

pub struct Golden {
    pub name: &'static str,
    pub build: fn() -> Session,
}

pub const CORPUS: [Golden; 5] = [
    Golden { name: "all-fundamentalist", build: || simulated("all-fundamentalist") },
    Golden { name: "all-zic", build: || simulated("all-zic") },
    Golden { name: "speculator-majority", build: || simulated("speculator-majority") },
    Golden { name: "scripted", build: scripted },
    Golden { name: "aborted", build: aborted },
];

pub fn dir() -> PathBuf {
    // resolves the same from any crate of the workspace
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden")
}

impl Golden {
    pub fn log_path(&self) -> PathBuf {
        dir().join(format!("{}.jsonl", self.name))
    }
    pub fn report_path(&self) -> PathBuf {
        dir().join(format!("{}.report.json", self.name))
    }
    pub fn accounts_path(&self) -> PathBuf {
        dir().join(format!("{}.accounts.json", self.name))
    }
}

/// Final accounts as stored next to each golden log.
pub fn accounts_json(accounts: &bubblelab_core::exchange::Accounts) -> String {
    let mut s = serde_json::to_string_pretty(accounts).unwrap();
    s.push('\n');
    s
}

pub fn small_config(id: &str) -> SessionConfig {
    SessionConfig {
        session_id: id.to_string(),
        n_traders: 4,
        n_periods: 5,
        period_seconds: 60,
        ..SessionConfig::default()
    }
}

fn simulated(preset: &str) -> Session {
    let config = small_config(preset);
    let roster = Roster::preset(preset, config.n_traders).unwrap();
    let options = SimulationOptions {
        ticks_per_period: 10,
        questionnaires: true,
    };
    simulate(&config, &roster, GOLDEN_SEED, options).unwrap()
}

fn questionnaires(session: &mut Session, now: u64) {
    let schedule = [52, 41, 30, 20, 10];
    for t in 1..=3u32 {
        let declared = schedule.iter().map(|v| v + i64::from(t) * 5 - 10).collect();
        session
            .record_questionnaire(
                now,
                QuestionnaireRecord::DeclaredPrices(DeclaredPrices {
                    trader_id: TraderId(t),
                    declared_value_per_period: declared,
                }),
            )
            .unwrap();
        for (group, own, others) in [
            (ItemGroup::SelfPrecision, "s1", "s2"),
            (ItemGroup::OthersPrecision, "o1", "o2"),
        ] {
            let base = match group {
                ItemGroup::SelfPrecision => 3 + t as u8,
                ItemGroup::OthersPrecision => 2 + t as u8,
            };
            for (item, rating) in [(own, base), (others, base + (t as u8 % 2))] {
                session
                    .record_questionnaire(
                        now,
                        QuestionnaireRecord::Assessment(AssessmentResponse {
                            trader_id: TraderId(t),
                            item_id: item.to_string(),
                            item_group: group,
                            rating,
                        }),
                    )
                    .unwrap();
            }
        }
    }
}

/// A short hand-written session covering partial fills, cancels, rejected
/// orders (which leave no trace) and both dividend outcomes.
fn scripted() -> Session {
    let config = SessionConfig {
        dividend_prob: 0.5,
        dividend_value: 20,
        rng_seed: 3,
        ..small_config("scripted")
    };
    let ms = config.period_millis();
    let mut s = Session::new(config, 1_000).unwrap();
    questionnaires(&mut s, 1_500);
    for t in 0..5u64 {
        // rotate roles so no one runs out of shares
        let seat = |k: u64| TraderId(((k + t) % 4) as u32 + 1);
        let (a, b, c, d) = (seat(0), seat(1), seat(2), seat(3));
        let start = 2_000 + t * ms;
        s.start_period(start).unwrap();
        let p = 60 - 8 * t as i64;
        s.post_order(start + 100, a, Side::Ask, p + 4, 1).unwrap();
        s.post_order(start + 200, b, Side::Bid, p, 1).unwrap();
        s.post_order(start + 300, c, Side::Bid, p + 6, 3).unwrap();
        let _ = s.post_order(start + 350, c, Side::Ask, p - 1, 1); // self-cross
        s.post_order(start + 400, d, Side::Ask, p - 2, 1).unwrap();
        let _ = s.post_order(start + 450, d, Side::Ask, p, 99); // too many shares
        let resting = s.book().orders_of(b);
        if let Some(o) = resting.first() {
            s.cancel_order(start + 500, b, o.order_id).unwrap();
        }
        s.post_order(start + 600, b, Side::Bid, p + 1, 2).unwrap();
        s.end_period(start + ms).unwrap();
    }
    s.finish(2_000 + 5 * ms).unwrap();
    s
}

fn aborted() -> Session {
    let config = small_config("aborted");
    let mut s = Session::new(config, 0).unwrap();
    s.start_period(10).unwrap();
    s.post_order(20, TraderId(1), Side::Bid, 45, 1).unwrap();
    s.post_order(30, TraderId(2), Side::Ask, 45, 1).unwrap();
    s.post_order(40, TraderId(3), Side::Bid, 40, 2).unwrap();
    s.abort(50, "lost connection to trader 4");
    s
}
