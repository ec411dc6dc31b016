use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use bubblelab_core::analytics::BatchSummary;
use bubblelab_core::exchange::Side;
use bubblelab_server::{Client, ClientMessage, ServerMessage};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bubblelab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/golden")
        .join(format!("{name}.jsonl"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn replay_of_golden_logs_succeeds() {
    for name in ["all-fundamentalist", "scripted", "aborted"] {
        let o = run(&["replay", "--log", s(&golden(name))]);
        assert!(o.status.success(), "{name}: {o:?}");
        assert_eq!(stdout(&o).trim(), "replay OK");
    }
}

#[test]
fn tampered_log_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(golden("scripted")).unwrap();
    let tampered = text.replacen("\"price\":", "\"price\":1", 1);
    assert_ne!(text, tampered);
    let path = dir.path().join("bad.jsonl");
    std::fs::write(&path, tampered).unwrap();
    assert_eq!(run(&["replay", "--log", s(&path)]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "--log", s(&path)]).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["analyze", "--log", "missing.jsonl"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--roster", "all-zic", "--out", "x"]).status.code(), Some(1));
    assert_eq!(
        run(&["simulate", "--roster", "all-zic", "--seeds", "5..2", "--out", "x"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(
        run(&["simulate", "--roster", "nobody-home", "--seed", "1", "--out", s(&out)]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_then_analyze_fundamentalists() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate", "--config", "default", "--roster", "all-fundamentalist", "--seed", "7", "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{o:?}");
    let log = dir.path().join("seed-7.jsonl");
    let report_json = dir.path().join("report.json");
    let o = run(&["analyze", "--log", s(&log), "--out", s(&report_json)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("haessel_r2_trading"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report_json).unwrap()).unwrap();
    let r2 = report["haessel_r2_trading"].as_f64().unwrap();
    assert!(r2 >= 0.9, "r2 {r2}");
    // the per-seed report written by simulate is the same document
    assert_eq!(
        std::fs::read_to_string(dir.path().join("seed-7.report.json")).unwrap(),
        std::fs::read_to_string(dir.path().join("report.json")).unwrap()
    );
}

#[test]
fn seed_batches_write_one_report_per_seed_and_an_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate", "--roster", "speculator-majority", "--seeds", "3..6", "--out", s(dir.path()),
    ]);
    assert!(o.status.success(), "{o:?}");
    for seed in 3..=6 {
        assert!(dir.path().join(format!("seed-{seed}.jsonl")).exists());
        assert!(dir.path().join(format!("seed-{seed}.report.json")).exists());
    }
    let agg: BatchSummary =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("aggregate.json")).unwrap())
            .unwrap();
    let seeds: Vec<u64> = agg.seeds.iter().map(|s| s.seed).collect();
    assert_eq!(seeds, vec![3, 4, 5, 6]);

    // a batch is the same as its seeds run one at a time
    let single = tempfile::tempdir().unwrap();
    run(&["simulate", "--roster", "speculator-majority", "--seed", "5", "--out", s(single.path())]);
    assert_eq!(
        std::fs::read(dir.path().join("seed-5.jsonl")).unwrap(),
        std::fs::read(single.path().join("seed-5.jsonl")).unwrap()
    );
}

#[test]
fn export_figures_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["export-figures", "--log", s(&golden("all-zic")), "--out", s(dir.path())]);
    assert!(o.status.success(), "{o:?}");
    for f in ["figure1.csv", "figure2.csv", "trades.csv"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(text.lines().count() > 1, "{f} is empty");
    }
    let trades = std::fs::read_to_string(dir.path().join("trades.csv")).unwrap();
    assert!(trades.starts_with("session_id,period,trade_seq,price_cents"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn serve_runs_a_live_session_and_writes_a_replayable_log() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("session.toml");
    std::fs::write(
        &config,
        "session_id = \"cli-live\"\nn_traders = 2\nn_periods = 1\nperiod_seconds = 1\n",
    )
    .unwrap();
    let log = dir.path().join("live.jsonl");
    let mut child = bin()
        .args([
            "serve", "--config", s(&config), "--bind", "127.0.0.1:0", "--log", s(&log),
            "--summary-pause", "0", "--no-questionnaire",
        ])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let first = lines.next().unwrap().unwrap();
    let addr = first.strip_prefix("listening on ").expect("address line").to_string();
    let tokens: Vec<String> = (0..2)
        .map(|_| lines.next().unwrap().unwrap().rsplit(' ').next().unwrap().to_string())
        .collect();

    let (mut seller, _, t1) = Client::join(addr.as_str(), Some(tokens[0].clone())).await.unwrap();
    let (mut buyer, _, t2) = Client::join(addr.as_str(), Some(tokens[1].clone())).await.unwrap();
    assert_eq!([t1, t2], [tokens[0].clone(), tokens[1].clone()]);
    for c in [&mut seller, &mut buyer] {
        c.recv_until(|m| matches!(m, ServerMessage::PeriodStart { .. })).await.unwrap();
    }
    seller
        .send(&ClientMessage::PostOrder { side: Side::Ask, price_cents: 30, quantity: 1, client_ref: Some(1) })
        .await
        .unwrap();
    seller.recv_until(|m| matches!(m, ServerMessage::OrderAck { .. })).await.unwrap();
    buyer
        .send(&ClientMessage::PostOrder { side: Side::Bid, price_cents: 35, quantity: 1, client_ref: Some(2) })
        .await
        .unwrap();
    let (_, notice) = buyer
        .recv_until(|m| matches!(m, ServerMessage::TradeNotice { .. }))
        .await
        .unwrap();
    let ServerMessage::TradeNotice { price_cents, .. } = notice else { unreachable!() };
    assert_eq!(price_cents, 30);
    for c in [&mut seller, &mut buyer] {
        c.recv_until(|m| matches!(m, ServerMessage::FinalPayout { .. })).await.unwrap();
    }

    let status = tokio::task::spawn_blocking(move || child.wait()).await.unwrap().unwrap();
    assert!(status.success());
    let o = run(&["replay", "--log", s(&log)]);
    assert_eq!(stdout(&o).trim(), "replay OK");
}
