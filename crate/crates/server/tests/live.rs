use std::net::SocketAddr;
use std::time::Duration;

use bubblelab_core::exchange::{OrderId, Side, TraderId};
use bubblelab_core::session::{replay, SessionConfig};
use bubblelab_server::protocol::{AckStatus, QuestionnaireAnswer, ServerPhase};
use bubblelab_server::{
    Client, ClientError, ClientMessage, ServeOutcome, Server, ServerMessage, ServerOptions,
    VirtualClock,
};
use tokio::task::JoinHandle;

struct Harness {
    addr: SocketAddr,
    clock: VirtualClock,
    tokens: Vec<String>,
    server: JoinHandle<ServeOutcome>,
}

async fn start(n_traders: u32, tweak: impl FnOnce(&mut ServerOptions)) -> Harness {
    let clock = VirtualClock::new(0);
    let config = SessionConfig {
        session_id: "live".into(),
        n_traders,
        n_periods: 2,
        ..SessionConfig::default()
    };
    let mut options = ServerOptions {
        clock: clock.clock(),
        require_questionnaires: false,
        summary_pause_ms: 0,
        ..ServerOptions::default()
    };
    tweak(&mut options);
    let server = Server::bind(config, "127.0.0.1:0", options).await.unwrap();
    let addr = server.local_addr().unwrap();
    let tokens = server.seat_tokens().to_vec();
    Harness {
        addr,
        clock,
        tokens,
        server: tokio::spawn(server.run()),
    }
}

async fn join_all(h: &Harness, n: u32) -> Vec<Client> {
    let mut clients = Vec::new();
    for i in 1..=n {
        let (c, t, token) = Client::join(h.addr, None).await.unwrap();
        assert_eq!(t, TraderId(i));
        assert_eq!(token, h.tokens[i as usize - 1]);
        clients.push(c);
    }
    clients
}

async fn expect(
    c: &mut Client,
    pred: impl FnMut(&ServerMessage) -> bool,
) -> ServerMessage {
    tokio::time::timeout(Duration::from_secs(5), c.recv_until(pred))
        .await
        .expect("message within 5 s")
        .unwrap()
        .1
}

fn is_period_start(m: &ServerMessage) -> bool {
    matches!(m, ServerMessage::PeriodStart { .. })
}

fn post(side: Side, price: i64, quantity: u32, r: u64) -> ClientMessage {
    ClientMessage::PostOrder {
        side,
        price_cents: price,
        quantity,
        client_ref: Some(r),
    }
}

#[tokio::test]
async fn seventh_client_is_refused() {
    let h = start(6, |_| {}).await;
    let _clients = join_all(&h, 6).await;
    match Client::join(h.addr, None).await {
        Err(ClientError::Refused { code, .. }) => assert_eq!(code, "seat_exhausted"),
        other => panic!("expected refusal, got {:?}", other.map(|r| r.1)),
    }
    h.server.abort();
}

#[tokio::test]
async fn orders_before_the_period_are_rejected() {
    let h = start(2, |o| o.require_questionnaires = true).await;
    let mut clients = join_all(&h, 2).await;
    clients[0].send(&post(Side::Bid, 95, 1, 1)).await.unwrap();
    let m = expect(&mut clients[0], |m| matches!(m, ServerMessage::OrderReject { .. })).await;
    let ServerMessage::OrderReject { reason, client_ref, .. } = m else { unreachable!() };
    assert_eq!((reason.as_str(), client_ref), ("wrong_phase", Some(1)));

    // nine declared values for ten... here two periods, so one is too few
    let short = ClientMessage::SubmitQuestionnaire {
        responses: vec![QuestionnaireAnswer::DeclaredPrices {
            declared_value_per_period: vec![20],
        }],
    };
    clients[0].send(&short).await.unwrap();
    let m = expect(&mut clients[0], |m| matches!(m, ServerMessage::Error { .. })).await;
    assert!(matches!(m, ServerMessage::Error { ref code, .. } if code == "invalid_questionnaire"));

    // both seats submit; trading opens
    for c in clients.iter_mut() {
        c.send(&ClientMessage::SubmitQuestionnaire {
            responses: vec![QuestionnaireAnswer::DeclaredPrices {
                declared_value_per_period: vec![20, 10],
            }],
        })
        .await
        .unwrap();
    }
    for c in clients.iter_mut() {
        expect(c, is_period_start).await;
    }
    clients[1]
        .send(&ClientMessage::SubmitQuestionnaire { responses: vec![] })
        .await
        .unwrap();
    let m = expect(&mut clients[1], |m| matches!(m, ServerMessage::Error { .. })).await;
    assert!(matches!(m, ServerMessage::Error { ref code, .. } if code == "wrong_phase"));
    h.server.abort();
}

#[tokio::test]
async fn orders_trades_and_cancels() {
    let h = start(3, |_| {}).await;
    let mut c = join_all(&h, 3).await;
    for x in c.iter_mut() {
        expect(x, is_period_start).await;
    }

    c[0].send(&post(Side::Bid, 95, 1, 1)).await.unwrap();
    let ack = expect(&mut c[0], |m| matches!(m, ServerMessage::OrderAck { .. })).await;
    assert!(matches!(ack, ServerMessage::OrderAck { status: AckStatus::Resting, order_id: OrderId(1), .. }));
    for (i, x) in c.iter_mut().enumerate() {
        let m = expect(x, |m| matches!(m, ServerMessage::BookUpdate { .. })).await;
        let ServerMessage::BookUpdate { book, .. } = m else { unreachable!() };
        assert_eq!(book.best_bid, Some(95));
        assert_eq!(book.bids[0].own, i == 0);
    }

    c[1].send(&post(Side::Ask, 90, 2, 2)).await.unwrap();
    let ack = expect(&mut c[1], |m| matches!(m, ServerMessage::OrderAck { .. })).await;
    assert!(matches!(
        ack,
        ServerMessage::OrderAck { status: AckStatus::Partial, filled_quantity: 1, resting_quantity: 1, .. }
    ));
    for (i, x) in c.iter_mut().enumerate() {
        let m = expect(x, |m| matches!(m, ServerMessage::TradeNotice { .. })).await;
        let ServerMessage::TradeNotice { price_cents, fill, .. } = m else { unreachable!() };
        assert_eq!(price_cents, 95);
        assert_eq!(fill.is_some(), i < 2);
    }

    c[2].send(&ClientMessage::CancelOrder { order_id: OrderId(2), client_ref: Some(3) }).await.unwrap();
    let m = expect(&mut c[2], |m| matches!(m, ServerMessage::OrderReject { .. })).await;
    assert!(matches!(m, ServerMessage::OrderReject { ref reason, .. } if reason == "not_owner"));

    c[1].send(&ClientMessage::CancelOrder { order_id: OrderId(2), client_ref: Some(4) }).await.unwrap();
    let m = expect(&mut c[1], |m| matches!(m, ServerMessage::OrderAck { .. })).await;
    assert!(matches!(m, ServerMessage::OrderAck { status: AckStatus::Cancelled, resting_quantity: 1, .. }));

    c[2].send(&post(Side::Bid, 10_000, 1, 5)).await.unwrap();
    let m = expect(&mut c[2], |m| matches!(m, ServerMessage::OrderReject { .. })).await;
    assert!(matches!(m, ServerMessage::OrderReject { ref reason, .. } if reason == "insufficient_cash"));

    // run both periods out
    h.clock.set(120_000);
    for x in c.iter_mut() {
        let m = expect(x, |m| matches!(m, ServerMessage::PeriodSummary { .. })).await;
        assert!(matches!(m, ServerMessage::PeriodSummary { period: 1, next_period: Some(2), .. }));
    }
    h.clock.set(240_000);
    for x in c.iter_mut() {
        let m = expect(x, |m| matches!(m, ServerMessage::FinalPayout { .. })).await;
        let ServerMessage::FinalPayout { cash, showup_fee, total, .. } = m else { unreachable!() };
        assert_eq!(total, cash + showup_fee);
    }
    let outcome = h.server.await.unwrap();
    assert!(outcome.aborted.is_none());
    replay(outcome.log.records()).unwrap();
    for x in c.iter_mut() {
        tokio::time::timeout(Duration::from_secs(5), x.drain()).await.unwrap().unwrap();
    }
}

#[tokio::test]
async fn bad_frames_keep_the_connection() {
    let h = start(2, |_| {}).await;
    let mut lone = Client::connect(h.addr).await.unwrap();
    lone.send(&ClientMessage::Ping).await.unwrap();
    let m = expect(&mut lone, |_| true).await;
    assert!(matches!(m, ServerMessage::Error { ref code, .. } if code == "not_joined"));

    let (mut c, _, _) = Client::join(h.addr, None).await.unwrap();
    c.send_raw(b"{\"type\":\"POST_ORDER\",\n").await.unwrap();
    let m = expect(&mut c, |m| matches!(m, ServerMessage::Error { .. })).await;
    assert!(matches!(m, ServerMessage::Error { ref code, offset: Some(21), .. } if code == "malformed"));

    c.send_raw(b"{\"type\":\"CHAT\",\"text\":\"sell now\"}\n").await.unwrap();
    let m = expect(&mut c, |m| matches!(m, ServerMessage::Error { .. })).await;
    assert!(matches!(m, ServerMessage::Error { ref code, .. } if code == "protocol_violation"));

    c.send_raw(b"{\"type\":\"POST_ORDER\",\"side\":\"BID\",\"price_cents\":9.5,\"quantity\":1}\n")
        .await
        .unwrap();
    let m = expect(&mut c, |m| matches!(m, ServerMessage::OrderReject { .. })).await;
    assert!(matches!(m, ServerMessage::OrderReject { ref reason, .. } if reason == "invalid_price"));

    c.send(&ClientMessage::Hello { token: None }).await.unwrap();
    let m = expect(&mut c, |m| matches!(m, ServerMessage::Error { .. })).await;
    assert!(matches!(m, ServerMessage::Error { ref code, .. } if code == "already_joined"));

    c.send(&ClientMessage::Ping).await.unwrap();
    let m = expect(&mut c, |m| matches!(m, ServerMessage::SessionInfo(_))).await;
    assert!(matches!(m, ServerMessage::SessionInfo(ref i) if i.phase == ServerPhase::Lobby));
    h.server.abort();
}

#[tokio::test]
async fn reconnecting_seat_gets_a_snapshot() {
    let h = start(2, |_| {}).await;
    let mut c = join_all(&h, 2).await;
    for x in c.iter_mut() {
        expect(x, is_period_start).await;
    }
    h.clock.set(1_000);
    c[0].send(&post(Side::Bid, 80, 2, 1)).await.unwrap();
    expect(&mut c[0], |m| matches!(m, ServerMessage::OrderAck { .. })).await;

    let first = c.remove(0);
    first.close().await;
    h.clock.set(2_000);

    match Client::join(h.addr, Some("not-a-token".into())).await {
        Err(ClientError::Refused { code, .. }) => assert_eq!(code, "invalid_token"),
        _ => panic!("bad token accepted"),
    }
    // the seat frees up once the server has seen the disconnect
    let mut back = None;
    for _ in 0..50 {
        match Client::join(h.addr, Some(h.tokens[0].clone())).await {
            Ok(j) => {
                back = Some(j);
                break;
            }
            Err(ClientError::Refused { code, .. }) if code == "seat_in_use" => {
                tokio::time::sleep(Duration::from_millis(20)).await;
            }
            Err(e) => panic!("{e}"),
        }
    }
    let (mut back, trader, _) = back.expect("seat reclaimed");
    assert_eq!(trader, TraderId(1));
    let m = expect(&mut back, |m| matches!(m, ServerMessage::SessionInfo(_))).await;
    let ServerMessage::SessionInfo(info) = m else { unreachable!() };
    assert_eq!(info.phase, ServerPhase::Trading);
    assert_eq!(info.own_orders.len(), 1);
    assert_eq!(info.deadline, Some(120_000));
    let m = expect(&mut back, |m| matches!(m, ServerMessage::BookUpdate { .. })).await;
    let ServerMessage::BookUpdate { book, .. } = m else { unreachable!() };
    assert_eq!(book.best_bid, Some(80));
    assert!(book.bids[0].own);

    match Client::join(h.addr, Some(h.tokens[0].clone())).await {
        Err(ClientError::Refused { code, .. }) => assert_eq!(code, "seat_in_use"),
        _ => panic!("seat taken twice"),
    }
    h.server.abort();
}

#[tokio::test]
async fn long_disconnect_aborts_the_session() {
    let h = start(2, |o| o.disconnect_grace_ms = 5_000).await;
    let mut c = join_all(&h, 2).await;
    for x in c.iter_mut() {
        expect(x, is_period_start).await;
    }
    h.clock.set(10_000);
    let gone = c.remove(1);
    gone.close().await;
    // give the server a moment to notice, then let the grace run out
    tokio::time::sleep(Duration::from_millis(100)).await;
    h.clock.set(20_000);
    let m = expect(&mut c[0], |m| matches!(m, ServerMessage::Error { .. })).await;
    assert!(matches!(m, ServerMessage::Error { ref code, ref message, .. }
        if code == "session_aborted" && message.contains("trader 2")));
    let outcome = h.server.await.unwrap();
    assert_eq!(outcome.aborted.as_deref(), Some("trader 2 disconnected"));
    replay(outcome.log.records()).unwrap();
}

#[tokio::test]
async fn summary_pause_between_periods() {
    let h = start(2, |o| o.summary_pause_ms = 15_000).await;
    let mut c = join_all(&h, 2).await;
    for x in c.iter_mut() {
        expect(x, is_period_start).await;
    }
    h.clock.set(120_000);
    expect(&mut c[0], |m| matches!(m, ServerMessage::PeriodSummary { .. })).await;
    c[0].send(&post(Side::Bid, 10, 1, 9)).await.unwrap();
    let m = expect(&mut c[0], |m| matches!(m, ServerMessage::OrderReject { .. })).await;
    assert!(matches!(m, ServerMessage::OrderReject { ref reason, .. } if reason == "wrong_phase"));
    h.clock.set(135_000);
    let m = expect(&mut c[0], is_period_start).await;
    assert!(matches!(m, ServerMessage::PeriodStart { period: 2, server_time: 135_000, deadline: 255_000, .. }));
    h.server.abort();
}
