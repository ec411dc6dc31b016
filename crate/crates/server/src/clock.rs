use std::time::{Duration, SystemTime, UNIX_EPOCH};

use tokio::sync::watch;

/// Time source of the sequencer, in milliseconds.
///
/// `System` reads wall-clock time since the Unix epoch. `Virtual` only moves
/// when its [`VirtualClock`] handle is advanced, which lets tests run a
/// whole session instantly and reproducibly.
#[derive(Debug, Clone)]
pub enum ServerClock {
    System,
    Virtual(watch::Receiver<u64>),
}

impl ServerClock {
    pub fn now(&self) -> u64 {
        match self {
            ServerClock::System => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_millis() as u64),
            ServerClock::Virtual(rx) => *rx.borrow(),
        }
    }

    /// Resolves once `now() >= deadline`.
    pub async fn sleep_until(&self, deadline: u64) {
        match self {
            ServerClock::System => {
                let now = self.now();
                if deadline > now {
                    tokio::time::sleep(Duration::from_millis(deadline - now)).await;
                }
            }
            ServerClock::Virtual(rx) => {
                let mut rx = rx.clone();
                // a dropped handle freezes time; never wake in that case
                if rx.wait_for(|&t| t >= deadline).await.is_err() {
                    std::future::pending::<()>().await;
                }
            }
        }
    }
}

/// Controller for a [`ServerClock::Virtual`].
#[derive(Debug)]
pub struct VirtualClock {
    tx: watch::Sender<u64>,
}

impl VirtualClock {
    pub fn new(start: u64) -> Self {
        Self {
            tx: watch::Sender::new(start),
        }
    }

    pub fn clock(&self) -> ServerClock {
        ServerClock::Virtual(self.tx.subscribe())
    }

    pub fn now(&self) -> u64 {
        *self.tx.borrow()
    }

    /// Moves time forward to `t`; moving backwards is ignored.
    pub fn set(&self, t: u64) {
        self.tx.send_if_modified(|now| {
            if t > *now {
                *now = t;
                true
            } else {
                false
            }
        });
    }

    pub fn advance(&self, ms: u64) {
        self.set(self.now() + ms);
    }
}
