//! Live trading sessions over TCP: the wire protocol, its codec, the
//! session server and a small client used by bots and tests.

pub mod client;
pub mod clock;
pub mod codec;
pub mod fanout;
pub mod protocol;
pub mod scripted;
mod server;

pub use client::{Client, ClientError};
pub use clock::{ServerClock, VirtualClock};
pub use protocol::{ClientMessage, ServerMessage};
pub use server::{ServeError, ServeOutcome, Server, ServerOptions};
