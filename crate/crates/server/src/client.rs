use std::collections::VecDeque;

use bubblelab_core::exchange::TraderId;
use thiserror::Error;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::{TcpStream, ToSocketAddrs};

use crate::codec::{decode_server, encode, DecodeError, Frame, FrameBuffer};
use crate::protocol::{ClientMessage, ServerMessage};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("undecodable server frame: {0}")]
    Decode(#[from] DecodeError),
    #[error("server closed the connection")]
    Closed,
    #[error("server sent an over-long frame")]
    FrameTooLong,
    #[error("server refused: {code}: {message}")]
    Refused { code: String, message: String },
}

/// Minimal protocol client, used by bots and tests.
pub struct Client {
    rd: OwnedReadHalf,
    wr: OwnedWriteHalf,
    frames: FrameBuffer,
    queued: VecDeque<ServerMessage>,
}

impl Client {
    pub async fn connect(addr: impl ToSocketAddrs) -> Result<Client, ClientError> {
        let stream = TcpStream::connect(addr).await?;
        stream.set_nodelay(true)?;
        let (rd, wr) = stream.into_split();
        Ok(Client {
            rd,
            wr,
            frames: FrameBuffer::new(),
            queued: VecDeque::new(),
        })
    }

    /// Connects and claims a seat, returning the seat and its token.
    pub async fn join(
        addr: impl ToSocketAddrs,
        token: Option<String>,
    ) -> Result<(Client, TraderId, String), ClientError> {
        let mut client = Client::connect(addr).await?;
        client.send(&ClientMessage::Hello { token }).await?;
        match client.recv().await? {
            Some(ServerMessage::Welcome {
                trader_id, token, ..
            }) => Ok((client, trader_id, token)),
            Some(ServerMessage::Error { code, message, .. }) => {
                Err(ClientError::Refused { code, message })
            }
            Some(_) | None => Err(ClientError::Closed),
        }
    }

    pub async fn send(&mut self, msg: &ClientMessage) -> Result<(), ClientError> {
        self.send_raw(&encode(msg)).await
    }

    pub async fn send_raw(&mut self, bytes: &[u8]) -> Result<(), ClientError> {
        self.wr.write_all(bytes).await?;
        Ok(())
    }

    /// Next message, or `None` once the server has closed the stream.
    pub async fn recv(&mut self) -> Result<Option<ServerMessage>, ClientError> {
        if let Some(m) = self.queued.pop_front() {
            return Ok(Some(m));
        }
        let mut chunk = [0u8; 8192];
        loop {
            match self.frames.next_frame() {
                Some(Frame::Line(line)) => return Ok(Some(decode_server(&line)?)),
                Some(Frame::TooLong) => return Err(ClientError::FrameTooLong),
                None => {}
            }
            let n = self.rd.read(&mut chunk).await?;
            if n == 0 {
                return match self.frames.finish() {
                    Some(e) => Err(e.into()),
                    None => Ok(None),
                };
            }
            self.frames.extend(&chunk[..n]);
        }
    }

    /// Reads until a message satisfies `pred`; earlier messages are
    /// returned alongside it.
    pub async fn recv_until(
        &mut self,
        mut pred: impl FnMut(&ServerMessage) -> bool,
    ) -> Result<(Vec<ServerMessage>, ServerMessage), ClientError> {
        let mut skipped = Vec::new();
        loop {
            match self.recv().await? {
                Some(m) if pred(&m) => return Ok((skipped, m)),
                Some(m) => skipped.push(m),
                None => return Err(ClientError::Closed),
            }
        }
    }

    /// Reads everything up to end of stream.
    pub async fn drain(&mut self) -> Result<Vec<ServerMessage>, ClientError> {
        let mut all = Vec::new();
        while let Some(m) = self.recv().await? {
            all.push(m);
        }
        Ok(all)
    }

    pub async fn close(mut self) {
        let _ = self.wr.shutdown().await;
    }
}
