//! Newline-delimited JSON framing.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::protocol::{ClientMessage, ServerMessage, CLIENT_MESSAGE_TYPES};

/// Longest accepted frame, newline excluded.
pub const MAX_FRAME_LEN: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeErrorKind {
    /// Not valid JSON, or valid JSON of the wrong shape.
    Malformed,
    /// The frame ended in the middle of a value.
    Truncated,
    /// A well-formed frame whose `type` is not part of the protocol.
    UnknownType,
    /// A POST_ORDER whose price is not a whole number of cents.
    InvalidPrice,
    TooLong,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte {offset}")]
pub struct DecodeError {
    pub kind: DecodeErrorKind,
    /// Byte offset into the frame where decoding failed.
    pub offset: usize,
    pub message: String,
}

impl DecodeError {
    fn new(kind: DecodeErrorKind, offset: usize, message: impl Into<String>) -> Self {
        Self {
            kind,
            offset,
            message: message.into(),
        }
    }

    fn from_json(frame: &[u8], e: &serde_json::Error) -> Self {
        let kind = if e.is_eof() {
            DecodeErrorKind::Truncated
        } else {
            DecodeErrorKind::Malformed
        };
        // frames are single lines, so the column locates the byte
        let offset = if e.is_eof() {
            frame.len()
        } else {
            e.column().saturating_sub(1).min(frame.len())
        };
        Self::new(kind, offset, e.to_string())
    }
}

/// One frame: the JSON text followed by `\n`.
pub fn encode<T: Serialize>(msg: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec(msg).expect("protocol messages serialize");
    out.push(b'\n');
    out
}

pub fn encode_line<T: Serialize>(msg: &T) -> String {
    String::from_utf8(encode(msg)).expect("JSON is UTF-8")
}

fn decode_as<T: DeserializeOwned>(frame: &[u8]) -> Result<T, DecodeError> {
    let frame = trim_frame(frame);
    serde_json::from_slice(frame).map_err(|e| DecodeError::from_json(frame, &e))
}

fn trim_frame(frame: &[u8]) -> &[u8] {
    let frame = frame.strip_suffix(b"\n").unwrap_or(frame);
    frame.strip_suffix(b"\r").unwrap_or(frame)
}

/// Decodes a client frame. Unknown fields are ignored; unknown message
/// types are reported as [`DecodeErrorKind::UnknownType`].
pub fn decode_client(frame: &[u8]) -> Result<ClientMessage, DecodeError> {
    let frame = trim_frame(frame);
    match decode_as::<ClientMessage>(frame) {
        Ok(msg) => Ok(msg),
        Err(err) if err.kind == DecodeErrorKind::Malformed => {
            // the text parsed as JSON but not as a message: say why
            let Ok(value) = serde_json::from_slice::<serde_json::Value>(frame) else {
                return Err(err);
            };
            let ty = value.get("type").and_then(|t| t.as_str());
            match ty {
                Some(ty) if !CLIENT_MESSAGE_TYPES.contains(&ty) => Err(DecodeError::new(
                    DecodeErrorKind::UnknownType,
                    field_offset(frame, "type"),
                    format!("unknown message type {ty:?}"),
                )),
                Some("POST_ORDER")
                    if value
                        .get("price_cents")
                        .is_some_and(|p| p.is_number() && p.as_i64().is_none()) =>
                {
                    Err(DecodeError::new(
                        DecodeErrorKind::InvalidPrice,
                        field_offset(frame, "price_cents"),
                        "price_cents must be an integer number of cents",
                    ))
                }
                _ => Err(err),
            }
        }
        Err(err) => Err(err),
    }
}

pub fn decode_server(frame: &[u8]) -> Result<ServerMessage, DecodeError> {
    decode_as(frame)
}

/// Best-effort position of `"key"` in the frame, for error reporting.
fn field_offset(frame: &[u8], key: &str) -> usize {
    let needle = format!("\"{key}\"");
    frame
        .windows(needle.len())
        .position(|w| w == needle.as_bytes())
        .unwrap_or(0)
}

/// Splits a byte stream into frames.
#[derive(Debug, Default)]
pub struct FrameBuffer {
    buf: Vec<u8>,
    /// Skipping the rest of an over-long frame.
    discarding: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Line(Vec<u8>),
    TooLong,
}

impl FrameBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn extend(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// The next complete frame, if any. Blank lines are skipped.
    pub fn next_frame(&mut self) -> Option<Frame> {
        loop {
            match self.buf.iter().position(|&b| b == b'\n') {
                Some(i) => {
                    let line: Vec<u8> = self.buf.drain(..=i).collect();
                    if std::mem::take(&mut self.discarding) {
                        continue;
                    }
                    let body = trim_frame(&line);
                    if body.len() > MAX_FRAME_LEN {
                        return Some(Frame::TooLong);
                    }
                    if body.iter().all(u8::is_ascii_whitespace) {
                        continue;
                    }
                    return Some(Frame::Line(body.to_vec()));
                }
                None if self.buf.len() > MAX_FRAME_LEN && !self.discarding => {
                    self.buf.clear();
                    self.discarding = true;
                    return Some(Frame::TooLong);
                }
                None => {
                    if self.discarding {
                        self.buf.clear();
                    }
                    return None;
                }
            }
        }
    }

    /// Called at end of stream: an unterminated tail is a truncated frame.
    pub fn finish(&mut self) -> Option<DecodeError> {
        let tail = std::mem::take(&mut self.buf);
        if self.discarding || tail.iter().all(u8::is_ascii_whitespace) {
            return None;
        }
        Some(DecodeError::new(
            DecodeErrorKind::Truncated,
            tail.len(),
            "stream ended inside a frame",
        ))
    }
}
