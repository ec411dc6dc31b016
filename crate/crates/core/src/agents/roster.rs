use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::AgentPolicy;

pub const PRESETS: [&str; 3] = ["all-fundamentalist", "all-zic", "speculator-majority"];

#[derive(Debug, Error)]
pub enum RosterError {
    #[error("unknown roster preset {0:?}")]
    UnknownPreset(String),
    #[error("cannot read roster {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse roster: {0}")]
    Parse(String),
    #[error("seat {seat}: {message}")]
    InvalidPolicy { seat: usize, message: String },
}

/// Seat-by-seat policy assignment. Seat `i` (1-based) trades as trader `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roster {
    #[serde(rename = "seat")]
    pub seats: Vec<AgentPolicy>,
}

impl Roster {
    pub fn new(seats: Vec<AgentPolicy>) -> Self {
        Self { seats }
    }

    /// Named rosters for `n` seats. `speculator-majority` puts a single
    /// fundamentalist in the last seat and speculators (λ = 0.9) elsewhere.
    pub fn preset(name: &str, n: u32) -> Result<Self, RosterError> {
        let n = n as usize;
        let seats = match name {
            "all-fundamentalist" => vec![AgentPolicy::fundamentalist(); n],
            "all-zic" => vec![AgentPolicy::Zic; n],
            "speculator-majority" => {
                let mut s = vec![AgentPolicy::speculator(0.9); n.saturating_sub(1)];
                s.push(AgentPolicy::fundamentalist());
                s
            }
            other => return Err(RosterError::UnknownPreset(other.to_string())),
        };
        Ok(Self { seats })
    }

    pub fn parse_toml(text: &str) -> Result<Self, RosterError> {
        let roster: Roster = toml::from_str(text).map_err(|e| RosterError::Parse(e.to_string()))?;
        roster.validate()?;
        Ok(roster)
    }

    pub fn load(path: &Path) -> Result<Self, RosterError> {
        let text = std::fs::read_to_string(path).map_err(|source| RosterError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_toml(&text)
    }

    /// A preset name or a path to a roster file.
    pub fn resolve(spec: &str, n: u32) -> Result<Self, RosterError> {
        if PRESETS.contains(&spec) {
            Self::preset(spec, n)
        } else {
            Self::load(Path::new(spec))
        }
    }

    pub fn validate(&self) -> Result<(), RosterError> {
        for (i, p) in self.seats.iter().enumerate() {
            p.validate().map_err(|message| RosterError::InvalidPolicy {
                seat: i + 1,
                message,
            })?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.seats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seats.is_empty()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("roster serializes")
    }
}
