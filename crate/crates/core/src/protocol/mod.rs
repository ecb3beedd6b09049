//! Sender/receiver protocol for reusing one-time pads over a quantum channel.
//!
//! Messages are encoded with an error-detecting code, masked with a pad `J`
//! and sent as photons (or faint pulses) whose bases come from a basis key
//! `K`. A key pair is reused until the receiver sees evidence of tampering or
//! a transmission goes missing; then both parties retire it for good.

mod encoding;
mod keys;
mod party;
mod trace;

pub use encoding::{
    faint_decode, faint_encode, missing_pulse_test, strong_decode, strong_encode, DecodeReport,
    MissingPulseTest, DEFAULT_MISSING_ALPHA,
};
pub use keys::{KeyDescriptor, KeyPool, KeyRecord, KeyStatus, ReplenishPlan};
pub use party::{KeyEvent, PartyCounters, PartyState};
pub use trace::{TraceEvent, TraceLog};

use serde::{Deserialize, Serialize};

use crate::codes::RejectReason;
use crate::quantum::{FaintPulse, Photon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    A,
    B,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::A => Role::B,
            Role::B => Role::A,
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::A => "A",
            Role::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SinglePhoton,
    FaintPulse,
}

/// Why a receiver refused a transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Code(RejectReason),
    /// More pulses went undetected than natural losses explain.
    MissingPulses,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    AcceptMessage(crate::bits::Bitstring),
    RejectEavesdrop(Evidence),
    MissingTransmission,
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::AcceptMessage(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::AcceptMessage(_) => "accept",
            Verdict::RejectEavesdrop(_) => "reject",
            Verdict::MissingTransmission => "missing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Photons(Vec<Photon>),
    /// `None` marks a pulse slot in which nothing arrives.
    Pulses(Vec<Option<FaintPulse>>),
}

impl Payload {
    pub fn len(&self) -> usize {
        match self {
            Payload::Photons(p) => p.len(),
            Payload::Pulses(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            Payload::Photons(_) => Scheme::SinglePhoton,
            Payload::Pulses(_) => Scheme::FaintPulse,
        }
    }
}

/// A quantum transmission prefixed by the cleartext id of its key.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub key_id: u32,
    pub payload: Payload,
}

impl Transmission {
    pub fn scheme(&self) -> Scheme {
        self.payload.scheme()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("key {0} is not available to this party")]
    KeyNotAvailable(u32),
    #[error("unknown key id {0}")]
    UnknownKey(u32),
    #[error("key {0} has been retired or compromised")]
    StaleKey(u32),
    #[error("no usable keys remain")]
    KeysExhausted,
    #[error("duplicate key id {0}")]
    DuplicateKey(u32),
}
