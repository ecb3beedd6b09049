use serde::{Deserialize, Serialize};

use super::{KeyPool, KeyRecord, KeyStatus, ProtocolError, Role, Scheme, Verdict};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyCounters {
    pub sent: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub missing: u64,
    pub keys_changed: u64,
}

/// What a verdict did to a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyEvent {
    /// Accepted; the key passes to the other party.
    Toggled,
    /// Accepted, but the key reached its faint-mode use limit.
    Retired,
    Compromised,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyState {
    pub role: Role,
    pub pool: KeyPool,
    pub scheme: Scheme,
    /// Message length n; sets the faint-mode rotation cadence ⌊√n⌋.
    pub message_len: usize,
    pub counters: PartyCounters,
}

impl PartyState {
    pub fn new(role: Role, pool: KeyPool, scheme: Scheme, message_len: usize) -> Self {
        Self {
            role,
            pool,
            scheme,
            message_len,
            counters: PartyCounters::default(),
        }
    }

    /// Accepted uses after which a faint-mode key is retired.
    pub fn rotation_limit(&self) -> u32 {
        (self.message_len as f64).sqrt().floor() as u32
    }

    /// Pick the key this party should send with next: the lowest-id fresh key
    /// reserved for it, else the lowest-id active key whose turn is ours.
    pub fn key_select(&self) -> Result<u32, ProtocolError> {
        let mine = |status| {
            self.pool
                .keys()
                .find(|k| k.status == status && k.next_user == self.role)
                .map(|k| k.id)
        };
        mine(KeyStatus::Fresh)
            .or_else(|| mine(KeyStatus::Active))
            .ok_or(ProtocolError::KeysExhausted)
    }

    /// Look up a key for sending; it must be usable and this party's turn.
    pub fn sending_key(&mut self, id: u32) -> Result<&mut KeyRecord, ProtocolError> {
        let role = self.role;
        let key = self.pool.get_mut(id).ok_or(ProtocolError::UnknownKey(id))?;
        if !key.available_to(role) {
            return Err(ProtocolError::KeyNotAvailable(id));
        }
        Ok(key)
    }

    /// Look up a key for receiving: it must be usable and the peer's turn.
    pub fn receiving_key(&self, id: u32) -> Result<&KeyRecord, ProtocolError> {
        let key = self.pool.get(id).ok_or(ProtocolError::UnknownKey(id))?;
        if !key.status.usable() {
            return Err(ProtocolError::StaleKey(id));
        }
        if key.next_user == self.role {
            return Err(ProtocolError::KeyNotAvailable(id));
        }
        Ok(key)
    }

    /// Update key state after a verdict on `key_id`. Both parties apply every
    /// verdict: the receiver directly, the sender through the acknowledgment channel.
    pub fn apply_verdict(&mut self, key_id: u32, verdict: &Verdict) -> Result<KeyEvent, ProtocolError> {
        let faint = self.scheme == Scheme::FaintPulse;
        let limit = self.rotation_limit();
        let key = self
            .pool
            .get_mut(key_id)
            .ok_or(ProtocolError::UnknownKey(key_id))?;
        let event = match verdict {
            Verdict::AcceptMessage(_) => {
                key.next_user = key.next_user.other();
                key.uses += 1;
                key.status = KeyStatus::Active;
                self.counters.accepted += 1;
                if faint && key.uses >= limit {
                    key.status = KeyStatus::Retired;
                    KeyEvent::Retired
                } else {
                    KeyEvent::Toggled
                }
            }
            Verdict::RejectEavesdrop(_) | Verdict::MissingTransmission => {
                key.status = KeyStatus::Compromised;
                if matches!(verdict, Verdict::MissingTransmission) {
                    self.counters.missing += 1;
                } else {
                    self.counters.rejected += 1;
                }
                KeyEvent::Compromised
            }
        };
        if event != KeyEvent::Toggled {
            self.counters.keys_changed += 1;
        }
        Ok(event)
    }
}
