use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ProtocolError, Role};
use crate::bits::Bitstring;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyStatus {
    Fresh,
    Active,
    Compromised,
    Retired,
}

impl KeyStatus {
    pub fn usable(self) -> bool {
        matches!(self, KeyStatus::Fresh | KeyStatus::Active)
    }
}

/// A pad `J` and basis key `K` of equal length, with alternation state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyRecord {
    pub id: u32,
    pub pad: Bitstring,
    pub basis: Bitstring,
    pub first_user: Role,
    pub next_user: Role,
    pub status: KeyStatus,
    pub uses: u32,
}

impl KeyRecord {
    pub fn new(id: u32, pad: Bitstring, basis: Bitstring, first_user: Role) -> Self {
        assert_eq!(pad.len(), basis.len(), "pad and basis key lengths differ");
        Self {
            id,
            pad,
            basis,
            first_user,
            next_user: first_user,
            status: KeyStatus::Fresh,
            uses: 0,
        }
    }

    pub fn random(id: u32, len: usize, first_user: Role, rng: &mut RngStream) -> Self {
        let pad = Bitstring::random(len, rng);
        let basis = Bitstring::random(len, rng);
        Self::new(id, pad, basis, first_user)
    }

    pub fn len(&self) -> usize {
        self.pad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pad.is_empty()
    }

    pub fn available_to(&self, role: Role) -> bool {
        self.status.usable() && self.next_user == role
    }
}

/// Initial key configuration: which party uses the key first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyDescriptor {
    pub id: u32,
    pub first_user: Role,
}

/// How fresh key material is turned into new keys.
///
/// Each new key consumes a whole number of accepted `message_len`-bit
/// transfers: eight of them (`8n` bits), or more when the pad and basis key
/// together need more than `8n` bits. The pad takes the first `key_len` bits,
/// the basis key the next `key_len`, and the remainder is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplenishPlan {
    pub message_len: usize,
    pub key_len: usize,
}

impl ReplenishPlan {
    pub const MIN_TRANSFERS: usize = 8;

    pub fn new(message_len: usize, key_len: usize) -> Self {
        assert!(message_len > 0);
        Self {
            message_len,
            key_len,
        }
    }

    pub fn transfers_per_key(&self) -> usize {
        Self::MIN_TRANSFERS.max((2 * self.key_len).div_ceil(self.message_len))
    }

    pub fn bits_per_key(&self) -> usize {
        self.transfers_per_key() * self.message_len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPool {
    keys: BTreeMap<u32, KeyRecord>,
    buffer: Vec<bool>,
    next_first_user: Role,
    bits_deposited: usize,
    bits_consumed: usize,
}

impl Default for KeyPool {
    fn default() -> Self {
        Self::new()
    }
}

impl KeyPool {
    pub fn new() -> Self {
        Self {
            keys: BTreeMap::new(),
            buffer: Vec::new(),
            next_first_user: Role::A,
            bits_deposited: 0,
            bits_consumed: 0,
        }
    }

    /// Random keys for the given descriptors. Both parties build their pools
    /// from the same stream, which models the initially shared secret.
    pub fn from_descriptors(
        descriptors: &[KeyDescriptor],
        key_len: usize,
        rng: &mut RngStream,
    ) -> Result<Self, ProtocolError> {
        let mut pool = Self::new();
        for d in descriptors {
            pool.insert(KeyRecord::random(d.id, key_len, d.first_user, rng))?;
        }
        Ok(pool)
    }

    pub fn insert(&mut self, key: KeyRecord) -> Result<(), ProtocolError> {
        if self.keys.contains_key(&key.id) {
            return Err(ProtocolError::DuplicateKey(key.id));
        }
        self.keys.insert(key.id, key);
        Ok(())
    }

    pub fn get(&self, id: u32) -> Option<&KeyRecord> {
        self.keys.get(&id)
    }

    pub fn get_mut(&mut self, id: u32) -> Option<&mut KeyRecord> {
        self.keys.get_mut(&id)
    }

    pub fn keys(&self) -> impl Iterator<Item = &KeyRecord> {
        self.keys.values()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn buffered_bits(&self) -> usize {
        self.buffer.len()
    }

    pub fn bits_deposited(&self) -> usize {
        self.bits_deposited
    }

    pub fn bits_consumed(&self) -> usize {
        self.bits_consumed
    }

    /// Add accepted fresh bits; returns any keys that could be assembled.
    pub fn deposit_fresh(&mut self, bits: &Bitstring, plan: ReplenishPlan) -> Vec<KeyRecord> {
        assert_eq!(bits.len(), plan.message_len, "fresh transfer length");
        self.buffer.extend(bits.iter());
        self.bits_deposited += bits.len();
        let mut made = Vec::new();
        let need = plan.bits_per_key();
        while self.buffer.len() >= need {
            let chunk: Vec<bool> = self.buffer.drain(..need).collect();
            self.bits_consumed += need;
            let id = self.keys.keys().next_back().map_or(1, |m| m + 1);
            let pad = Bitstring::new(chunk[..plan.key_len].to_vec());
            let basis = Bitstring::new(chunk[plan.key_len..2 * plan.key_len].to_vec());
            let key = KeyRecord::new(id, pad, basis, self.next_first_user);
            self.next_first_user = self.next_first_user.other();
            self.keys.insert(id, key.clone());
            made.push(key);
        }
        made
    }
}
