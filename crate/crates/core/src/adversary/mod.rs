//! Eavesdropping and tampering strategies applied to transmissions in flight.

mod beamsplit;
mod guess;
mod photon;

pub use beamsplit::{beamsplit_attack, classify_pulse, ml_polarization, BeamSplitStats, PulseView};
pub use guess::{
    confirm_guesses, guess_and_verify, guessed_positions, intercept_guessed, Emission, GenerationRecord,
    GenerationRun, GuessObservation, GuessVerifyReport,
};
pub use photon::{inject, intercept_resend, random_payload, rotate90_tamper, suppress};

use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::quantum::{Basis, DetectorModel, Polarization};

/// Payload positions an attack touches. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Positions {
    All,
    Some(Vec<usize>),
}

impl Positions {
    pub fn resolve(&self, len: usize) -> Vec<usize> {
        match self {
            Positions::All => (0..len).collect(),
            Positions::Some(p) => {
                let mut p: Vec<usize> = p.iter().copied().filter(|&i| i < len).collect();
                p.sort_unstable();
                p.dedup();
                p
            }
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        match self {
            Positions::All => None,
            Positions::Some(p) => p.iter().copied().max(),
        }
    }
}

/// Where an intercepting adversary's basis choices come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisGuess {
    Random,
    /// One basis bit per payload position.
    Fixed(Bitstring),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectPayload {
    Random,
    Fixed { values: Bitstring, bases: Bitstring },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbiguousPolicy {
    ResendBestGuess,
    SuppressPulse,
}

/// Guesses for pad and basis-key bits, one per payload position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessSource {
    Random,
    Fixed { pad: Bitstring, basis: Bitstring },
    /// The adversary happens to guess the true key bits every generation.
    Correct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackStrategy {
    Passive {},
    InterceptResend {
        positions: Positions,
        basis_guess: BasisGuess,
    },
    Rotate90 {
        positions: Positions,
    },
    Suppress {},
    /// Replace the transmission with a forged one. `key_id: None` reuses the
    /// intercepted header.
    Inject {
        key_id: Option<u32>,
        payload: InjectPayload,
    },
    BeamSplit {
        detector: DetectorModel,
        ambiguous_policy: AmbiguousPolicy,
    },
    /// Intercept positions `i` and `n+i` for each listed pair index `i`.
    GuessAndVerify {
        pairs: Vec<usize>,
        guesses: GuessSource,
        generations: u32,
    },
}

impl AttackStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            AttackStrategy::Passive {} => "passive",
            AttackStrategy::InterceptResend { .. } => "intercept_resend",
            AttackStrategy::Rotate90 { .. } => "rotate90",
            AttackStrategy::Suppress {} => "suppress",
            AttackStrategy::Inject { .. } => "inject",
            AttackStrategy::BeamSplit { .. } => "beam_split",
            AttackStrategy::GuessAndVerify { .. } => "guess_and_verify",
        }
    }

    /// Whether the strategy only makes sense against single photons or only
    /// against faint pulses; `None` when it applies to both.
    pub fn requires_photons(&self) -> Option<bool> {
        match self {
            AttackStrategy::Passive {} | AttackStrategy::Suppress {} | AttackStrategy::Inject { .. } => {
                None
            }
            AttackStrategy::BeamSplit { .. } => Some(false),
            _ => Some(true),
        }
    }
}

/// One thing the adversary has observed or inferred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KnowledgeEntry {
    Measured {
        transmission: u64,
        position: usize,
        basis: Basis,
        value: bool,
    },
    Unambiguous {
        transmission: u64,
        position: usize,
        polarization: Polarization,
    },
    /// Key-bit guesses whose transmission was accepted.
    Confirmed {
        transmission: u64,
        position: usize,
        pad: bool,
        basis: bool,
    },
    /// A fresh-key (message) bit fully determined by confirmed observations.
    Learned {
        transmission: u64,
        index: usize,
        value: bool,
    },
}

/// Append-only ledger of adversary observations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdversaryKnowledge {
    transmission: u64,
    entries: Vec<KnowledgeEntry>,
}

impl AdversaryKnowledge {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index stamped on subsequent entries.
    pub fn transmission(&self) -> u64 {
        self.transmission
    }

    pub fn next_transmission(&mut self) {
        self.transmission += 1;
    }

    pub fn push(&mut self, entry: KnowledgeEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[KnowledgeEntry] {
        &self.entries
    }

    /// Entries stamped with transmission `t`.
    pub fn for_transmission(&self, t: u64) -> impl Iterator<Item = &KnowledgeEntry> {
        self.entries.iter().filter(move |e| e.transmission() == t)
    }

    pub fn learned_bits(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e, KnowledgeEntry::Learned { .. }))
            .count()
    }
}

impl KnowledgeEntry {
    pub fn transmission(&self) -> u64 {
        match *self {
            KnowledgeEntry::Measured { transmission, .. }
            | KnowledgeEntry::Unambiguous { transmission, .. }
            | KnowledgeEntry::Confirmed { transmission, .. }
            | KnowledgeEntry::Learned { transmission, .. } => transmission,
        }
    }
}
