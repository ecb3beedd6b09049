//! How many key changes an adversary forces before one key falls to it.
//!
//! Each transmission the adversary intercepts every photon in a freshly
//! guessed basis. A rejection makes the parties change keys; an acceptance
//! with every basis guessed right hands the adversary the key and ends the run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::matrix_from_seed;
use crate::adversary::{intercept_resend, AdversaryKnowledge, BasisGuess, KnowledgeEntry};
use crate::bits::Bitstring;
use crate::codes::{CodeError, CodeFamily, Codec, DiffusiveCodec};
use crate::protocol::{strong_decode, strong_encode, KeyRecord, Role};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyChangeResult {
    /// Basis-key length |K|, equal to the codeword length.
    pub key_len: usize,
    pub runs: u64,
    pub mean_changes: f64,
    pub se: f64,
    /// Runs that hit the transmission cap before the adversary succeeded.
    pub capped: u64,
}

/// One run: key changes until the adversary succeeds, or `None` at the cap.
pub fn key_changes_until_success(code: &CodeFamily, cap: u64, rng: &mut RngStream) -> Option<u64> {
    let n = code.message_len();
    let len = code.codeword_len();
    let positions: Vec<usize> = (0..len).collect();
    let mut changes = 0u64;
    let mut key = KeyRecord::random(1, len, Role::A, rng);
    let mut sender = Role::A;
    for _ in 0..cap {
        let m = Bitstring::random(n, rng);
        let t = strong_encode(&m, &mut key, sender, code).expect("key is ours");
        let mut k = AdversaryKnowledge::new();
        let forged = intercept_resend(t, &positions, &BasisGuess::Random, &mut k, rng);
        let all_right = k.entries().iter().all(|e| match e {
            KnowledgeEntry::Measured { position, basis, .. } => basis.bit() == key.basis[*position],
            _ => true,
        });
        let accepted = strong_decode(forged, &key, code, rng)
            .expect("usable key")
            .verdict
            .is_accept();
        if accepted && all_right {
            return Some(changes);
        }
        if accepted {
            key.next_user = key.next_user.other();
            sender = sender.other();
        } else {
            changes += 1;
            key = KeyRecord::random(1, len, sender, rng);
        }
    }
    None
}

/// Mean key changes before success over `runs` runs with the diffusive code
/// for basis keys of length `key_len` (messages of `key_len / 2` bits).
pub fn key_change_experiment(
    key_len: usize,
    runs: u64,
    cap: u64,
    seed: u64,
) -> Result<KeyChangeResult, CodeError> {
    assert!(key_len % 2 == 0 && key_len >= 2, "key length must be even");
    let n = key_len / 2;
    let code: CodeFamily = DiffusiveCodec::new(matrix_from_seed(n, seed)?)?.into();
    let root = RngStream::new(seed, key_len as u64);
    let outcomes: Vec<Option<u64>> = (0..runs)
        .into_par_iter()
        .map(|r| key_changes_until_success(&code, cap, &mut root.derive(r)))
        .collect();
    let done: Vec<f64> = outcomes.iter().flatten().map(|&c| c as f64).collect();
    let m = done.len() as f64;
    let mean = done.iter().sum::<f64>() / m.max(1.0);
    let var = if done.len() > 1 {
        done.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(KeyChangeResult {
        key_len,
        runs,
        mean_changes: mean,
        se: (var / m.max(1.0)).sqrt(),
        capped: outcomes.iter().filter(|o| o.is_none()).count() as u64,
    })
}
