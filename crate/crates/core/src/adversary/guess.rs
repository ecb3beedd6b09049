//! Multi-generation guess-and-verify key learning.

use serde::{Deserialize, Serialize};

use super::{AdversaryKnowledge, GuessSource, KnowledgeEntry};
use crate::bits::Bitstring;
use crate::codes::{determined_values, Codec};
use crate::protocol::{KeyRecord, Payload, Transmission};
use crate::quantum::{encode_bit, measure_basis, Basis};
use crate::rng::RngStream;

/// One fresh-key transfer produced by a [`GenerationRun`].
#[derive(Debug, Clone)]
pub struct Emission {
    pub transmission: Transmission,
    /// Key the transmission was sent under. The attack only reads it when
    /// guesses are [`GuessSource::Correct`].
    pub key: KeyRecord,
    /// The fresh bits carried, for scoring what the adversary learned.
    pub message: Bitstring,
}

/// A protocol run the adversary can sit inside, one fresh-key transfer per
/// generation.
pub trait GenerationRun {
    fn codec(&self) -> &dyn Codec;

    fn emit(&mut self, rng: &mut RngStream) -> Emission;

    /// Deliver the (possibly forged) transmission; true when accepted.
    fn deliver(&mut self, t: Transmission, rng: &mut RngStream) -> bool;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u32,
    pub accepted: bool,
    /// Message bits determined by confirmed observations, as (index, value).
    pub learned: Vec<(usize, bool)>,
    /// How many learned values agree with the fresh bits actually sent.
    pub learned_correct: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GuessVerifyReport {
    pub generations: Vec<GenerationRecord>,
    pub knowledge: AdversaryKnowledge,
}

impl GuessVerifyReport {
    pub fn cumulative_learned(&self) -> Vec<usize> {
        self.generations
            .iter()
            .scan(0, |acc, g| {
                *acc += g.learned.len();
                Some(*acc)
            })
            .collect()
    }

    pub fn total_learned(&self) -> usize {
        self.generations.iter().map(|g| g.learned.len()).sum()
    }

    pub fn accepted(&self) -> usize {
        self.generations.iter().filter(|g| g.accepted).count()
    }
}

/// Payload positions `i` and `n + i` for each pair index `i`, in order.
pub fn guessed_positions(pairs: &[usize], n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = pairs
        .iter()
        .filter(|&&i| i < n)
        .flat_map(|&i| [i, n + i])
        .collect();
    p.sort_unstable();
    p.dedup();
    p
}

/// One intercepted position: the guessed key bits and what was measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessObservation {
    pub position: usize,
    pub pad: bool,
    pub basis: bool,
    pub value: bool,
}

/// Measure `positions` in the guessed bases and resend photons consistent
/// with the guesses. `key` is read only for [`GuessSource::Correct`].
pub fn intercept_guessed(
    t: &mut Transmission,
    positions: &[usize],
    guesses: &GuessSource,
    key: &KeyRecord,
    knowledge: &mut AdversaryKnowledge,
    rng: &mut RngStream,
) -> Vec<GuessObservation> {
    let Payload::Photons(train) = &mut t.payload else {
        panic!("guess-and-verify needs single-photon transmissions");
    };
    let tx = knowledge.transmission();
    let len = train.len();
    positions
        .iter()
        .filter(|&&i| i < len)
        .map(|&i| {
            let (pad, basis) = match guesses {
                GuessSource::Random => (rng.bit(), rng.bit()),
                GuessSource::Fixed { pad, basis } => (pad[i], basis[i]),
                GuessSource::Correct => (key.pad[i], key.basis[i]),
            };
            let b = Basis::from_bit(basis);
            let value = measure_basis(&mut train[i], b, rng);
            train[i] = encode_bit(value, basis);
            knowledge.push(KnowledgeEntry::Measured {
                transmission: tx,
                position: i,
                basis: b,
                value,
            });
            GuessObservation {
                position: i,
                pad,
                basis,
                value,
            }
        })
        .collect()
}

/// After the verdict: on acceptance, record the guesses as confirmed and
/// return the message bits they determine.
pub fn confirm_guesses(
    observed: &[GuessObservation],
    code: &dyn Codec,
    accepted: bool,
    knowledge: &mut AdversaryKnowledge,
) -> Vec<(usize, bool)> {
    if !accepted || observed.is_empty() {
        return Vec::new();
    }
    let tx = knowledge.transmission();
    for o in observed {
        knowledge.push(KnowledgeEntry::Confirmed {
            transmission: tx,
            position: o.position,
            pad: o.pad,
            basis: o.basis,
        });
    }
    let (rows, values): (Vec<Bitstring>, Vec<bool>) = observed
        .iter()
        .filter_map(|o| code.position_functional(o.position).map(|r| (r, o.value ^ o.pad)))
        .unzip();
    let learned = determined_values(&rows, &values, code.message_len());
    for &(index, value) in &learned {
        knowledge.push(KnowledgeEntry::Learned {
            transmission: tx,
            index,
            value,
        });
    }
    learned
}

/// Run `generations` transfers through `run`, intercepting the guessed
/// positions each time.
pub fn guess_and_verify(
    run: &mut dyn GenerationRun,
    pairs: &[usize],
    guesses: &GuessSource,
    generations: u32,
    rng: &mut RngStream,
) -> GuessVerifyReport {
    let positions = guessed_positions(pairs, run.codec().message_len());
    let mut report = GuessVerifyReport::default();
    for generation in 0..generations {
        let Emission {
            mut transmission,
            key,
            message,
        } = run.emit(rng);
        let observed = intercept_guessed(
            &mut transmission,
            &positions,
            guesses,
            &key,
            &mut report.knowledge,
            rng,
        );
        let accepted = run.deliver(transmission, rng);
        let learned = confirm_guesses(&observed, run.codec(), accepted, &mut report.knowledge);
        let learned_correct = learned.iter().filter(|&&(j, v)| message[j] == v).count();
        report.generations.push(GenerationRecord {
            generation,
            accepted,
            learned,
            learned_correct,
        });
        report.knowledge.next_transmission();
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{gen_nonsingular_gf2, CodeFamily, DiffusiveCodec, MmCodec};
    use crate::protocol::{strong_decode, strong_encode, Role};

    /// Fresh random key and message every generation.
    struct Toy {
        code: CodeFamily,
        key: Option<KeyRecord>,
    }

    impl GenerationRun for Toy {
        fn codec(&self) -> &dyn Codec {
            &self.code
        }

        fn emit(&mut self, rng: &mut RngStream) -> Emission {
            let n = self.code.message_len();
            let mut key = KeyRecord::random(1, self.code.codeword_len(), Role::A, rng);
            let message = Bitstring::random(n, rng);
            let transmission = strong_encode(&message, &mut key, Role::A, &self.code).unwrap();
            self.key = Some(key.clone());
            Emission {
                transmission,
                key,
                message,
            }
        }

        fn deliver(&mut self, t: Transmission, rng: &mut RngStream) -> bool {
            let key = self.key.take().unwrap();
            strong_decode(t, &key, &self.code, rng)
                .unwrap()
                .verdict
                .is_accept()
        }
    }

    #[test]
    fn positions_for_pairs() {
        assert_eq!(guessed_positions(&[0, 1], 16), vec![0, 1, 16, 17]);
        assert!(guessed_positions(&[], 8).is_empty());
    }

    #[test]
    fn correct_guesses_under_mm_learn_reliably() {
        let mut rng = RngStream::new(5, 0);
        let mut run = Toy {
            code: MmCodec::new(16).into(),
            key: None,
        };
        let r = guess_and_verify(&mut run, &[0, 1], &GuessSource::Correct, 50, &mut rng);
        assert_eq!(r.accepted(), 50);
        assert_eq!(r.total_learned(), 100);
        assert!(r.generations.iter().all(|g| g.learned_correct == 2));
        assert_eq!(r.cumulative_learned()[9], 20);
    }

    #[test]
    fn diffusive_learns_nothing() {
        let mut rng = RngStream::new(6, 0);
        let a = gen_nonsingular_gf2(16, &mut rng).unwrap();
        let mut run = Toy {
            code: DiffusiveCodec::new(a).unwrap().into(),
            key: None,
        };
        let r = guess_and_verify(&mut run, &[0, 1], &GuessSource::Correct, 50, &mut rng);
        assert_eq!(r.accepted(), 50);
        assert_eq!(r.total_learned(), 0);
    }

    #[test]
    fn no_pairs_is_passive() {
        let mut rng = RngStream::new(7, 0);
        let mut run = Toy {
            code: MmCodec::new(4).into(),
            key: None,
        };
        let r = guess_and_verify(&mut run, &[], &GuessSource::Random, 20, &mut rng);
        assert_eq!(r.accepted(), 20);
        assert!(r.knowledge.entries().is_empty());
    }

    #[test]
    fn random_guesses_confirm_only_on_accept() {
        let mut rng = RngStream::new(8, 0);
        let mut run = Toy {
            code: MmCodec::new(8).into(),
            key: None,
        };
        let r = guess_and_verify(&mut run, &[0, 3], &GuessSource::Random, 400, &mut rng);
        let confirmed = r
            .knowledge
            .entries()
            .iter()
            .filter(|e| matches!(e, KnowledgeEntry::Confirmed { .. }))
            .count();
        assert_eq!(confirmed, 4 * r.accepted());
        assert!(r.accepted() > 0 && r.accepted() < 400);
    }
}
