//! Rate-1/4 erasure-tolerant convolutional code.
//!
//! A rate-1/2, constraint-length-7 feedforward encoder (generators 133 and
//! 171 octal) with a zero tail; every coded bit is sent twice, so each trellis
//! step emits `g1 g1 g2 g2`. Decoding is hard-decision Viterbi in which an
//! erased symbol costs nothing on either branch.

use super::{Codec, DecodeVerdict, RejectReason};
use crate::bits::{Bitstring, ReceivedWord, Symbol};

pub const CONSTRAINT_LENGTH: usize = 7;
/// Encoder memory ν: the number of zero tail bits.
pub const MEMORY: usize = CONSTRAINT_LENGTH - 1;
pub const GENERATORS: [u32; 2] = [0o133, 0o171];

const STATES: usize = 1 << MEMORY;
const SYMBOLS_PER_STEP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvCodec {
    n: usize,
    threshold: usize,
}

/// Coded outputs for input `bit` entering from `state` (the last six inputs,
/// newest in bit 5). Returns the two generator outputs and the next state.
#[inline]
fn step(state: usize, bit: bool) -> ([bool; 2], usize) {
    let reg = ((bit as u32) << MEMORY) | state as u32;
    let out = GENERATORS.map(|g| (reg & g).count_ones() % 2 == 1);
    (out, (reg >> 1) as usize)
}

impl ConvCodec {
    /// A codec for `n`-bit messages that rejects decodes with more than
    /// `threshold` disagreements.
    pub fn new(n: usize, threshold: usize) -> Self {
        Self { n, threshold }
    }

    /// Threshold ⌈0.005·L⌉ for codeword length L.
    pub fn with_default_threshold(n: usize) -> Self {
        let len = SYMBOLS_PER_STEP * (n + MEMORY);
        Self::new(n, (len * 5).div_ceil(1000))
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    /// Decode, counting `extra_errors` (e.g. receiver conflicts) against the threshold.
    pub fn decode_with_penalty(&self, received: &ReceivedWord, extra_errors: usize) -> DecodeVerdict {
        let len = received.len();
        assert!(
            len % SYMBOLS_PER_STEP == 0,
            "received length {len} is not a multiple of {SYMBOLS_PER_STEP}"
        );
        assert_eq!(len, self.codeword_len(), "received length mismatch");
        let erasures = received.erasures();
        if erasures * 10 > len * 9 {
            return DecodeVerdict::Reject(RejectReason::TooManyErasures);
        }
        let message = self.viterbi(received.symbols());
        let reencoded = self.encode(&message);
        let disagreements = received
            .symbols()
            .iter()
            .zip(reencoded.iter())
            .filter(|(s, b)| s.bit().is_some_and(|v| v != *b))
            .count();
        let errors = disagreements + extra_errors;
        if errors > self.threshold {
            DecodeVerdict::Reject(RejectReason::ErrorThresholdExceeded)
        } else {
            DecodeVerdict::Accept {
                message,
                corrected_errors: errors,
                erasures,
            }
        }
    }

    fn viterbi(&self, symbols: &[Symbol]) -> Bitstring {
        const INF: u32 = u32::MAX / 2;
        let steps = self.n + MEMORY;
        let mut metric = [INF; STATES];
        metric[0] = 0;
        // bit s of decisions[t]: which of the two predecessors won for state s
        let mut decisions = vec![0u64; steps];

        for (t, decision) in decisions.iter_mut().enumerate() {
            let rx = &symbols[SYMBOLS_PER_STEP * t..SYMBOLS_PER_STEP * (t + 1)];
            let mut next = [INF; STATES];
            let tail = t >= self.n;
            for (ns, slot) in next.iter_mut().enumerate() {
                let bit = ns >> (MEMORY - 1) == 1;
                if tail && bit {
                    continue;
                }
                for choice in 0..2usize {
                    let prev = ((ns << 1) & (STATES - 1)) | choice;
                    if metric[prev] >= INF {
                        continue;
                    }
                    let (out, to) = step(prev, bit);
                    debug_assert_eq!(to, ns);
                    let expected = [out[0], out[0], out[1], out[1]];
                    let cost = rx
                        .iter()
                        .zip(expected)
                        .filter(|(s, e)| s.bit().is_some_and(|v| v != *e))
                        .count() as u32;
                    let m = metric[prev] + cost;
                    // strict comparison keeps the lower predecessor on ties
                    if m < *slot {
                        *slot = m;
                        if choice == 1 {
                            *decision |= 1 << ns;
                        } else {
                            *decision &= !(1 << ns);
                        }
                    }
                }
            }
            metric = next;
        }

        let mut bits = vec![false; steps];
        let mut state = 0usize;
        for t in (0..steps).rev() {
            bits[t] = state >> (MEMORY - 1) == 1;
            let choice = ((decisions[t] >> state) & 1) as usize;
            state = ((state << 1) & (STATES - 1)) | choice;
        }
        bits.truncate(self.n);
        Bitstring::new(bits)
    }
}

impl Codec for ConvCodec {
    fn message_len(&self) -> usize {
        self.n
    }

    fn codeword_len(&self) -> usize {
        SYMBOLS_PER_STEP * (self.n + MEMORY)
    }

    fn encode(&self, message: &Bitstring) -> Bitstring {
        assert_eq!(message.len(), self.n);
        let mut out = Vec::with_capacity(self.codeword_len());
        let mut state = 0;
        for bit in message.iter().chain(std::iter::repeat(false).take(MEMORY)) {
            let (o, next) = step(state, bit);
            out.extend_from_slice(&[o[0], o[0], o[1], o[1]]);
            state = next;
        }
        Bitstring::new(out)
    }

    fn decode(&self, received: &ReceivedWord) -> DecodeVerdict {
        self.decode_with_penalty(received, 0)
    }
}
