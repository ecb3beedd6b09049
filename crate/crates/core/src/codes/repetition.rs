//! Repetition code `M -> MM` and its index-checksum variant `M -> MM S`.

use super::{Codec, DecodeVerdict, RejectReason};
use crate::bits::{Bitstring, ReceivedWord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MmCodec {
    n: usize,
}

impl MmCodec {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

fn plain_bits(received: &ReceivedWord, expected_len: usize) -> Bitstring {
    assert_eq!(
        received.len(),
        expected_len,
        "received word has length {}, expected {expected_len}",
        received.len()
    );
    received
        .to_bits()
        .expect("repetition codes do not handle erasures")
}

impl Codec for MmCodec {
    fn message_len(&self) -> usize {
        self.n
    }

    fn codeword_len(&self) -> usize {
        2 * self.n
    }

    fn encode(&self, message: &Bitstring) -> Bitstring {
        assert_eq!(message.len(), self.n);
        message.concat(message)
    }

    fn decode(&self, received: &ReceivedWord) -> DecodeVerdict {
        let bits = plain_bits(received, 2 * self.n);
        let (left, right) = (bits.slice(0..self.n), bits.slice(self.n..2 * self.n));
        if left == right {
            DecodeVerdict::accept(left)
        } else {
            DecodeVerdict::Reject(RejectReason::Mismatch)
        }
    }

    fn position_functional(&self, pos: usize) -> Option<Bitstring> {
        assert!(pos < 2 * self.n);
        let mut r = Bitstring::zeros(self.n);
        r.set(pos % self.n, true);
        Some(r)
    }
}

/// Checksum width: enough bits to hold the largest index sum `n(n+1)/2`.
pub fn checksum_width(n: usize) -> usize {
    let max = (n * (n + 1) / 2) as u64;
    // ceil(log2(max + 1))
    (64 - max.leading_zeros()) as usize
}

/// Sum of the 1-based positions of set bits, reduced mod 2^width.
pub fn index_checksum(message: &Bitstring, width: usize) -> u64 {
    let sum: u64 = message
        .iter()
        .enumerate()
        .filter(|(_, b)| *b)
        .map(|(i, _)| i as u64 + 1)
        .sum();
    if width >= 64 {
        sum
    } else {
        sum & ((1u64 << width) - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MmChecksumCodec {
    n: usize,
    width: usize,
}

impl MmChecksumCodec {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            width: checksum_width(n),
        }
    }

    pub fn checksum_width(&self) -> usize {
        self.width
    }
}

impl Codec for MmChecksumCodec {
    fn message_len(&self) -> usize {
        self.n
    }

    fn codeword_len(&self) -> usize {
        2 * self.n + self.width
    }

    fn encode(&self, message: &Bitstring) -> Bitstring {
        assert_eq!(message.len(), self.n);
        let sum = Bitstring::from_u64(index_checksum(message, self.width), self.width);
        message.concat(message).concat(&sum)
    }

    fn decode(&self, received: &ReceivedWord) -> DecodeVerdict {
        let n = self.n;
        let bits = plain_bits(received, self.codeword_len());
        let (left, right) = (bits.slice(0..n), bits.slice(n..2 * n));
        if left != right {
            return DecodeVerdict::Reject(RejectReason::Mismatch);
        }
        let sent = bits.slice(2 * n..2 * n + self.width).to_u64();
        if sent != index_checksum(&left, self.width) {
            return DecodeVerdict::Reject(RejectReason::ChecksumFail);
        }
        DecodeVerdict::accept(left)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    fn all_messages(n: usize) -> impl Iterator<Item = Bitstring> {
        (0..1u64 << n).map(move |v| Bitstring::from_u64(v, n))
    }

    #[test]
    fn mm_examples() {
        let c = MmCodec::new(3);
        assert_eq!(c.encode(&bs("101")), bs("101101"));
        assert_eq!(
            c.decode(&bs("101101").into()),
            DecodeVerdict::accept(bs("101"))
        );
        assert_eq!(
            c.decode(&bs("101100").into()),
            DecodeVerdict::Reject(RejectReason::Mismatch)
        );
    }

    #[test]
    #[should_panic]
    fn mm_odd_length_is_a_defect() {
        MmCodec::new(3).decode(&bs("10110").into());
    }

    #[test]
    fn mm_rejects_iff_halves_differ() {
        let c = MmCodec::new(3);
        for w in all_messages(6) {
            let differ = w.slice(0..3) != w.slice(3..6);
            assert_eq!(!c.decode(&(&w).into()).is_accept(), differ, "{w}");
        }
    }

    #[test]
    fn checksum_width_values() {
        assert_eq!(checksum_width(1), 1);
        assert_eq!(checksum_width(3), 3);
        assert_eq!(checksum_width(8), 6);
        assert_eq!(checksum_width(16), 8);
    }

    #[test]
    fn checksum_example() {
        let c = MmChecksumCodec::new(3);
        assert_eq!(c.encode(&bs("101")), bs("101101100"));
    }

    #[test]
    fn round_trips_exhaustive() {
        for n in 1..=10 {
            let mm = MmCodec::new(n);
            let ck = MmChecksumCodec::new(n);
            for m in all_messages(n) {
                assert_eq!(mm.decode(&mm.encode(&m).into()), DecodeVerdict::accept(m.clone()));
                assert_eq!(ck.decode(&ck.encode(&m).into()), DecodeVerdict::accept(m));
            }
        }
    }

    #[test]
    fn paired_flip_caught_by_checksum() {
        let c = MmChecksumCodec::new(3);
        let mut w = c.encode(&bs("101"));
        w.flip(0);
        w.flip(3);
        assert_eq!(
            c.decode(&w.into()),
            DecodeVerdict::Reject(RejectReason::ChecksumFail)
        );
    }

    #[test]
    fn checksum_tamper_detected() {
        let c = MmChecksumCodec::new(4);
        let mut w = c.encode(&bs("0110"));
        w.flip(8);
        assert_eq!(
            c.decode(&w.into()),
            DecodeVerdict::Reject(RejectReason::ChecksumFail)
        );
    }
}
