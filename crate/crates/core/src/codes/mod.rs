//! Error-detecting and erasure-correcting codes with a common
//! encode / decode-with-verdict contract.

mod conv;
mod diffusive;
mod gf2;
mod repetition;

pub use conv::{ConvCodec, CONSTRAINT_LENGTH, GENERATORS, MEMORY};
pub use diffusive::{
    diffusion_check, diffusion_exhaustive, gen_nonsingular_gf2, single_flip_detectable,
    DiffusiveCodec, GENERATION_ATTEMPTS,
};
pub use gf2::{determined_by_rows, determined_values, Gf2Matrix};
pub use repetition::{checksum_width, index_checksum, MmChecksumCodec, MmCodec};

use serde::{Deserialize, Serialize};

use crate::bits::{Bitstring, ReceivedWord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Mismatch,
    ChecksumFail,
    ErrorThresholdExceeded,
    TooManyErasures,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeVerdict {
    Accept {
        message: Bitstring,
        corrected_errors: usize,
        erasures: usize,
    },
    Reject(RejectReason),
}

impl DecodeVerdict {
    pub fn accept(message: Bitstring) -> Self {
        DecodeVerdict::Accept {
            message,
            corrected_errors: 0,
            erasures: 0,
        }
    }

    pub fn is_accept(&self) -> bool {
        matches!(self, DecodeVerdict::Accept { .. })
    }

    pub fn message(&self) -> Option<&Bitstring> {
        match self {
            DecodeVerdict::Accept { message, .. } => Some(message),
            DecodeVerdict::Reject(_) => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CodeError {
    #[error("matrix is {rows}x{cols}, expected {expected}x{expected}")]
    Dimension {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("matrix is singular over GF(2)")]
    Singular,
    #[error("no admissible matrix found after {0} attempts")]
    GenerationFailed(usize),
    #[error("malformed matrix text: {0}")]
    Parse(String),
}

pub trait Codec {
    fn message_len(&self) -> usize;

    fn codeword_len(&self) -> usize;

    fn encode(&self, message: &Bitstring) -> Bitstring;

    fn decode(&self, received: &ReceivedWord) -> DecodeVerdict;

    /// For codes linear in the message: the row vector `r` with
    /// `encode(m)[pos] = r · m`. `None` for non-linear codes.
    fn position_functional(&self, _pos: usize) -> Option<Bitstring> {
        None
    }
}

/// The code families the protocol can run with.
#[derive(Debug, Clone)]
pub enum CodeFamily {
    Mm(MmCodec),
    MmChecksum(MmChecksumCodec),
    Diffusive(DiffusiveCodec),
    Conv(ConvCodec),
}

impl CodeFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CodeFamily::Mm(_) => "mm",
            CodeFamily::MmChecksum(_) => "mm_checksum",
            CodeFamily::Diffusive(_) => "diffusive",
            CodeFamily::Conv(_) => "conv",
        }
    }

    fn inner(&self) -> &dyn Codec {
        match self {
            CodeFamily::Mm(c) => c,
            CodeFamily::MmChecksum(c) => c,
            CodeFamily::Diffusive(c) => c,
            CodeFamily::Conv(c) => c,
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, CodeFamily::MmChecksum(_))
    }
}

impl Codec for CodeFamily {
    fn message_len(&self) -> usize {
        self.inner().message_len()
    }

    fn codeword_len(&self) -> usize {
        self.inner().codeword_len()
    }

    fn encode(&self, message: &Bitstring) -> Bitstring {
        self.inner().encode(message)
    }

    fn decode(&self, received: &ReceivedWord) -> DecodeVerdict {
        self.inner().decode(received)
    }

    fn position_functional(&self, pos: usize) -> Option<Bitstring> {
        self.inner().position_functional(pos)
    }
}

impl From<MmCodec> for CodeFamily {
    fn from(c: MmCodec) -> Self {
        CodeFamily::Mm(c)
    }
}

impl From<MmChecksumCodec> for CodeFamily {
    fn from(c: MmChecksumCodec) -> Self {
        CodeFamily::MmChecksum(c)
    }
}

impl From<DiffusiveCodec> for CodeFamily {
    fn from(c: DiffusiveCodec) -> Self {
        CodeFamily::Diffusive(c)
    }
}

impl From<ConvCodec> for CodeFamily {
    fn from(c: ConvCodec) -> Self {
        CodeFamily::Conv(c)
    }
}
