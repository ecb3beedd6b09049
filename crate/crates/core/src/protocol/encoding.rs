use statrs::distribution::{ContinuousCDF, Normal};

use super::{Evidence, KeyRecord, KeyStatus, Payload, ProtocolError, Role, Transmission, Verdict};
use crate::bits::{Bitstring, ReceivedWord, Symbol};
use crate::codes::{Codec, ConvCodec, DecodeVerdict};
use crate::quantum::{
    encode_bit, measure_basis, pulse_receive, Basis, DetectorModel, FaintPulse, Polarization,
    Reception,
};
use crate::rng::RngStream;

/// Significance level of the missing-pulse test.
pub const DEFAULT_MISSING_ALPHA: f64 = 1e-3;

/// The receiver's view of one transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeReport {
    pub verdict: Verdict,
    /// Received codeword after removing the pad.
    pub word: ReceivedWord,
    /// Pulses on which no detector fired.
    pub missing: usize,
    /// Pulses on which both detectors fired.
    pub conflicts: usize,
}

fn masked_codeword(message: &Bitstring, key: &KeyRecord, code: &dyn Codec) -> Bitstring {
    let codeword = code.encode(message);
    assert_eq!(
        codeword.len(),
        key.len(),
        "codeword length {} does not match key length {}",
        codeword.len(),
        key.len()
    );
    &key.pad ^ &codeword
}

fn claim(key: &mut KeyRecord, sender: Role) -> Result<(), ProtocolError> {
    if !key.available_to(sender) {
        return Err(ProtocolError::KeyNotAvailable(key.id));
    }
    key.status = KeyStatus::Active;
    Ok(())
}

/// Photon `i` carries `J_i xor E(M)_i` in the basis selected by `K_i`.
pub fn strong_encode(
    message: &Bitstring,
    key: &mut KeyRecord,
    sender: Role,
    code: &dyn Codec,
) -> Result<Transmission, ProtocolError> {
    let masked = masked_codeword(message, key, code);
    claim(key, sender)?;
    let photons = masked
        .iter()
        .zip(key.basis.iter())
        .map(|(m, k)| encode_bit(m, k))
        .collect();
    Ok(Transmission {
        key_id: key.id,
        payload: Payload::Photons(photons),
    })
}

fn check_receivable(t: &Transmission, key: &KeyRecord) -> Result<(), ProtocolError> {
    assert_eq!(t.key_id, key.id, "transmission header names another key");
    if !key.status.usable() {
        return Err(ProtocolError::StaleKey(key.id));
    }
    assert_eq!(t.payload.len(), key.len(), "payload length mismatch");
    Ok(())
}

fn verdict_from(decoded: DecodeVerdict) -> Verdict {
    match decoded {
        DecodeVerdict::Accept { message, .. } => Verdict::AcceptMessage(message),
        DecodeVerdict::Reject(reason) => Verdict::RejectEavesdrop(Evidence::Code(reason)),
    }
}

/// Read every photon in its key basis, strip the pad, and run the code's check.
pub fn strong_decode(
    t: Transmission,
    key: &KeyRecord,
    code: &dyn Codec,
    rng: &mut RngStream,
) -> Result<DecodeReport, ProtocolError> {
    check_receivable(&t, key)?;
    let Payload::Photons(mut photons) = t.payload else {
        panic!("strong_decode needs a photon payload");
    };
    let word: Bitstring = photons
        .iter_mut()
        .zip(key.basis.iter().zip(key.pad.iter()))
        .map(|(p, (k, j))| measure_basis(p, Basis::from_bit(k), rng) ^ j)
        .collect();
    let word = ReceivedWord::from(&word);
    Ok(DecodeReport {
        verdict: verdict_from(code.decode(&word)),
        word,
        missing: 0,
        conflicts: 0,
    })
}

/// As [`strong_encode`], with standard faint pulses in place of photons.
pub fn faint_encode(
    message: &Bitstring,
    key: &mut KeyRecord,
    sender: Role,
    code: &ConvCodec,
) -> Result<Transmission, ProtocolError> {
    let masked = masked_codeword(message, key, code);
    claim(key, sender)?;
    let pulses = masked
        .iter()
        .zip(key.basis.iter())
        .map(|(m, k)| Some(FaintPulse::standard(Polarization::new(Basis::from_bit(k), m))))
        .collect();
    Ok(Transmission {
        key_id: key.id,
        payload: Payload::Pulses(pulses),
    })
}

/// Receive faint pulses: test the number of undetected pulses first, then
/// decode with conflicts counted as errors and treated as erasures.
pub fn faint_decode(
    t: Transmission,
    key: &KeyRecord,
    code: &ConvCodec,
    detector: DetectorModel,
    alpha: f64,
    rng: &mut RngStream,
) -> Result<DecodeReport, ProtocolError> {
    check_receivable(&t, key)?;
    let Payload::Pulses(pulses) = t.payload else {
        panic!("faint_decode needs a pulse payload");
    };
    if pulses.iter().all(Option::is_none) {
        return Ok(DecodeReport {
            verdict: Verdict::MissingTransmission,
            word: ReceivedWord::new(vec![Symbol::Erased; key.len()]),
            missing: key.len(),
            conflicts: 0,
        });
    }
    let (mut missing, mut conflicts) = (0, 0);
    let word: ReceivedWord = pulses
        .into_iter()
        .zip(key.basis.iter().zip(key.pad.iter()))
        .map(|(slot, (k, j))| {
            let reception = match slot {
                Some(pulse) => pulse_receive(pulse, Basis::from_bit(k), detector, rng),
                None => Reception::Erasure,
            };
            match reception {
                Reception::Bit(v) => Symbol::from(v ^ j),
                Reception::Erasure => {
                    missing += 1;
                    Symbol::Erased
                }
                Reception::Conflict => {
                    conflicts += 1;
                    Symbol::Erased
                }
            }
        })
        .collect();
    let verdict = if missing_pulse_test(missing, word.len(), alpha) == MissingPulseTest::Suspicious {
        Verdict::RejectEavesdrop(Evidence::MissingPulses)
    } else {
        verdict_from(code.decode_with_penalty(&word, conflicts))
    };
    Ok(DecodeReport {
        verdict,
        word,
        missing,
        conflicts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingPulseTest {
    Pass,
    Suspicious,
}

/// One-sided test of `missing ~ Binomial(total, e^-1)` using the normal
/// approximation with continuity correction.
pub fn missing_pulse_test(missing: usize, total: usize, alpha: f64) -> MissingPulseTest {
    assert!(missing <= total, "more missing pulses than pulses");
    if total == 0 {
        return MissingPulseTest::Pass;
    }
    let p = (-1.0f64).exp();
    let mean = total as f64 * p;
    let sd = (total as f64 * p * (1.0 - p)).sqrt();
    let z = (missing as f64 - 0.5 - mean) / sd;
    let tail = Normal::standard().sf(z);
    if tail < alpha {
        MissingPulseTest::Suspicious
    } else {
        MissingPulseTest::Pass
    }
}
