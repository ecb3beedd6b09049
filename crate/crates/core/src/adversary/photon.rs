//! Attacks on single-photon transmissions, plus suppression and injection.

use super::{AdversaryKnowledge, BasisGuess, InjectPayload, KnowledgeEntry};
use crate::bits::Bitstring;
use crate::protocol::{Payload, Transmission};
use crate::quantum::{encode_bit, measure_basis, rotate90, Basis, FaintPulse, Polarization};
use crate::rng::RngStream;

fn photons(t: &mut Transmission) -> &mut Vec<crate::quantum::Photon> {
    match &mut t.payload {
        Payload::Photons(p) => p,
        Payload::Pulses(_) => panic!("photon attack applied to a faint-pulse transmission"),
    }
}

/// Measure each selected photon in a guessed basis and resend a fresh photon
/// that agrees with the measurement. Returns the forged transmission.
pub fn intercept_resend(
    mut t: Transmission,
    positions: &[usize],
    guess: &BasisGuess,
    knowledge: &mut AdversaryKnowledge,
    rng: &mut RngStream,
) -> Transmission {
    let tx = knowledge.transmission();
    let train = photons(&mut t);
    for &i in positions {
        let basis = match guess {
            BasisGuess::Random => Basis::from_bit(rng.bit()),
            BasisGuess::Fixed(bits) => Basis::from_bit(bits[i]),
        };
        let value = measure_basis(&mut train[i], basis, rng);
        train[i] = encode_bit(value, basis.bit());
        knowledge.push(KnowledgeEntry::Measured {
            transmission: tx,
            position: i,
            basis,
            value,
        });
    }
    t
}

/// Rotate the selected photons by 90°; nothing is measured.
pub fn rotate90_tamper(mut t: Transmission, positions: &[usize]) -> Transmission {
    let train = photons(&mut t);
    for &i in positions {
        train[i] = rotate90(&train[i]);
    }
    t
}

/// Absorb the transmission; the receiver sees nothing.
pub fn suppress(_t: Transmission) -> Option<Transmission> {
    None
}

/// A random payload of the given scheme and length.
pub fn random_payload(photons: bool, len: usize, rng: &mut RngStream) -> Payload {
    let pols = (0..len).map(|_| Polarization::new(Basis::from_bit(rng.bit()), rng.bit()));
    if photons {
        Payload::Photons(pols.map(crate::quantum::Photon::new).collect())
    } else {
        Payload::Pulses(pols.map(|p| Some(FaintPulse::standard(p))).collect())
    }
}

/// Build a forged transmission under `key_id`, shaped like `template`.
pub fn inject(
    template: &Transmission,
    key_id: u32,
    payload: &InjectPayload,
    rng: &mut RngStream,
) -> Transmission {
    let photons = matches!(template.payload, Payload::Photons(_));
    let len = template.payload.len();
    let payload = match payload {
        InjectPayload::Random => random_payload(photons, len, rng),
        InjectPayload::Fixed { values, bases } => {
            let pols = fixed_polarizations(values, bases, len);
            if photons {
                Payload::Photons(pols.map(crate::quantum::Photon::new).collect())
            } else {
                Payload::Pulses(pols.map(|p| Some(FaintPulse::standard(p))).collect())
            }
        }
    };
    Transmission { key_id, payload }
}

fn fixed_polarizations<'a>(
    values: &'a Bitstring,
    bases: &'a Bitstring,
    len: usize,
) -> impl Iterator<Item = Polarization> + 'a {
    assert!(
        values.len() == len && bases.len() == len,
        "injected payload must have {len} positions"
    );
    values
        .iter()
        .zip(bases.iter())
        .map(|(v, b)| Polarization::new(Basis::from_bit(b), v))
}
