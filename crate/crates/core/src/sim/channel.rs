use crate::adversary::{
    beamsplit_attack, guessed_positions, inject, intercept_guessed, intercept_resend,
    rotate90_tamper, AdversaryKnowledge, AttackStrategy, BeamSplitStats, GuessObservation,
};
use crate::protocol::{KeyRecord, Scheme, Transmission};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("adversary {strategy} cannot act on a {scheme:?} transmission")]
pub struct SchemeMismatch {
    pub strategy: &'static str,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Default)]
pub struct ChannelOutput {
    /// `None` when the transmission was absorbed.
    pub delivered: Option<Transmission>,
    pub observed: Vec<GuessObservation>,
    pub beamsplit: Option<BeamSplitStats>,
}

/// Pass a transmission through the adversary. `key` is the key it was sent
/// under; only the guess-and-verify attack with correct guesses looks at it.
pub fn transmit(
    t: Transmission,
    strategy: &AttackStrategy,
    key: &KeyRecord,
    message_len: usize,
    knowledge: &mut AdversaryKnowledge,
    rng: &mut RngStream,
) -> Result<ChannelOutput, SchemeMismatch> {
    if let Some(photons) = strategy.requires_photons() {
        if photons != (t.scheme() == Scheme::SinglePhoton) {
            return Err(SchemeMismatch {
                strategy: strategy.name(),
                scheme: t.scheme(),
            });
        }
    }
    let len = t.payload.len();
    let mut out = ChannelOutput::default();
    out.delivered = match strategy {
        AttackStrategy::Passive {} => Some(t),
        AttackStrategy::Suppress {} => None,
        AttackStrategy::InterceptResend {
            positions,
            basis_guess,
        } => Some(intercept_resend(
            t,
            &positions.resolve(len),
            basis_guess,
            knowledge,
            rng,
        )),
        AttackStrategy::Rotate90 { positions } => Some(rotate90_tamper(t, &positions.resolve(len))),
        AttackStrategy::Inject { key_id, payload } => {
            Some(inject(&t, key_id.unwrap_or(t.key_id), payload, rng))
        }
        AttackStrategy::BeamSplit {
            detector,
            ambiguous_policy,
        } => {
            let (forged, stats) = beamsplit_attack(t, *detector, *ambiguous_policy, knowledge, rng);
            out.beamsplit = Some(stats);
            Some(forged)
        }
        AttackStrategy::GuessAndVerify { pairs, guesses, .. } => {
            let mut t = t;
            let positions = guessed_positions(pairs, message_len);
            out.observed = intercept_guessed(&mut t, &positions, guesses, key, knowledge, rng);
            Some(t)
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{BasisGuess, Positions};
    use crate::bits::Bitstring;
    use crate::codes::MmCodec;
    use crate::protocol::{strong_encode, Payload, Role};

    fn sent(seed: u64) -> (KeyRecord, Transmission) {
        let mut rng = RngStream::new(seed, 9);
        let mut key = KeyRecord::random(1, 32, Role::A, &mut rng);
        let m = Bitstring::random(16, &mut rng);
        let t = strong_encode(&m, &mut key, Role::A, &MmCodec::new(16)).unwrap();
        (key, t)
    }

    #[test]
    fn passive_and_suppress() {
        let (key, t) = sent(0);
        let mut k = AdversaryKnowledge::new();
        let mut rng = RngStream::new(0, 0);
        let out = transmit(t.clone(), &AttackStrategy::Passive {}, &key, 16, &mut k, &mut rng).unwrap();
        assert_eq!(out.delivered, Some(t.clone()));
        let out = transmit(t, &AttackStrategy::Suppress {}, &key, 16, &mut k, &mut rng).unwrap();
        assert!(out.delivered.is_none());
    }

    #[test]
    fn intercepted_bases_disagree_half_the_time() {
        let mut rng = RngStream::new(1, 0);
        let strategy = AttackStrategy::InterceptResend {
            positions: Positions::All,
            basis_guess: BasisGuess::Random,
        };
        let (mut disagree, mut total) = (0u64, 0u64);
        for seed in 0..4000 {
            let (key, t) = sent(seed);
            let mut k = AdversaryKnowledge::new();
            let out = transmit(t, &strategy, &key, 16, &mut k, &mut rng).unwrap();
            let Some(Transmission {
                payload: Payload::Photons(ps),
                ..
            }) = out.delivered
            else {
                panic!()
            };
            for (p, kb) in ps.iter().zip(key.basis.iter()) {
                total += 1;
                disagree += u64::from(p.polarization().unwrap().basis.bit() != kb);
            }
        }
        let rate = disagree as f64 / total as f64;
        assert!((rate - 0.5).abs() < 0.005, "{rate}");
    }

    #[test]
    fn beam_split_on_photons_is_refused() {
        let (key, t) = sent(0);
        let s: AttackStrategy = serde_json::from_str(
            r#"{"type":"beam_split","detector":{"efficiency":0.3},"ambiguous_policy":"suppress_pulse"}"#,
        )
        .unwrap();
        let mut rng = RngStream::new(0, 0);
        let err = transmit(t, &s, &key, 16, &mut AdversaryKnowledge::new(), &mut rng).unwrap_err();
        assert_eq!(err.scheme, Scheme::SinglePhoton);
    }
}
