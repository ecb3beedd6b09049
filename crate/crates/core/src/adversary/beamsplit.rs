//! Four-way beam-splitting attack on faint pulses.

use serde::{Deserialize, Serialize};

use super::{AdversaryKnowledge, AmbiguousPolicy, KnowledgeEntry};
use crate::protocol::{Payload, Transmission};
use crate::quantum::{
    four_way_fractions, pulse_detect_four_way, DetectorModel, FaintPulse, FourWayCounts,
    Polarization,
};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseView {
    Unambiguous(Polarization),
    Ambiguous(FourWayCounts),
}

pub fn classify_pulse(counts: FourWayCounts) -> PulseView {
    match counts.unambiguous() {
        Some(p) => PulseView::Unambiguous(p),
        None => PulseView::Ambiguous(counts),
    }
}

/// Maximum-likelihood canonical polarization given four-way counts from a
/// pulse of effective mean `mu`. Ties are broken uniformly at random.
pub fn ml_polarization(counts: FourWayCounts, mu: f64, rng: &mut RngStream) -> Polarization {
    let scores = Polarization::ALL.map(|h| log_likelihood(counts, h, mu));
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<Polarization> = Polarization::ALL
        .into_iter()
        .zip(scores)
        .filter(|&(_, s)| s == best)
        .map(|(p, _)| p)
        .collect();
    tied[rng.below(tied.len())]
}

/// Poisson log-likelihood up to terms that do not depend on the hypothesis.
fn log_likelihood(counts: FourWayCounts, h: Polarization, mu: f64) -> f64 {
    four_way_fractions(h.angle())
        .into_iter()
        .zip(counts.0)
        .map(|(f, c)| {
            let lambda = mu * f;
            if lambda == 0.0 {
                if c == 0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                c as f64 * lambda.ln() - lambda
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamSplitStats {
    pub pulses: u64,
    pub unambiguous: u64,
    pub dark: u64,
    pub resent_guess: u64,
    pub suppressed: u64,
}

/// Split every pulse four ways with the adversary's detector, replay
/// identified pulses exactly and treat the rest per `policy`.
pub fn beamsplit_attack(
    mut t: Transmission,
    detector: DetectorModel,
    policy: AmbiguousPolicy,
    knowledge: &mut AdversaryKnowledge,
    rng: &mut RngStream,
) -> (Transmission, BeamSplitStats) {
    let Payload::Pulses(slots) = &mut t.payload else {
        panic!("beam-split attack applied to a single-photon transmission");
    };
    let tx = knowledge.transmission();
    let mut stats = BeamSplitStats::default();
    for (i, slot) in slots.iter_mut().enumerate() {
        let Some(pulse) = slot.take() else { continue };
        stats.pulses += 1;
        let mean = pulse.mean_detected();
        let mu = pulse.effective_mean(detector);
        let counts = pulse_detect_four_way(pulse, detector, rng);
        *slot = match classify_pulse(counts) {
            PulseView::Unambiguous(p) => {
                stats.unambiguous += 1;
                knowledge.push(KnowledgeEntry::Unambiguous {
                    transmission: tx,
                    position: i,
                    polarization: p,
                });
                Some(FaintPulse::new(p, mean))
            }
            PulseView::Ambiguous(c) => {
                if c.total() == 0 {
                    stats.dark += 1;
                }
                match policy {
                    AmbiguousPolicy::SuppressPulse => {
                        stats.suppressed += 1;
                        None
                    }
                    AmbiguousPolicy::ResendBestGuess => {
                        stats.resent_guess += 1;
                        Some(FaintPulse::new(ml_polarization(c, mu, rng), mean))
                    }
                }
            }
        };
    }
    (t, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Basis;

    fn pol(a: f64) -> Polarization {
        Polarization::from_angle(a).unwrap()
    }

    #[test]
    fn ml_prefers_beam_with_most_light() {
        let mut rng = RngStream::new(0, 0);
        let c = FourWayCounts([3, 1, 0, 1]);
        assert_eq!(ml_polarization(c, 1.0, &mut rng), pol(0.0));
        let c = FourWayCounts([0, 1, 2, 1]);
        assert_eq!(ml_polarization(c, 1.0, &mut rng), pol(90.0));
    }

    #[test]
    fn ml_excludes_impossible_hypotheses() {
        let mut rng = RngStream::new(0, 0);
        // light on both 0° and 90° rules out the rectilinear hypotheses
        for _ in 0..50 {
            let p = ml_polarization(FourWayCounts([1, 0, 1, 0]), 1.0, &mut rng);
            assert_eq!(p.basis, Basis::Diagonal);
        }
        for _ in 0..50 {
            let p = ml_polarization(FourWayCounts([1, 2, 0, 0]), 1.0, &mut rng);
            assert_eq!(p, pol(45.0));
        }
    }

    #[test]
    fn dark_ties_are_fair() {
        let mut rng = RngStream::new(1, 0);
        let mut hits = [0u32; 4];
        for _ in 0..4000 {
            let p = ml_polarization(FourWayCounts::default(), 1.0, &mut rng);
            hits[Polarization::ALL.iter().position(|q| *q == p).unwrap()] += 1;
        }
        assert!(hits.iter().all(|&h| (850..1150).contains(&h)), "{hits:?}");
    }

    #[test]
    fn unambiguous_replay_is_exact() {
        let mut rng = RngStream::new(2, 0);
        let p = Polarization::new(Basis::Diagonal, true);
        let t = Transmission {
            key_id: 1,
            payload: Payload::Pulses(vec![Some(FaintPulse::standard(p)); 2000]),
        };
        let mut k = AdversaryKnowledge::new();
        let (forged, stats) = beamsplit_attack(
            t,
            DetectorModel::perfect(),
            AmbiguousPolicy::SuppressPulse,
            &mut k,
            &mut rng,
        );
        assert_eq!(stats.pulses, 2000);
        assert_eq!(stats.unambiguous + stats.suppressed, 2000);
        assert_eq!(k.entries().len() as u64, stats.unambiguous);
        let Payload::Pulses(slots) = forged.payload else { panic!() };
        for s in slots.into_iter().flatten() {
            assert_eq!(s.polarization, p);
        }
        for e in k.entries() {
            assert!(matches!(e, KnowledgeEntry::Unambiguous { polarization, .. } if *polarization == p));
        }
    }

    #[test]
    fn missing_slots_pass_through() {
        let mut rng = RngStream::new(3, 0);
        let t = Transmission {
            key_id: 1,
            payload: Payload::Pulses(vec![None; 5]),
        };
        let mut k = AdversaryKnowledge::new();
        let (f, stats) = beamsplit_attack(
            t.clone(),
            DetectorModel::reference(),
            AmbiguousPolicy::ResendBestGuess,
            &mut k,
            &mut rng,
        );
        assert_eq!(f, t);
        assert_eq!(stats.pulses, 0);
        assert!(k.entries().is_empty());
    }
}
