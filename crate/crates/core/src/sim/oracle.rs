//! Detection probability for exactly `k` intercepted photons: exact
//! enumeration and Monte Carlo.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{binomial_se, wilson, z95};
use crate::adversary::{intercept_resend, AdversaryKnowledge, BasisGuess};
use crate::bits::{Bitstring, ReceivedWord};
use crate::codes::{CodeFamily, Codec};
use crate::protocol::{strong_decode, strong_encode, KeyRecord, Role};
use crate::rng::RngStream;

pub type Rational = Ratio<i128>;

/// Largest `k` the exact oracle will enumerate.
pub const ORACLE_MAX_K: usize = 12;
/// Largest message length over which a non-linear code is averaged.
const ORACLE_MAX_AVERAGED_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Positions `i` and `n + i` together.
    Paired,
    /// At most one position from each pair.
    Unpaired,
}

impl std::str::FromStr for Pairing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paired" => Ok(Pairing::Paired),
            "unpaired" => Ok(Pairing::Unpaired),
            _ => Err(format!("unknown pairing `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("k = {k} exceeds what a codeword of {n}-bit messages allows for {pairing:?} positions")]
    TooMany { k: usize, n: usize, pairing: Pairing },
    #[error("paired interception needs an even k, got {0}")]
    OddPaired(usize),
    #[error("k = {0} is beyond the enumeration budget ({ORACLE_MAX_K})")]
    Budget(usize),
    #[error("exact oracle needs a single-photon code, got {0}")]
    UnsupportedCode(&'static str),
}

/// The fixed positions intercepted for a given `k`: message positions
/// `0..k` when unpaired, or pairs `(i, n+i)` for `i < k/2` when paired.
pub fn canonical_positions(k: usize, pairing: Pairing, n: usize) -> Result<Vec<usize>, OracleError> {
    match pairing {
        Pairing::Unpaired if k <= n => Ok((0..k).collect()),
        Pairing::Paired if k % 2 == 1 => Err(OracleError::OddPaired(k)),
        Pairing::Paired if k / 2 <= n => {
            let mut p: Vec<usize> = (0..k / 2).flat_map(|i| [i, n + i]).collect();
            p.sort_unstable();
            Ok(p)
        }
        _ => Err(OracleError::TooMany { k, n, pairing }),
    }
}

/// Probability that one intercepted photon reaches the receiver flipped,
/// by enumerating guess, adversary outcome and receiver outcome.
pub fn per_photon_error() -> Rational {
    let half = Rational::new(1, 2);
    let mut p_error = Rational::from_integer(0);
    for guess_right in [true, false] {
        // adversary's reading of a photon whose true value is 0
        let reads: Vec<(bool, Rational)> = if guess_right {
            vec![(false, Rational::from_integer(1))]
        } else {
            vec![(false, half), (true, half)]
        };
        for (read, p_read) in reads {
            // resent in the guessed basis; receiver measures in the true basis
            let received: Vec<(bool, Rational)> = if guess_right {
                vec![(read, Rational::from_integer(1))]
            } else {
                vec![(false, half), (true, half)]
            };
            for (r, p_r) in received {
                if r {
                    p_error += half * p_read * p_r;
                }
            }
        }
    }
    p_error
}

/// Exact probability that interception of `k` photons is detected.
pub fn exact_oracle(k: usize, pairing: Pairing, code: &CodeFamily) -> Result<Rational, OracleError> {
    Ok(Rational::from_integer(1) - exact_escape(k, pairing, code)?)
}

/// Exact probability that the receiver accepts after `k` interceptions.
pub fn exact_escape(k: usize, pairing: Pairing, code: &CodeFamily) -> Result<Rational, OracleError> {
    if k > ORACLE_MAX_K {
        return Err(OracleError::Budget(k));
    }
    if matches!(code, CodeFamily::Conv(_)) {
        return Err(OracleError::UnsupportedCode(code.name()));
    }
    let n = code.message_len();
    let positions = canonical_positions(k, pairing, n)?;
    let messages: Vec<Bitstring> = if code.is_linear() {
        vec![Bitstring::zeros(n)]
    } else {
        if n > ORACLE_MAX_AVERAGED_N {
            return Err(OracleError::Budget(k));
        }
        (0..1u64 << n).map(|v| Bitstring::from_u64(v, n)).collect()
    };
    let codewords: Vec<Bitstring> = messages.iter().map(|m| code.encode(m)).collect();
    let pe = per_photon_error();
    let pok = Rational::from_integer(1) - pe;
    let mut escape = Rational::from_integer(0);
    for pattern in 0..1u32 << k {
        let flips = pattern.count_ones() as i32;
        let p = pe.pow(flips) * pok.pow(k as i32 - flips);
        let accepted = codewords
            .iter()
            .filter(|c| {
                let mut w = (*c).clone();
                for (j, &pos) in positions.iter().enumerate() {
                    if pattern >> j & 1 == 1 {
                        w.flip(pos);
                    }
                }
                code.decode(&ReceivedWord::from(&w)).is_accept()
            })
            .count();
        escape += p * Rational::new(accepted as i128, codewords.len() as i128);
    }
    Ok(escape)
}

/// A binomial estimate with its Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson(successes, trials, z95());
        Self {
            successes,
            trials,
            estimate: successes as f64 / trials.max(1) as f64,
            ci_low,
            ci_high,
        }
    }

    /// Standard error at the estimate.
    pub fn se(&self) -> f64 {
        binomial_se(self.estimate, self.trials)
    }

    /// Whether `p` lies within `z` standard errors, using the standard error
    /// at `p` itself so exact 0 and 1 are handled.
    pub fn agrees_with(&self, p: f64, z: f64) -> bool {
        let se = binomial_se(p, self.trials);
        (self.estimate - p).abs() <= z * se + f64::EPSILON
    }
}

/// Monte Carlo detection probability with exactly `k` photons intercepted
/// at the canonical positions, random bases, uniform messages.
pub fn estimate_detection(
    k: usize,
    pairing: Pairing,
    code: &CodeFamily,
    trials: u64,
    seed: u64,
) -> Result<Estimate, OracleError> {
    if matches!(code, CodeFamily::Conv(_)) {
        return Err(OracleError::UnsupportedCode(code.name()));
    }
    let n = code.message_len();
    let positions = canonical_positions(k, pairing, n)?;
    let root = RngStream::new(seed, 0);
    let detected: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = root.derive(t);
            let mut key = KeyRecord::random(1, code.codeword_len(), Role::A, &mut rng);
            let m = Bitstring::random(n, &mut rng);
            let sent = strong_encode(&m, &mut key, Role::A, code).expect("fresh key");
            let mut k = AdversaryKnowledge::new();
            let forged = intercept_resend(sent, &positions, &BasisGuess::Random, &mut k, &mut rng);
            let r = strong_decode(forged, &key, code, &mut rng).expect("usable key");
            u64::from(!r.verdict.is_accept())
        })
        .sum();
    Ok(Estimate::new(detected, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{MmChecksumCodec, MmCodec};

    fn r(a: i128, b: i128) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn per_photon_error_is_a_quarter() {
        assert_eq!(per_photon_error(), r(1, 4));
    }

    #[test]
    fn reference_escapes() {
        let mm: CodeFamily = MmCodec::new(8).into();
        assert_eq!(exact_escape(0, Pairing::Unpaired, &mm).unwrap(), r(1, 1));
        assert_eq!(exact_escape(1, Pairing::Unpaired, &mm).unwrap(), r(3, 4));
        assert_eq!(exact_escape(2, Pairing::Paired, &mm).unwrap(), r(5, 8));
        for k in 0..=8 {
            assert_eq!(
                exact_escape(k, Pairing::Unpaired, &mm).unwrap(),
                r(3, 4).pow(k as i32)
            );
        }
        for k in (0..=12).step_by(2) {
            assert_eq!(
                exact_escape(k, Pairing::Paired, &mm).unwrap(),
                r(5, 8).pow(k as i32 / 2)
            );
        }
    }

    #[test]
    fn checksum_catches_every_paired_flip_pattern_alone() {
        // one pair: only the error-free branch escapes
        let c: CodeFamily = MmChecksumCodec::new(6).into();
        assert_eq!(exact_escape(2, Pairing::Paired, &c).unwrap(), r(9, 16));
        assert_eq!(exact_escape(3, Pairing::Unpaired, &c).unwrap(), r(27, 64));
    }

    #[test]
    fn detection_monotone_in_k() {
        for code in [
            CodeFamily::from(MmCodec::new(8)),
            CodeFamily::from(MmChecksumCodec::new(8)),
        ] {
            for pairing in [Pairing::Unpaired, Pairing::Paired] {
                let ks: Vec<usize> = (0..=8).filter(|k| pairing == Pairing::Unpaired || k % 2 == 0).collect();
                let d: Vec<Rational> = ks
                    .iter()
                    .map(|&k| exact_oracle(k, pairing, &code).unwrap())
                    .collect();
                assert!(d.windows(2).all(|w| w[0] <= w[1]), "{pairing:?} {d:?}");
            }
        }
    }

    #[test]
    fn guards() {
        let mm: CodeFamily = MmCodec::new(4).into();
        assert_eq!(exact_oracle(13, Pairing::Unpaired, &mm), Err(OracleError::Budget(13)));
        assert_eq!(exact_oracle(3, Pairing::Paired, &mm), Err(OracleError::OddPaired(3)));
        assert!(matches!(
            exact_oracle(5, Pairing::Unpaired, &mm),
            Err(OracleError::TooMany { .. })
        ));
        assert!(estimate_detection(10, Pairing::Paired, &mm, 10, 0).is_err());
    }

    #[test]
    fn zero_interceptions_never_detected() {
        let mm: CodeFamily = MmCodec::new(4).into();
        let e = estimate_detection(0, Pairing::Unpaired, &mm, 500, 1).unwrap();
        assert_eq!(e.successes, 0);
    }
}
