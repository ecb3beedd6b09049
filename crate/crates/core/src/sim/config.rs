use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversary::AttackStrategy;
use crate::bits::Bitstring;
use crate::codes::{
    gen_nonsingular_gf2, CodeError, CodeFamily, Codec, ConvCodec, DiffusiveCodec, Gf2Matrix,
    MmChecksumCodec, MmCodec,
};
use crate::protocol::{KeyDescriptor, Scheme};
use crate::quantum::DetectorModel;
use crate::rng::RngStream;

/// Stream id reserved for matrix generation from a seed.
const MATRIX_STREAM: u64 = 0x6d61_7472_6978;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixSource {
    Seed(u64),
    /// Hex text as written by `Gf2Matrix::to_hex_text`.
    Pinned(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodeSpec {
    Mm {},
    MmChecksum {},
    Diffusive { matrix: MatrixSource },
    Conv { threshold: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageModel {
    UniformRandom,
    Fixed(Bitstring),
}

/// A Monte Carlo experiment. Every field must be present in the JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scheme: Scheme,
    pub code: CodeSpec,
    pub n: usize,
    pub adversary: AttackStrategy,
    pub trials: u64,
    pub master_seed: u64,
    pub key_pool: Vec<KeyDescriptor>,
    pub message_model: MessageModel,
    pub detector: DetectorModel,
    pub messages_per_trial: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Code(#[from] CodeError),
}

impl ScenarioConfig {
    /// Strict parse: unknown keys anywhere are reported by name.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| match unknown_field(&e.to_string()) {
            Some(f) => ConfigError::UnknownField(f),
            None => ConfigError::Json(e),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical (compact) serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.key_pool.is_empty() {
            return bad("key_pool is empty".into());
        }
        let mut ids: Vec<u32> = self.key_pool.iter().map(|d| d.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate key id in key_pool".into());
        }
        if !(self.detector.efficiency > 0.0 && self.detector.efficiency <= 1.0) {
            return bad(format!("detector efficiency {} outside (0, 1]", self.detector.efficiency));
        }
        match (self.scheme, &self.code) {
            (Scheme::FaintPulse, CodeSpec::Conv { .. }) => {}
            (Scheme::FaintPulse, _) => return bad("faint_pulse scheme needs the conv code".into()),
            (Scheme::SinglePhoton, CodeSpec::Conv { .. }) => {
                return bad("conv code is for the faint_pulse scheme".into())
            }
            _ => {}
        }
        if let MessageModel::Fixed(m) = &self.message_model {
            if m.len() != self.n {
                return bad(format!("fixed message has {} bits, n is {}", m.len(), self.n));
            }
        }
        if let Some(photons) = self.adversary.requires_photons() {
            if photons != (self.scheme == Scheme::SinglePhoton) {
                return bad(format!(
                    "adversary {} does not apply to the {:?} scheme",
                    self.adversary.name(),
                    self.scheme
                ));
            }
        }
        if let AttackStrategy::BeamSplit { detector, .. } = &self.adversary {
            if !(detector.efficiency > 0.0 && detector.efficiency <= 1.0) {
                return bad("adversary detector efficiency outside (0, 1]".into());
            }
        }
        Ok(())
    }

    /// Build the code. Diffusive matrices from a seed are generated here, once.
    pub fn build_code(&self) -> Result<CodeFamily, ConfigError> {
        Ok(match &self.code {
            CodeSpec::Mm {} => MmCodec::new(self.n).into(),
            CodeSpec::MmChecksum {} => MmChecksumCodec::new(self.n).into(),
            CodeSpec::Diffusive { matrix } => {
                let a = match matrix {
                    MatrixSource::Seed(s) => {
                        gen_nonsingular_gf2(self.n, &mut RngStream::new(*s, MATRIX_STREAM))?
                    }
                    MatrixSource::Pinned(text) => Gf2Matrix::from_hex_text(text)?,
                };
                let code = DiffusiveCodec::new(a)?;
                if code.message_len() != self.n {
                    return Err(ConfigError::Invalid(format!(
                        "pinned matrix is for n = {}, scenario has n = {}",
                        code.message_len(),
                        self.n
                    )));
                }
                code.into()
            }
            CodeSpec::Conv { threshold } => ConvCodec::new(self.n, *threshold).into(),
        })
    }
}

/// Generate a diffusive matrix the same way a seeded scenario does.
pub fn matrix_from_seed(n: usize, seed: u64) -> Result<Gf2Matrix, CodeError> {
    gen_nonsingular_gf2(n, &mut RngStream::new(seed, MATRIX_STREAM))
}

fn unknown_field(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> &'static str {
        r#"{
            "scheme": "single_photon",
            "code": {"type": "mm"},
            "n": 8,
            "adversary": {"type": "intercept_resend", "positions": "all", "basis_guess": "random"},
            "trials": 100,
            "master_seed": 7,
            "key_pool": [{"id": 1, "first_user": "A"}, {"id": 2, "first_user": "B"}],
            "message_model": "uniform_random",
            "detector": {"efficiency": 0.3},
            "messages_per_trial": 1
        }"#
    }

    #[test]
    fn parses_and_round_trips() {
        let c = ScenarioConfig::from_json(sample()).unwrap();
        c.validate().unwrap();
        assert_eq!(ScenarioConfig::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn unknown_field_is_named() {
        let text = sample().replace("\"trials\"", "\"trails\"");
        match ScenarioConfig::from_json(&text) {
            Err(ConfigError::UnknownField(f)) => assert_eq!(f, "trails"),
            other => panic!("{other:?}"),
        }
        let text = sample().replace("{\"efficiency\": 0.3}", "{\"efficiency\": 0.3, \"gain\": 2}");
        assert!(matches!(
            ScenarioConfig::from_json(&text),
            Err(ConfigError::UnknownField(f)) if f == "gain"
        ));
    }

    #[test]
    fn missing_field_rejected() {
        let text = sample().replace("\"messages_per_trial\": 1", "\"x\": 1");
        assert!(ScenarioConfig::from_json(&text).is_err());
    }

    #[test]
    fn scheme_mismatch_rejected() {
        let text = sample().replace(
            r#"{"type": "intercept_resend", "positions": "all", "basis_guess": "random"}"#,
            r#"{"type": "beam_split", "detector": {"efficiency": 1.0}, "ambiguous_policy": "suppress_pulse"}"#,
        );
        let c = ScenarioConfig::from_json(&text).unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::Invalid(_))));
    }
}
