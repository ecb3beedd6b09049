use rayon::prelude::*;
use serde_json::json;

use super::config::{ConfigError, MessageModel, ScenarioConfig};
use super::session::{Session, SessionError, Tally};
use super::stats::{Metric, SummaryStats};
use crate::adversary::AttackStrategy;
use crate::bits::Bitstring;
use crate::codes::CodeFamily;
use crate::protocol::{ProtocolError, Role, TraceEvent, TraceLog};
use crate::rng::RngStream;

/// Label under which a trial derives the stream for its initial keys.
const KEYS_LABEL: u64 = 0x6b65_7973;

/// The stream owned by trial `t`.
pub fn trial_stream(master_seed: u64, trial: u64) -> RngStream {
    RngStream::new(master_seed, 0).derive(trial)
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub stats: SummaryStats,
    pub tally: Tally,
    pub trace: Vec<TraceEvent>,
}

/// Every metric is a function of the tally alone.
pub fn metrics_from(t: &Tally) -> Vec<Metric> {
    let mut m = vec![
        Metric::proportion("detection_rate", t.detected, t.transmissions),
        Metric::proportion("undetected_alteration_rate", t.altered, t.transmissions),
    ];
    if t.bits_compared > 0 {
        m.push(Metric::proportion("per_bit_error_rate", t.bit_errors, t.bits_compared));
    }
    if t.positions > 0 {
        m.push(Metric::proportion("erasure_rate", t.erasures, t.positions));
    }
    if t.adversary_reads > 0 {
        m.push(Metric::proportion(
            "adversary_read_error_rate",
            t.adversary_read_errors,
            t.adversary_reads,
        ));
    }
    if t.pulses_split > 0 {
        m.push(Metric::proportion("unambiguous_copy_rate", t.unambiguous, t.pulses_split));
    }
    m.push(Metric::mean("keys_changed", t.keys_changed, t.keys_changed_sq, t.trials));
    m.push(Metric::mean("learned_bits", t.learned_bits, t.learned_sq, t.trials));
    m
}

pub fn summarize(cfg: &ScenarioConfig, tally: &Tally) -> SummaryStats {
    SummaryStats {
        scenario_hash: cfg.hash(),
        seed: cfg.master_seed,
        metrics: metrics_from(tally),
    }
}

/// One episode: `messages_per_trial` transfers with alternating preferred
/// sender, ending early if both parties run out of keys.
pub fn run_trial(cfg: &ScenarioConfig, code: &CodeFamily, trial: u64, trace: bool) -> (Tally, Vec<TraceEvent>) {
    let mut rng = trial_stream(cfg.master_seed, trial);
    let log = if trace {
        TraceLog::new(trial)
    } else {
        TraceLog::disabled(trial)
    };
    let mut key_rng = rng.derive(KEYS_LABEL);
    let mut s = Session::new(code.clone(), cfg.scheme, cfg.detector, &cfg.key_pool, log, &mut key_rng)
        .expect("validated key pool");
    let active_for = match &cfg.adversary {
        AttackStrategy::GuessAndVerify { generations, .. } => *generations,
        _ => u32::MAX,
    };
    let passive = AttackStrategy::Passive {};
    for step in 0..cfg.messages_per_trial {
        let message = match &cfg.message_model {
            MessageModel::UniformRandom => Bitstring::random(cfg.n, &mut rng),
            MessageModel::Fixed(m) => m.clone(),
        };
        let preferred = if step % 2 == 0 { Role::A } else { Role::B };
        let strategy = if step < active_for { &cfg.adversary } else { &passive };
        match s.exchange(preferred, &message, strategy, &mut rng) {
            Ok(_) => {}
            Err(SessionError::Protocol(ProtocolError::KeysExhausted)) => {
                s.trace.record("session", None, "exhausted", json!({"step": step}));
                break;
            }
            Err(e) => panic!("trial {trial}: {e}"),
        }
    }
    let mut tally = s.tally;
    tally.close_trial(tally.keys_changed, tally.learned_bits);
    (tally, s.trace.into_events())
}

pub fn run_scenario(cfg: &ScenarioConfig, trace: bool) -> Result<ScenarioOutput, ConfigError> {
    cfg.validate()?;
    let code = cfg.build_code()?;
    let results: Vec<(Tally, Vec<TraceEvent>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &code, t, trace))
        .collect();
    let mut tally = Tally::default();
    let mut events = Vec::new();
    for (t, e) in results {
        tally.merge(&t);
        events.extend(e);
    }
    Ok(ScenarioOutput {
        stats: summarize(cfg, &tally),
        tally,
        trace: events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(adversary: &str, trials: u64) -> ScenarioConfig {
        ScenarioConfig::from_json(&format!(
            r#"{{
            "scheme": "single_photon", "code": {{"type": "mm"}}, "n": 8,
            "adversary": {adversary}, "trials": {trials}, "master_seed": 3,
            "key_pool": [{{"id": 1, "first_user": "A"}}, {{"id": 2, "first_user": "B"}}],
            "message_model": "uniform_random", "detector": {{"efficiency": 0.3}},
            "messages_per_trial": 4
        }}"#
        ))
        .unwrap()
    }

    #[test]
    fn passive_detects_nothing() {
        let out = run_scenario(&cfg(r#"{"type": "passive"}"#, 200), false).unwrap();
        let d = out.stats.metric("detection_rate").unwrap();
        assert_eq!((d.estimate, d.trials), (0.0, 800));
        assert_eq!(out.stats.metric("per_bit_error_rate").unwrap().estimate, 0.0);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn deterministic_output() {
        let c = cfg(
            r#"{"type": "intercept_resend", "positions": "all", "basis_guess": "random"}"#,
            300,
        );
        let a = run_scenario(&c, true).unwrap();
        let b = run_scenario(&c, true).unwrap();
        assert_eq!(a.stats.to_json(), b.stats.to_json());
        assert_eq!(a.trace, b.trace);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_scenario(&c, false).unwrap());
        assert_eq!(single.stats, a.stats);
    }
}
