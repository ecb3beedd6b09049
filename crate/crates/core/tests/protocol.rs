use proptest::prelude::*;

use qpad_core::adversary::{
    beamsplit_attack, inject, intercept_resend, AdversaryKnowledge, AmbiguousPolicy, AttackStrategy,
    BasisGuess, InjectPayload, Positions,
};
use qpad_core::codes::{CodeFamily, Codec, ConvCodec, DiffusiveCodec, MmChecksumCodec, MmCodec};
use qpad_core::protocol::{
    faint_decode, faint_encode, missing_pulse_test, strong_decode, strong_encode, Evidence,
    KeyDescriptor, KeyRecord, MissingPulseTest, Role, DEFAULT_MISSING_ALPHA,
};
use qpad_core::sim::{
    audit_trace, binomial_se, matrix_from_seed, run_scenario, CodeSpec, MessageModel, ScenarioConfig,
};
use qpad_core::{Bitstring, DetectorModel, RngStream, Scheme, Verdict};

fn scenario(n: usize, code: CodeSpec, adversary: AttackStrategy, trials: u64, messages: u32, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        scheme: Scheme::SinglePhoton,
        code,
        n,
        adversary,
        trials,
        master_seed: seed,
        key_pool: vec![
            KeyDescriptor { id: 1, first_user: Role::A },
            KeyDescriptor { id: 2, first_user: Role::B },
        ],
        message_model: MessageModel::UniformRandom,
        detector: DetectorModel::reference(),
        messages_per_trial: messages,
    }
}

#[test]
fn clean_strong_round_trips() {
    let mut rng = RngStream::new(1, 0);
    let codes: Vec<CodeFamily> = vec![
        MmCodec::new(8).into(),
        MmChecksumCodec::new(8).into(),
        DiffusiveCodec::new(matrix_from_seed(8, 1).unwrap()).unwrap().into(),
    ];
    for code in &codes {
        for _ in 0..1000 {
            let m = Bitstring::random(8, &mut rng);
            let mut key = KeyRecord::random(1, code.codeword_len(), Role::A, &mut rng);
            let t = strong_encode(&m, &mut key, Role::A, code).unwrap();
            let r = strong_decode(t, &key, code, &mut rng).unwrap();
            assert_eq!(r.verdict, Verdict::AcceptMessage(m));
        }
    }
}

#[test]
fn full_interception_of_mm_n16() {
    let n = 16;
    let code = MmCodec::new(n);
    let mut rng = RngStream::new(2, 0);
    let trials = 100_000u64;
    let all: Vec<usize> = (0..2 * n).collect();
    let rejected = (0..trials)
        .filter(|_| {
            let m = Bitstring::random(n, &mut rng);
            let mut key = KeyRecord::random(1, 2 * n, Role::A, &mut rng);
            let t = strong_encode(&m, &mut key, Role::A, &code).unwrap();
            let t = intercept_resend(t, &all, &BasisGuess::Random, &mut AdversaryKnowledge::new(), &mut rng);
            !strong_decode(t, &key, &code, &mut rng).unwrap().verdict.is_accept()
        })
        .count() as f64
        / trials as f64;
    let p = 1.0 - 0.625f64.powi(16);
    assert!((rejected - p).abs() <= 3.0 * binomial_se(p, trials) + 1e-12, "{rejected} vs {p}");
}

#[test]
fn scenario_detection_rate_under_full_interception() {
    let cfg = scenario(
        8,
        CodeSpec::Mm {},
        AttackStrategy::InterceptResend { positions: Positions::All, basis_guess: BasisGuess::Random },
        50_000,
        2,
        3,
    );
    let out = run_scenario(&cfg, false).unwrap();
    let d = out.stats.metric("detection_rate").unwrap();
    let p = 1.0 - 0.625f64.powi(8);
    assert!(d.trials >= 100_000, "{}", d.trials);
    assert!((d.estimate - p).abs() <= 3.0 * binomial_se(p, d.trials), "{} vs {p}", d.estimate);
}

#[test]
fn faint_clean_channel() {
    let n = 256;
    let code = ConvCodec::with_default_threshold(n);
    let mut rng = RngStream::new(4, 0);
    let (mut accepted, mut missing, mut pulses) = (0, 0, 0);
    for _ in 0..1000 {
        let m = Bitstring::random(n, &mut rng);
        let mut key = KeyRecord::random(1, code.codeword_len(), Role::A, &mut rng);
        let t = faint_encode(&m, &mut key, Role::A, &code).unwrap();
        let r = faint_decode(t, &key, &code, DetectorModel::reference(), DEFAULT_MISSING_ALPHA, &mut rng).unwrap();
        accepted += usize::from(r.verdict == Verdict::AcceptMessage(m));
        missing += r.missing;
        pulses += code.codeword_len();
    }
    let erased = missing as f64 / pulses as f64;
    assert!(accepted >= 998, "{accepted}/1000");
    assert!((erased - 0.368).abs() <= 0.005, "{erased}");
}

#[test]
fn beam_split_with_suppression_trips_the_missing_pulse_test() {
    let n = 256;
    let code = ConvCodec::with_default_threshold(n);
    assert!(code.codeword_len() >= 1024);
    let mut rng = RngStream::new(5, 0);
    let trials = 1000;
    let caught = (0..trials)
        .filter(|_| {
            let m = Bitstring::random(n, &mut rng);
            let mut key = KeyRecord::random(1, code.codeword_len(), Role::A, &mut rng);
            let t = faint_encode(&m, &mut key, Role::A, &code).unwrap();
            let (t, _) = beamsplit_attack(
                t,
                DetectorModel::reference(),
                AmbiguousPolicy::SuppressPulse,
                &mut AdversaryKnowledge::new(),
                &mut rng,
            );
            let r = faint_decode(t, &key, &code, DetectorModel::reference(), DEFAULT_MISSING_ALPHA, &mut rng).unwrap();
            r.verdict == Verdict::RejectEavesdrop(Evidence::MissingPulses)
        })
        .count();
    assert!(caught * 1000 >= trials * 999, "{caught}/{trials}");
}

#[test]
fn random_injection_passes_mm_at_most_two_to_minus_n() {
    let n = 8;
    let code = MmCodec::new(n);
    let mut rng = RngStream::new(6, 0);
    let trials = 10_000u64;
    let accepted = (0..trials)
        .filter(|_| {
            let m = Bitstring::random(n, &mut rng);
            let mut key = KeyRecord::random(1, 2 * n, Role::A, &mut rng);
            let t = strong_encode(&m, &mut key, Role::A, &code).unwrap();
            let forged = inject(&t, key.id, &InjectPayload::Random, &mut rng);
            strong_decode(forged, &key, &code, &mut rng).unwrap().verdict.is_accept()
        })
        .count() as f64
        / trials as f64;
    // a uniformly random word passes the halves check with probability exactly 2^-n
    let bound = (0..1u32 << (2 * n)).filter(|w| w & 0xff == w >> 8).count() as f64 / (1u64 << (2 * n)) as f64;
    assert_eq!(bound, 1.0 / 256.0);
    assert!(accepted <= bound + 3.0 * binomial_se(bound, trials), "{accepted}");
}

#[test]
fn rejected_transfers_never_deposit_key_bits() {
    for (seed, adversary) in [
        AttackStrategy::InterceptResend { positions: Positions::Some(vec![0, 3]), basis_guess: BasisGuess::Random },
        AttackStrategy::Rotate90 { positions: Positions::Some(vec![1]) },
        AttackStrategy::Suppress {},
    ]
    .into_iter()
    .enumerate()
    {
        let mut cfg = scenario(8, CodeSpec::MmChecksum {}, adversary, 50, 40, seed as u64);
        cfg.key_pool.push(KeyDescriptor { id: 3, first_user: Role::A });
        let out = run_scenario(&cfg, true).unwrap();
        for e in out.trace.iter().filter(|e| e.event == "verdict") {
            if e.detail["verdict"] != "accept" {
                assert_eq!(e.detail["deposited"], false, "{e:?}");
            }
        }
        assert!(audit_trace(&out.trace).is_clean());
    }
}

#[test]
fn missing_pulse_examples() {
    assert_eq!(missing_pulse_test(368, 1000, 1e-3), MissingPulseTest::Pass);
    assert_eq!(missing_pulse_test(450, 1000, 1e-3), MissingPulseTest::Suspicious);
    assert_eq!(missing_pulse_test(0, 0, 1e-3), MissingPulseTest::Pass);
}

fn strategy() -> impl Strategy<Value = AttackStrategy> {
    prop_oneof![
        Just(AttackStrategy::Passive {}),
        Just(AttackStrategy::Suppress {}),
        Just(AttackStrategy::InterceptResend { positions: Positions::All, basis_guess: BasisGuess::Random }),
        prop::collection::vec(0usize..16, 1..4)
            .prop_map(|p| AttackStrategy::Rotate90 { positions: Positions::Some(p) }),
        (prop::option::of(1u32..5))
            .prop_map(|key_id| AttackStrategy::Inject { key_id, payload: InjectPayload::Random }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn missing_pulse_test_is_monotone(total in 1usize..3000, frac in 0.0f64..1.0) {
        let m = ((total as f64) * frac) as usize;
        if missing_pulse_test(m, total, 1e-3) == MissingPulseTest::Suspicious && m < total {
            prop_assert_eq!(missing_pulse_test(m + 1, total, 1e-3), MissingPulseTest::Suspicious);
        }
    }

    #[test]
    fn scenario_json_round_trips(adv in strategy(), n in 1usize..12, seed in any::<u64>()) {
        let cfg = scenario(n, CodeSpec::Mm {}, adv, 3, 5, seed);
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn every_run_satisfies_the_trace_invariants(adv in strategy(), n in 2usize..10, seed in any::<u64>(), keys in 1u32..5) {
        let mut cfg = scenario(n, CodeSpec::Mm {}, adv, 2, 30, seed);
        cfg.key_pool = (1..=keys)
            .map(|id| KeyDescriptor { id, first_user: if id % 2 == 0 { Role::B } else { Role::A } })
            .collect();
        let out = run_scenario(&cfg, true).unwrap();
        let report = audit_trace(&out.trace);
        prop_assert!(report.is_clean(), "{:?}", report.violations);
        prop_assert_eq!(report.keys_made, out.tally.keys_made);
        let again = run_scenario(&cfg, false).unwrap();
        prop_assert_eq!(again.stats, out.stats);
    }
}
