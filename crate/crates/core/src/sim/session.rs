use serde::{Deserialize, Serialize};
use serde_json::json;

use super::channel::{transmit, ChannelOutput, SchemeMismatch};
use crate::adversary::{
    confirm_guesses, AdversaryKnowledge, AttackStrategy, Emission, GenerationRun, KnowledgeEntry,
};
use crate::bits::Bitstring;
use crate::codes::{CodeFamily, Codec};
use crate::protocol::{
    faint_decode, faint_encode, strong_decode, strong_encode, DecodeReport, Evidence, KeyDescriptor,
    KeyEvent, KeyPool, KeyRecord, PartyState, ProtocolError, ReplenishPlan, Role, Scheme, TraceLog,
    Transmission, Verdict, DEFAULT_MISSING_ALPHA,
};
use crate::quantum::DetectorModel;
use crate::rng::RngStream;

/// Counters from which every summary metric is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub trials: u64,
    pub transmissions: u64,
    pub detected: u64,
    pub accepted: u64,
    pub altered: u64,
    pub bits_compared: u64,
    pub bit_errors: u64,
    pub positions: u64,
    pub erasures: u64,
    pub adversary_reads: u64,
    pub adversary_read_errors: u64,
    pub pulses_split: u64,
    pub unambiguous: u64,
    pub keys_changed: u64,
    pub keys_changed_sq: u128,
    pub learned_bits: u64,
    pub learned_sq: u128,
    pub keys_made: u64,
}

impl Tally {
    pub fn merge(&mut self, o: &Tally) {
        self.trials += o.trials;
        self.transmissions += o.transmissions;
        self.detected += o.detected;
        self.accepted += o.accepted;
        self.altered += o.altered;
        self.bits_compared += o.bits_compared;
        self.bit_errors += o.bit_errors;
        self.positions += o.positions;
        self.erasures += o.erasures;
        self.adversary_reads += o.adversary_reads;
        self.adversary_read_errors += o.adversary_read_errors;
        self.pulses_split += o.pulses_split;
        self.unambiguous += o.unambiguous;
        self.keys_changed += o.keys_changed;
        self.keys_changed_sq += o.keys_changed_sq;
        self.learned_bits += o.learned_bits;
        self.learned_sq += o.learned_sq;
        self.keys_made += o.keys_made;
    }

    /// Close one trial whose per-trial counts were accumulated in `self`.
    pub fn close_trial(&mut self, keys_changed: u64, learned: u64) {
        self.trials += 1;
        self.keys_changed_sq += u128::from(keys_changed).pow(2);
        self.learned_sq += u128::from(learned).pow(2);
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Scheme(#[from] SchemeMismatch),
}

/// A transmission on its way, before the channel acts on it.
#[derive(Debug, Clone)]
pub struct Outgoing {
    pub sender: Role,
    pub key: KeyRecord,
    pub message: Bitstring,
    pub transmission: Transmission,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeOutcome {
    pub sender: Role,
    pub key_id: u32,
    pub verdict: Verdict,
    pub learned: Vec<(usize, bool)>,
}

/// Two parties, their shared code, and everything that happens between them
/// in one episode.
#[derive(Debug, Clone)]
pub struct Session {
    pub a: PartyState,
    pub b: PartyState,
    pub code: CodeFamily,
    pub scheme: Scheme,
    pub detector: DetectorModel,
    pub plan: ReplenishPlan,
    pub trace: TraceLog,
    pub knowledge: AdversaryKnowledge,
    pub tally: Tally,
}

impl Session {
    /// Both parties start from the same random keys, drawn from `rng`.
    pub fn new(
        code: CodeFamily,
        scheme: Scheme,
        detector: DetectorModel,
        descriptors: &[KeyDescriptor],
        trace: TraceLog,
        rng: &mut RngStream,
    ) -> Result<Self, ProtocolError> {
        let n = code.message_len();
        let key_len = code.codeword_len();
        let pool = KeyPool::from_descriptors(descriptors, key_len, rng)?;
        let plan = ReplenishPlan::new(n, key_len);
        let mut s = Self {
            a: PartyState::new(Role::A, pool.clone(), scheme, n),
            b: PartyState::new(Role::B, pool, scheme, n),
            code,
            scheme,
            detector,
            plan,
            trace,
            knowledge: AdversaryKnowledge::new(),
            tally: Tally::default(),
        };
        let keys: Vec<_> = descriptors
            .iter()
            .map(|d| json!({"id": d.id, "first_user": d.first_user}))
            .collect();
        s.trace.record(
            "session",
            None,
            "init",
            json!({
                "n": n,
                "key_len": key_len,
                "scheme": scheme,
                "code": s.code.name(),
                "transfers_per_key": plan.transfers_per_key(),
                "keys": keys,
            }),
        );
        Ok(s)
    }

    pub fn message_len(&self) -> usize {
        self.code.message_len()
    }

    pub fn party(&self, role: Role) -> &PartyState {
        match role {
            Role::A => &self.a,
            Role::B => &self.b,
        }
    }

    fn party_mut(&mut self, role: Role) -> &mut PartyState {
        match role {
            Role::A => &mut self.a,
            Role::B => &mut self.b,
        }
    }

    /// The preferred party sends if it holds a usable key, otherwise the other.
    pub fn choose_sender(&self, preferred: Role) -> Result<(Role, u32), ProtocolError> {
        self.party(preferred)
            .key_select()
            .map(|id| (preferred, id))
            .or_else(|_| {
                self.party(preferred.other())
                    .key_select()
                    .map(|id| (preferred.other(), id))
            })
    }

    pub fn send(&mut self, preferred: Role, message: &Bitstring) -> Result<Outgoing, ProtocolError> {
        let (sender, id) = self.choose_sender(preferred)?;
        let scheme = self.scheme;
        let code = &self.code;
        let party = match sender {
            Role::A => &mut self.a,
            Role::B => &mut self.b,
        };
        let key = party.sending_key(id)?;
        let transmission = match (scheme, code) {
            (Scheme::FaintPulse, CodeFamily::Conv(c)) => faint_encode(message, key, sender, c)?,
            (Scheme::FaintPulse, _) => panic!("faint-pulse sessions need the conv code"),
            (Scheme::SinglePhoton, c) => strong_encode(message, key, sender, c)?,
        };
        let key = key.clone();
        self.party_mut(sender).counters.sent += 1;
        self.trace.record(
            sender.to_string(),
            Some(id),
            "send",
            json!({"sender": sender, "uses": key.uses}),
        );
        Ok(Outgoing {
            sender,
            key,
            message: message.clone(),
            transmission,
        })
    }

    fn decode(&self, receiver: Role, t: Transmission, rng: &mut RngStream) -> Result<DecodeReport, ProtocolError> {
        let key = self.party(receiver).receiving_key(t.key_id)?;
        match (&self.code, self.scheme) {
            (CodeFamily::Conv(c), Scheme::FaintPulse) => {
                faint_decode(t, key, c, self.detector, DEFAULT_MISSING_ALPHA, rng)
            }
            (code, _) => strong_decode(t, key, code, rng),
        }
    }

    /// Both parties apply a verdict on `key_id`; key retirements and
    /// compromises are traced once.
    fn settle(&mut self, key_id: u32, verdict: &Verdict) -> Result<(), ProtocolError> {
        let ev = self.a.apply_verdict(key_id, verdict)?;
        let ev_b = self.b.apply_verdict(key_id, verdict)?;
        debug_assert_eq!(ev, ev_b);
        if ev != KeyEvent::Toggled {
            self.tally.keys_changed += 1;
            self.trace
                .record("session", Some(key_id), "key_change", json!({"event": ev}));
        }
        Ok(())
    }

    fn replenish(&mut self, sender: Role, sent: &Bitstring, received: &Bitstring) {
        let plan = self.plan;
        for (role, bits) in [(sender, sent), (sender.other(), received)] {
            let made = self.party_mut(role).pool.deposit_fresh(bits, plan);
            for k in made {
                if role == Role::A {
                    self.tally.keys_made += 1;
                }
                self.trace.record(
                    role.to_string(),
                    Some(k.id),
                    "replenish",
                    json!({
                        "first_user": k.first_user,
                        "bits_consumed": plan.bits_per_key(),
                        "transfers": plan.transfers_per_key(),
                    }),
                );
            }
        }
    }

    /// Deliver what came out of the channel and settle the outcome on both sides.
    pub fn receive(
        &mut self,
        out: Outgoing,
        channel: ChannelOutput,
        rng: &mut RngStream,
    ) -> Result<ExchangeOutcome, ProtocolError> {
        let Outgoing {
            sender,
            key,
            message,
            ..
        } = out;
        let receiver = sender.other();
        let n = self.message_len();
        self.tally.transmissions += 1;

        let truth = &key.pad ^ &self.code.encode(&message);
        let tx = self.knowledge.transmission();
        let (mut reads, mut read_errors) = (0u64, 0u64);
        let mut entries = Vec::new();
        for e in self.knowledge.for_transmission(tx) {
            if let KnowledgeEntry::Measured { position, value, .. } = e {
                reads += 1;
                read_errors += u64::from(truth[*position] != *value);
            }
            entries.push(e.clone());
        }
        let (pulses, unambiguous) = channel
            .beamsplit
            .map_or((0, 0), |s| (s.pulses, s.unambiguous));
        self.tally.adversary_reads += reads;
        self.tally.adversary_read_errors += read_errors;
        self.tally.pulses_split += pulses;
        self.tally.unambiguous += unambiguous;

        let (verdict, report) = match channel.delivered {
            None => (Verdict::MissingTransmission, None),
            Some(t) if t.key_id == key.id => {
                let r = self.decode(receiver, t, rng)?;
                (r.verdict.clone(), Some(r))
            }
            Some(t) => {
                // the genuine transmission never arrived; a forgery names another key
                let forged_id = t.key_id;
                match self.decode(receiver, t, rng) {
                    Ok(r) => {
                        self.trace.record(
                            receiver.to_string(),
                            Some(forged_id),
                            "verdict",
                            json!({
                                "sender": sender,
                                "primary": false,
                                "verdict": r.verdict.label(),
                                "deposited": false,
                            }),
                        );
                        self.settle(forged_id, &r.verdict)?;
                    }
                    Err(e) => self.trace.record(
                        receiver.to_string(),
                        Some(forged_id),
                        "discard",
                        json!({"error": e.to_string()}),
                    ),
                }
                (Verdict::MissingTransmission, None)
            }
        };

        let accepted = verdict.is_accept();
        let learned = confirm_guesses(&channel.observed, &self.code, accepted, &mut self.knowledge);
        let confirmed = if accepted { channel.observed.len() } else { 0 };
        self.tally.learned_bits += learned.len() as u64;
        self.trace.record(
            "adversary",
            Some(key.id),
            "adversary",
            json!({
                "reads": reads,
                "read_errors": read_errors,
                "pulses": pulses,
                "unambiguous": unambiguous,
                "confirmed": confirmed,
                "learned": learned.len(),
                "knowledge": entries,
            }),
        );
        self.knowledge.next_transmission();

        let (mut compared, mut errors, mut erasures, mut positions) = (0u64, 0u64, 0u64, 0u64);
        if let Some(r) = &report {
            let codeword = self.code.encode(&message);
            positions = r.word.len() as u64;
            for (s, c) in r.word.symbols().iter().zip(codeword.iter()) {
                match s.bit() {
                    Some(b) => {
                        compared += 1;
                        errors += u64::from(b != c);
                    }
                    None => erasures += 1,
                }
            }
        }
        let altered = matches!(&verdict, Verdict::AcceptMessage(m) if *m != message);
        let detected = !accepted;
        self.tally.detected += u64::from(detected);
        self.tally.accepted += u64::from(accepted);
        self.tally.altered += u64::from(altered);
        self.tally.bits_compared += compared;
        self.tally.bit_errors += errors;
        self.tally.erasures += erasures;
        self.tally.positions += positions;
        let reason = match &verdict {
            Verdict::RejectEavesdrop(Evidence::Code(r)) => json!(r),
            Verdict::RejectEavesdrop(Evidence::MissingPulses) => json!("missing_pulses"),
            _ => serde_json::Value::Null,
        };
        self.trace.record(
            receiver.to_string(),
            Some(key.id),
            "verdict",
            json!({
                "sender": sender,
                "primary": true,
                "verdict": verdict.label(),
                "reason": reason,
                "altered": altered,
                "bits_compared": compared,
                "bit_errors": errors,
                "erasures": erasures,
                "positions": positions,
                "missing": report.as_ref().map_or(0, |r| r.missing),
                "conflicts": report.as_ref().map_or(0, |r| r.conflicts),
                "deposited": accepted,
            }),
        );
        self.settle(key.id, &verdict)?;
        if let Verdict::AcceptMessage(received) = &verdict {
            debug_assert_eq!(received.len(), n);
            self.replenish(sender, &message, received);
        }
        Ok(ExchangeOutcome {
            sender,
            key_id: key.id,
            verdict,
            learned,
        })
    }

    /// One full transfer: send, pass through the adversary, receive.
    pub fn exchange(
        &mut self,
        preferred: Role,
        message: &Bitstring,
        strategy: &AttackStrategy,
        rng: &mut RngStream,
    ) -> Result<ExchangeOutcome, SessionError> {
        let out = self.send(preferred, message)?;
        let channel = transmit(
            out.transmission.clone(),
            strategy,
            &out.key,
            self.message_len(),
            &mut self.knowledge,
            rng,
        )?;
        Ok(self.receive(out, channel, rng)?)
    }
}

/// Drives a [`Session`] one fresh-key transfer per generation, alternating
/// the preferred sender.
pub struct SessionRun<'a> {
    pub session: &'a mut Session,
    next: Role,
    pending: Option<Outgoing>,
}

impl<'a> SessionRun<'a> {
    pub fn new(session: &'a mut Session) -> Self {
        Self {
            session,
            next: Role::A,
            pending: None,
        }
    }
}

impl GenerationRun for SessionRun<'_> {
    fn codec(&self) -> &dyn Codec {
        &self.session.code
    }

    fn emit(&mut self, rng: &mut RngStream) -> Emission {
        let message = Bitstring::random(self.session.message_len(), rng);
        let out = self
            .session
            .send(self.next, &message)
            .expect("session has a usable key");
        self.next = self.next.other();
        let e = Emission {
            transmission: out.transmission.clone(),
            key: out.key.clone(),
            message,
        };
        self.pending = Some(out);
        e
    }

    fn deliver(&mut self, t: Transmission, rng: &mut RngStream) -> bool {
        let out = self.pending.take().expect("emit before deliver");
        let channel = ChannelOutput {
            delivered: Some(t),
            ..ChannelOutput::default()
        };
        self.session
            .receive(out, channel, rng)
            .expect("protocol step")
            .verdict
            .is_accept()
    }
}
