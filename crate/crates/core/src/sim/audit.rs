//! Recompute metrics from a trace and check protocol invariants on it.

use std::collections::{BTreeMap, HashSet};

use serde_json::Value;

use super::session::Tally;
use crate::protocol::{Role, TraceEvent};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub tally: Tally,
    pub violations: Vec<String>,
    pub keys_made: u64,
    /// Transfers per key announced by each trial's session.
    pub transfers_per_key: Vec<u64>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn u(detail: &Value, field: &str) -> u64 {
    detail[field].as_u64().unwrap_or(0)
}

fn role(v: &Value) -> Option<Role> {
    serde_json::from_value(v.clone()).ok()
}

#[derive(Default)]
struct TrialState {
    trial: u64,
    n: u64,
    transfers_per_key: u64,
    next_user: BTreeMap<u32, Role>,
    dead: HashSet<u32>,
    /// Accepted transfers each party has deposited since its last new key.
    pending: [u64; 2],
    /// New keys announced by one party and not yet by the other.
    announced: BTreeMap<u32, Option<Role>>,
    keys_changed: u64,
    learned: u64,
    tally: Tally,
}

impl TrialState {
    fn violation(&self, step: u64, what: String) -> String {
        format!("trial {} step {}: {}", self.trial, step, what)
    }
}

/// Events must be grouped by trial, in step order within each trial, as
/// written by the runner.
pub fn audit_trace(events: &[TraceEvent]) -> AuditReport {
    let mut report = AuditReport::default();
    let mut state: Option<TrialState> = None;
    for e in events {
        if state.as_ref().map_or(true, |s| s.trial != e.trial) {
            if let Some(s) = state.take() {
                finish(s, &mut report);
            }
            state = Some(TrialState {
                trial: e.trial,
                ..TrialState::default()
            });
        }
        let s = state.as_mut().expect("trial state");
        let d = &e.detail;
        match e.event.as_str() {
            "init" => {
                s.n = u(d, "n");
                s.transfers_per_key = u(d, "transfers_per_key");
                report.transfers_per_key.push(s.transfers_per_key);
                for k in d["keys"].as_array().into_iter().flatten() {
                    let id = k["id"].as_u64().unwrap_or(0) as u32;
                    if let Some(r) = role(&k["first_user"]) {
                        s.next_user.insert(id, r);
                    }
                }
            }
            "send" => {
                let id = e.key_id.unwrap_or(0);
                let sender = role(&d["sender"]);
                if s.dead.contains(&id) {
                    let v = s.violation(e.step, format!("key {id} used after it was retired or compromised"));
                    report.violations.push(v);
                }
                if sender != s.next_user.get(&id).copied() {
                    let v = s.violation(e.step, format!("key {id} sent by {sender:?} out of turn"));
                    report.violations.push(v);
                }
            }
            "verdict" => {
                let id = e.key_id.unwrap_or(0);
                let accepted = d["verdict"] == "accept";
                if accepted {
                    let sender = role(&d["sender"]);
                    match s.next_user.get_mut(&id) {
                        Some(next) if Some(*next) == sender => *next = next.other(),
                        _ => {
                            let v = s.violation(e.step, format!("accepted use of key {id} breaks alternation"));
                            report.violations.push(v);
                        }
                    }
                }
                if d["deposited"] == true {
                    s.pending[0] += 1;
                    s.pending[1] += 1;
                }
                if d["primary"] == true {
                    let t = &mut s.tally;
                    t.transmissions += 1;
                    t.detected += u64::from(!accepted);
                    t.accepted += u64::from(accepted);
                    t.altered += u64::from(d["altered"] == true);
                    t.bits_compared += u(d, "bits_compared");
                    t.bit_errors += u(d, "bit_errors");
                    t.erasures += u(d, "erasures");
                    t.positions += u(d, "positions");
                }
            }
            "key_change" => {
                s.dead.insert(e.key_id.unwrap_or(0));
                s.keys_changed += 1;
            }
            "replenish" => {
                let id = e.key_id.unwrap_or(0);
                let idx = usize::from(e.actor == "B");
                if s.pending[idx] != s.transfers_per_key {
                    let v = s.violation(
                        e.step,
                        format!(
                            "key {id} assembled by {} after {} transfers, expected {}",
                            e.actor, s.pending[idx], s.transfers_per_key
                        ),
                    );
                    report.violations.push(v);
                }
                if u(d, "bits_consumed") != s.transfers_per_key * s.n {
                    let v = s.violation(e.step, format!("key {id} consumed {} bits", u(d, "bits_consumed")));
                    report.violations.push(v);
                }
                s.pending[idx] = s.pending[idx].saturating_sub(s.transfers_per_key);
                let first = role(&d["first_user"]);
                if idx == 0 {
                    report.keys_made += 1;
                }
                match s.announced.remove(&id) {
                    None => {
                        if s.next_user.contains_key(&id) || s.dead.contains(&id) {
                            let v = s.violation(e.step, format!("key id {id} reissued"));
                            report.violations.push(v);
                        }
                        if let Some(r) = first {
                            s.next_user.insert(id, r);
                        }
                        s.announced.insert(id, first);
                    }
                    Some(other) if other != first => {
                        let v = s.violation(e.step, format!("parties disagree on new key {id}"));
                        report.violations.push(v);
                    }
                    Some(_) => {}
                }
            }
            "adversary" => {
                let t = &mut s.tally;
                t.adversary_reads += u(d, "reads");
                t.adversary_read_errors += u(d, "read_errors");
                t.pulses_split += u(d, "pulses");
                t.unambiguous += u(d, "unambiguous");
                s.learned += u(d, "learned");
            }
            _ => {}
        }
    }
    if let Some(s) = state.take() {
        finish(s, &mut report);
    }
    report
}

fn finish(mut s: TrialState, report: &mut AuditReport) {
    for id in s.announced.keys() {
        report
            .violations
            .push(format!("trial {}: key {id} assembled by only one party", s.trial));
    }
    for (idx, &p) in s.pending.iter().enumerate() {
        if p >= s.transfers_per_key.max(1) {
            report.violations.push(format!(
                "trial {}: party {} holds {p} transfers without assembling a key",
                s.trial,
                if idx == 0 { "A" } else { "B" }
            ));
        }
    }
    s.tally.keys_changed = s.keys_changed;
    s.tally.learned_bits = s.learned;
    s.tally.keys_made = 0;
    s.tally.close_trial(s.keys_changed, s.learned);
    report.tally.merge(&s.tally);
}
