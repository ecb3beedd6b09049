use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One protocol event. Serialized as a single JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEvent {
    pub trial: u64,
    pub step: u64,
    pub actor: String,
    pub key_id: Option<u32>,
    pub event: String,
    pub detail: Value,
}

/// Append-only event log for one trial (or a concatenation of trials).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceLog {
    trial: u64,
    step: u64,
    enabled: bool,
    events: Vec<TraceEvent>,
}

impl TraceLog {
    pub fn new(trial: u64) -> Self {
        Self {
            trial,
            step: 0,
            enabled: true,
            events: Vec::new(),
        }
    }

    /// A log that drops everything; used when no trace was requested.
    pub fn disabled(trial: u64) -> Self {
        Self {
            enabled: false,
            ..Self::new(trial)
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn record(&mut self, actor: impl Into<String>, key_id: Option<u32>, event: &str, detail: Value) {
        if self.enabled {
            self.events.push(TraceEvent {
                trial: self.trial,
                step: self.step,
                actor: actor.into(),
                key_id,
                event: event.to_string(),
                detail,
            });
        }
        self.step += 1;
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }

    pub fn write_ndjson<W: Write>(events: &[TraceEvent], mut out: W) -> io::Result<()> {
        for e in events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_ndjson<R: BufRead>(input: R) -> io::Result<Vec<TraceEvent>> {
        input
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|l| {
                let l = l?;
                serde_json::from_str(&l).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
            })
            .collect()
    }
}
