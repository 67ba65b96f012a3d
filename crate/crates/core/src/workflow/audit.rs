//! Append-only audit log with a SHA-256 hash chain.
//!
//! Each event's hash covers the compact, key-sorted JSON of every field
//! except `event_hash` itself, including `prev_hash`. The first event links
//! to the all-zero digest.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::lifecycle::LifecycleState;
use crate::hash::Digest;

pub const SYSTEM_ACTOR: &str = "system";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditEvent {
    pub seq: u64,
    pub actor: String,
    pub action: String,
    pub app_id: Option<String>,
    pub version_no: Option<u32>,
    pub prev_state: Option<LifecycleState>,
    pub next_state: Option<LifecycleState>,
    pub detail: Option<String>,
    pub at: DateTime<Utc>,
    pub prev_hash: Digest,
    pub event_hash: Digest,
}

/// Fields supplied by the caller; sequencing and hashing are filled in on append.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AuditDraft {
    pub actor: String,
    pub action: String,
    pub app_id: Option<String>,
    pub version_no: Option<u32>,
    pub prev_state: Option<LifecycleState>,
    pub next_state: Option<LifecycleState>,
    pub detail: Option<String>,
}

impl AuditDraft {
    pub fn new(actor: impl Into<String>, action: impl Into<String>) -> Self {
        AuditDraft {
            actor: actor.into(),
            action: action.into(),
            ..Default::default()
        }
    }

    pub fn version(mut self, app_id: &str, version_no: u32) -> Self {
        self.app_id = Some(app_id.to_string());
        self.version_no = Some(version_no);
        self
    }

    pub fn app(mut self, app_id: &str) -> Self {
        self.app_id = Some(app_id.to_string());
        self
    }

    pub fn states(mut self, prev: Option<LifecycleState>, next: LifecycleState) -> Self {
        self.prev_state = prev;
        self.next_state = Some(next);
        self
    }

    pub fn detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Seal the draft into the event that follows `prev` in the chain.
    pub fn seal(self, seq: u64, prev_hash: Digest, at: DateTime<Utc>) -> AuditEvent {
        let mut event = AuditEvent {
            seq,
            actor: self.actor,
            action: self.action,
            app_id: self.app_id,
            version_no: self.version_no,
            prev_state: self.prev_state,
            next_state: self.next_state,
            detail: self.detail,
            at,
            prev_hash,
            event_hash: Digest::ZERO,
        };
        event.event_hash = event.compute_hash();
        event
    }
}

impl AuditEvent {
    /// Compact JSON of every field except `event_hash`, keys sorted.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut value = serde_json::to_value(self).expect("audit event serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("event_hash");
        }
        serde_json::to_vec(&value).expect("value serializes")
    }

    pub fn compute_hash(&self) -> Digest {
        Digest::of(&self.canonical_bytes())
    }

    /// One export line (no trailing newline): compact key-sorted JSON of all fields.
    pub fn to_line(&self) -> String {
        let value = serde_json::to_value(self).expect("audit event serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// Strict parse: the line must be exactly the canonical rendering of
    /// the event it decodes to.
    pub fn from_line(line: &str) -> Option<AuditEvent> {
        let event: AuditEvent = serde_json::from_str(line).ok()?;
        (event.to_line() == line).then_some(event)
    }

    pub fn is_transition(&self) -> bool {
        self.next_state.is_some() && self.version_no.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainVerdict {
    pub ok: bool,
    pub first_bad_seq: Option<u64>,
    pub checked: u64,
}

impl ChainVerdict {
    fn good(checked: u64) -> Self {
        ChainVerdict {
            ok: true,
            first_bad_seq: None,
            checked,
        }
    }

    fn bad(seq: u64, checked: u64) -> Self {
        ChainVerdict {
            ok: false,
            first_bad_seq: Some(seq),
            checked,
        }
    }
}

/// Verify a run of events that starts right after `anchor` (the all-zero
/// digest for a chain from genesis) at sequence number `first_seq`.
pub fn verify_segment(events: &[AuditEvent], anchor: Digest, first_seq: u64) -> ChainVerdict {
    let mut expected_prev = anchor;
    for (i, event) in events.iter().enumerate() {
        let seq = first_seq + i as u64;
        if event.seq != seq || event.prev_hash != expected_prev || event.compute_hash() != event.event_hash {
            return ChainVerdict::bad(seq, i as u64);
        }
        expected_prev = event.event_hash;
    }
    ChainVerdict::good(events.len() as u64)
}

/// Verify a chain from genesis.
pub fn verify_audit_chain(events: &[AuditEvent]) -> ChainVerdict {
    verify_segment(events, Digest::ZERO, 1)
}

/// Verify an export (one event per line) from genesis. A line that does
/// not decode canonically counts as bad at its position.
pub fn verify_export(text: &str) -> ChainVerdict {
    let mut expected_prev = Digest::ZERO;
    let mut checked = 0;
    for (i, line) in text.lines().enumerate() {
        let seq = i as u64 + 1;
        let Some(event) = AuditEvent::from_line(line) else {
            return ChainVerdict::bad(seq, checked);
        };
        if event.seq != seq || event.prev_hash != expected_prev || event.compute_hash() != event.event_hash {
            return ChainVerdict::bad(seq, checked);
        }
        expected_prev = event.event_hash;
        checked += 1;
    }
    ChainVerdict::good(checked)
}

pub fn export_lines(events: &[AuditEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_line());
        out.push('\n');
    }
    out
}

/// In-memory chain head plus events.
#[derive(Debug, Clone, Default)]
pub struct AuditLog {
    events: Vec<AuditEvent>,
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[AuditEvent] {
        &self.events
    }

    pub fn head(&self) -> Digest {
        self.events.last().map(|e| e.event_hash).unwrap_or(Digest::ZERO)
    }

    pub fn next_seq(&self) -> u64 {
        self.events.len() as u64 + 1
    }

    pub fn append(&mut self, draft: AuditDraft, at: DateTime<Utc>) -> &AuditEvent {
        let event = draft.seal(self.next_seq(), self.head(), at);
        self.events.push(event);
        self.events.last().expect("just pushed")
    }

    /// Accept an already sealed event, e.g. during recovery. Refuses events
    /// that do not extend the chain.
    pub fn push_sealed(&mut self, event: AuditEvent) -> Result<(), AuditEvent> {
        if event.seq != self.next_seq()
            || event.prev_hash != self.head()
            || event.compute_hash() != event.event_hash
        {
            return Err(event);
        }
        self.events.push(event);
        Ok(())
    }

    pub fn since(&self, from_seq: u64) -> &[AuditEvent] {
        let start = (from_seq.max(1) - 1).min(self.events.len() as u64) as usize;
        &self.events[start..]
    }

    pub fn verify(&self) -> ChainVerdict {
        verify_audit_chain(&self.events)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("audit event {seq}: recorded prev_state {recorded:?} but replay has {replayed:?}")]
pub struct ReplayMismatch {
    pub seq: u64,
    pub recorded: Option<LifecycleState>,
    pub replayed: Option<LifecycleState>,
}

/// Rebuild every version's state by replaying the transitions in the log.
pub fn replay_states(
    events: &[AuditEvent],
) -> Result<BTreeMap<(String, u32), LifecycleState>, ReplayMismatch> {
    let mut states: BTreeMap<(String, u32), LifecycleState> = BTreeMap::new();
    for e in events.iter().filter(|e| e.is_transition()) {
        let (Some(app), Some(no), Some(next)) = (&e.app_id, e.version_no, e.next_state) else {
            continue;
        };
        let key = (app.clone(), no);
        let current = states.get(&key).copied();
        if current != e.prev_state {
            return Err(ReplayMismatch {
                seq: e.seq,
                recorded: e.prev_state,
                replayed: current,
            });
        }
        states.insert(key, next);
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn at(s: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_736_154_000 + s, 0).unwrap()
    }

    fn sample_log(n: usize) -> AuditLog {
        let mut log = AuditLog::new();
        log.append(
            AuditDraft::new("binita", "submit").version("app-1", 1).states(None, LifecycleState::Submitted),
            at(0),
        );
        for i in 1..n {
            log.append(AuditDraft::new(SYSTEM_ACTOR, "note").detail(format!("event {i}")), at(i as i64));
        }
        log
    }

    #[test]
    fn first_event_links_to_zero_digest() {
        let log = sample_log(1);
        assert_eq!(log.events()[0].prev_hash, Digest::ZERO);
        assert_eq!(log.events()[0].seq, 1);
        assert!(log.verify().ok);
    }

    #[test]
    fn mutated_event_is_located() {
        let log = sample_log(6);
        let mut events = log.events().to_vec();
        events[3].actor = "mallory".into();
        let verdict = verify_audit_chain(&events);
        assert_eq!(verdict.first_bad_seq, Some(4));
    }

    #[test]
    fn export_round_trip_and_byte_flip() {
        let log = sample_log(5);
        let text = export_lines(log.events());
        assert!(verify_export(&text).ok);
        assert_eq!(verify_export(&text).checked, 5);

        let lines: Vec<&str> = text.lines().collect();
        let offset: usize = lines[..2].iter().map(|l| l.len() + 1).sum::<usize>() + 10;
        let mut bytes = text.into_bytes();
        bytes[offset] ^= 0x01;
        let verdict = verify_export(&String::from_utf8_lossy(&bytes));
        assert!(!verdict.ok);
        assert!(verdict.first_bad_seq.unwrap() <= 3);
    }

    #[test]
    fn non_canonical_line_is_rejected() {
        let log = sample_log(1);
        let line = log.events()[0].to_line();
        let spaced = line.replacen(":", ": ", 1);
        assert!(AuditEvent::from_line(&line).is_some());
        assert!(AuditEvent::from_line(&spaced).is_none());
    }

    #[test]
    fn push_sealed_refuses_broken_links() {
        let log = sample_log(3);
        let mut fresh = AuditLog::new();
        assert!(fresh.push_sealed(log.events()[1].clone()).is_err());
        for e in log.events() {
            fresh.push_sealed(e.clone()).unwrap();
        }
        assert_eq!(fresh.head(), log.head());
    }

    #[test]
    fn segment_verification_from_anchor() {
        let log = sample_log(5);
        let tail = log.since(3);
        assert_eq!(tail[0].seq, 3);
        assert!(verify_segment(tail, tail[0].prev_hash, 3).ok);
        assert!(!verify_segment(tail, Digest::ZERO, 3).ok);
    }

    #[test]
    fn replay_detects_inconsistent_prev_state() {
        let mut log = AuditLog::new();
        log.append(AuditDraft::new("a", "submit").version("x", 1).states(None, LifecycleState::Submitted), at(0));
        log.append(
            AuditDraft::new(SYSTEM_ACTOR, "validate")
                .version("x", 1)
                .states(Some(LifecycleState::Submitted), LifecycleState::Validated),
            at(1),
        );
        let states = replay_states(log.events()).unwrap();
        assert_eq!(states[&("x".to_string(), 1)], LifecycleState::Validated);

        log.append(
            AuditDraft::new(SYSTEM_ACTOR, "sandbox_pass")
                .version("x", 1)
                .states(Some(LifecycleState::SandboxRunning), LifecycleState::SandboxPassed),
            at(2),
        );
        assert_eq!(replay_states(log.events()).unwrap_err().seq, 3);
    }
}
